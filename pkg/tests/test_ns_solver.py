import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracflow import field_ops
from fracflow.analytic import AnalyticField
from fracflow.errors import CFLExceeded, ConfigError, GuardTriggered, NaNDetected
from fracflow.fields import Boundary, GridSpec, ScalarField, VectorField
from fracflow.kernel_core import unit_symbol
from fracflow.ns_solver import (
    NSConfig,
    NSState,
    convection,
    default_dt,
    initial_state,
    kinetic_energy,
    leray_project,
    ns_diagnostics,
    random_div_free,
    run_ns,
    step_ns,
    taylor_green,
)
from fracflow.verification import band_limited

G2 = math.exp(-0.5)  # mollifier symbol at |k|^2 = 2, beta = 0.5


def grid2(n=32):
    return GridSpec(2, n)


def tg_amplitude(v: VectorField) -> float:
    """Projection of the first component onto sin x cos y."""
    X, Y = v.grid.mesh()
    basis = np.sin(X) * np.cos(Y)
    return float(np.sum(v.values[0] * basis) / np.sum(basis * basis))


def test_config_validation():
    with pytest.raises(ConfigError):
        NSConfig(GridSpec(1, 32), 0.5)
    with pytest.raises(ConfigError):
        NSConfig(GridSpec(2, 32, boundary=Boundary.TRUNCATED), 0.5)
    with pytest.raises(ConfigError):
        NSConfig(grid2(), 0.5, mu=-1.0)
    with pytest.raises(ConfigError):
        NSConfig(grid2(), 0.5, viscous="triple")
    with pytest.raises(ValueError):
        NSConfig(grid2(), 1.0)


def test_leray_keeps_div_free_field():
    v = taylor_green(grid2())
    sol, p = leray_project(v, 0.5)
    assert np.max(np.abs(sol.values - v.values)) < 1e-12
    assert np.max(np.abs(p.values)) < 1e-12


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_leray_annihilates_gradients(beta):
    g = grid2()
    f = band_limited(g, seed=3)
    sol, _ = leray_project(field_ops.grad_beta(f, beta), beta)
    assert np.max(np.abs(sol.values)) < 1e-12
    # recovering f needs modes where the mollified gradient is above rounding
    f = band_limited(g, seed=3, kmax=3)
    _, p = leray_project(field_ops.grad_beta(f, beta), beta)
    assert np.max(np.abs(p.values - (f.values - f.values.mean()))) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 0.95))
def test_leray_idempotent(seed, beta):
    g = grid2(16)
    v = VectorField(g, np.random.default_rng(seed).standard_normal((2, 16, 16)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GuardTriggered)
        once, _ = leray_project(v, beta)
        twice, _ = leray_project(once, beta)
    assert np.max(np.abs(twice.values - once.values)) < 1e-14
    div = field_ops.divergence(once)
    assert np.max(np.abs(div.values)) < 1e-12


def test_leray_reports_guarded_pressure_modes():
    g = grid2(64)
    v = VectorField(g, np.random.default_rng(0).standard_normal((2, 64, 64)))
    with pytest.warns(GuardTriggered):
        _, p = leray_project(v, 0.05)
    assert p.meta["guarded_modes"] > 0
    assert np.all(np.isfinite(p.values))


def test_convection_trivial_inputs():
    g = grid2()
    assert np.all(convection(VectorField.zeros(g), 0.5).values == 0.0)
    const = VectorField(g, np.stack([np.full((32, 32), 2.0), np.full((32, 32), -1.0)]))
    assert np.max(np.abs(convection(const, 0.5).values)) < 1e-14


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.9])
def test_taylor_green_convection_is_a_gradient(beta):
    v = taylor_green(grid2())
    c = convection(v, beta)
    assert np.max(np.abs(c.values)) > 0.1
    sol, _ = leray_project(c, beta)
    assert np.max(np.abs(sol.values)) < 1e-10


def test_zero_state_stays_zero():
    cfg = NSConfig(grid2(), 0.5, initial="zero", dt=0.01, steps=5)
    result = run_ns(cfg)
    assert np.all(result.state.velocity.values == 0.0)
    assert np.all(result.state.pressure.values == 0.0)


def test_constant_force_grows_mean_linearly():
    cfg = NSConfig(grid2(16), 0.5, initial="zero", force=[AnalyticField("0.3"), AnalyticField("-0.7")],
                   dt=0.05, steps=20)
    result = run_ns(cfg)
    t = result.state.time
    mean = result.report.scalars["mean_velocity"]
    assert mean[0] == pytest.approx(0.3 * t, abs=1e-13)
    assert mean[1] == pytest.approx(-0.7 * t, abs=1e-13)
    # the mean mode carries the whole field
    assert np.max(np.abs(result.state.velocity.values[0] - 0.3 * t)) < 1e-13


def test_taylor_green_amplitude_at_unit_time():
    # TG is an exact single-shell solution, so a coarse step is still exact
    cfg = NSConfig(grid2(), 0.5, mu=0.01, dt=0.01, steps=100)
    state = run_ns(cfg).state
    assert state.time == pytest.approx(1.0)
    assert tg_amplitude(state.velocity) == pytest.approx(math.exp(-0.02 * G2), abs=1e-6)
    assert tg_amplitude(state.velocity) == pytest.approx(0.987943, abs=1e-6)
    assert np.max(np.abs(state.velocity.values - math.exp(-0.02 * G2) * taylor_green(cfg.grid).values)) < 1e-12


def test_taylor_green_energy_rate():
    report = run_ns(NSConfig(grid2(), 0.5, mu=0.01, dt=0.01, steps=100)).report
    assert report.fits["energy_decay"]["rate"] == pytest.approx(0.0242612, rel=5e-3)
    assert report.fits["energy_decay"]["rate"] == pytest.approx(0.04 * G2, rel=1e-9)
    assert report.scalars["energy_non_increasing"]
    assert report.scalars["max_divergence_residual"] < 1e-10


def test_double_smoothing_squares_the_symbol():
    report = run_ns(NSConfig(grid2(), 0.5, mu=0.01, dt=0.01, steps=50, viscous="double")).report
    assert report.fits["energy_decay"]["rate"] == pytest.approx(0.04 * G2**2, rel=1e-9)


def test_random_run_dissipates():
    cfg = NSConfig(grid2(), 0.5, mu=0.05, initial="random", seed=11, steps=40)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GuardTriggered)
        report = run_ns(cfg).report
    assert report.scalars["energy_non_increasing"]
    assert report.scalars["max_divergence_residual"] < 1e-10
    assert report.scalars["lambda_term_norm"] < 1e-10


def test_random_initial_field():
    g = grid2()
    v = random_div_free(g, seed=5, amplitude=2.0)
    assert math.sqrt(np.mean(np.sum(v.values**2, axis=0))) == pytest.approx(2.0)
    assert np.max(np.abs(field_ops.divergence(v).values)) < 1e-12
    assert np.array_equal(v.values, random_div_free(g, seed=5, amplitude=2.0).values)


def test_rates_increase_with_beta():
    rates = []
    for beta in (0.3, 0.5, 0.7, 0.9):
        report = run_ns(NSConfig(grid2(16), beta, mu=0.01, dt=0.05, steps=20)).report
        rates.append(report.fits["energy_decay"]["rate"])
        assert rates[-1] == pytest.approx(0.04 * unit_symbol(beta, 2.0), rel=1e-9)
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_diagnostics_of_zero_state():
    g = grid2()
    cfg = NSConfig(g, 0.5)
    d = ns_diagnostics(NSState(VectorField.zeros(g), ScalarField.zeros(g)), cfg)
    assert np.all(d["strain_rate"].values == 0.0)
    assert np.all(d["stress"].values == 0.0)
    for key in ("divergence_residual", "lambda_term_norm", "energy", "enstrophy", "max_speed"):
        assert d[key] == 0.0


def test_diagnostics_of_taylor_green():
    cfg = NSConfig(grid2(64), 0.5, lambda_bulk=0.3)
    d = ns_diagnostics(initial_state(cfg), cfg)
    X, Y = cfg.grid.mesh()
    lam = d["strain_rate"].values
    # the shear parts cancel; the diagonal carries the mollified gradient
    assert np.max(np.abs(lam[0, 1])) < 1e-10
    assert np.max(np.abs(lam[0, 0] - G2 * np.cos(X) * np.cos(Y))) < 1e-10
    assert np.max(np.abs(lam[1, 1] + G2 * np.cos(X) * np.cos(Y))) < 1e-10
    assert d["lambda_term_norm"] < 1e-10
    assert d["energy"] == pytest.approx(kinetic_energy(taylor_green(cfg.grid)))
    assert d["energy"] == pytest.approx(math.pi**2, rel=1e-12)
    # fractional vorticity -2 G sin x sin y
    assert d["enstrophy"] == pytest.approx(0.5 * 4 * G2**2 * math.pi**2, rel=1e-12)


def test_default_dt():
    cfg = NSConfig(grid2(64), 0.5)
    v0 = taylor_green(cfg.grid)
    assert default_dt(cfg, v0) == pytest.approx(0.5 * (2 * math.pi / 64) / 1.0)
    assert default_dt(NSConfig(grid2(64), 0.5, initial="zero"), VectorField.zeros(cfg.grid)) > 0


def test_cfl_warning():
    cfg = NSConfig(grid2(), 0.5, dt=1.0, steps=1)
    with pytest.warns(CFLExceeded):
        step_ns(initial_state(cfg), cfg)
    report = run_ns(cfg).report
    assert any(w.startswith("CFLExceeded") for w in report.warnings)


def test_nan_detected():
    cfg = NSConfig(grid2(16), 0.5, mu=0.0, initial="random", amplitude=50.0, dt=1.0, steps=200)
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        with pytest.raises(NaNDetected):
            run_ns(cfg)


def test_snapshot_callback():
    seen = []
    run_ns(NSConfig(grid2(16), 0.5, dt=0.01, steps=7, every=3), on_snapshot=lambda s, t, st: seen.append(s))
    assert seen == [0, 3, 6, 7]


def test_reports_are_deterministic():
    cfg = NSConfig(grid2(16), 0.5, initial="random", seed=2, dt=0.01, steps=10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GuardTriggered)
        a = run_ns(cfg).report.to_json()
        b = run_ns(cfg).report.to_json()
    assert a == b
