"""2D incompressible fractional Navier-Stokes on the periodic torus.

Momentum balance

    rho dv/dt = -grad_beta p + mu lap_beta v + rho b - rho (v . grad_beta) v,
    div_beta v = 0,

discretized pseudo-spectrally.  The pressure is eliminated by Leray
projection; the viscous symbol ``(mu/rho) |k|^2 G(|k|^2)`` is integrated
exactly with an integrating factor and the rest with classical RK4.  Since
``G > 0`` on every resolved mode, ``div_beta v = 0`` is the same constraint
as the classical one on the grid.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from fracflow import field_ops
from fracflow.analytic import AnalyticField, sample_vector
from fracflow.errors import CFLExceeded, ConfigError, GuardTriggered, NaNDetected
from fracflow.fields import Boundary, GridSpec, OperatorVariant, ScalarField, TensorField, VectorField, spectral
from fracflow.kernel_core import (
    SYMBOL_GUARD,
    ClassicalLimit,
    KernelDescriptor,
    NormalizationMode,
    Order,
    OrderLike,
    as_order,
    mollifier_symbol,
)
from fracflow.report import RunReport, fit_decay_rate


TAYLOR_GREEN = "taylor-green"
RANDOM_DIV_FREE = "random"


def _symbol(grid: GridSpec, beta: Order, mode: NormalizationMode) -> np.ndarray:
    ksq = spectral(grid).ksq
    if isinstance(beta, ClassicalLimit):
        return np.ones_like(ksq)
    return mollifier_symbol(KernelDescriptor.gaussian(beta, grid.ndim, mode), ksq)


def _fft(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.rfftn(values, axes=grid.axes)


def _ifft(values_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.irfftn(values_hat, s=grid.shape, axes=grid.axes)


def _project_hat(v_hat: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split ``v_hat`` into its solenoidal part and ``k . v_hat / |k|^2``."""
    k = spectral(grid).k_odd
    ksq = sum(ki * ki for ki in k)
    kdotv = sum(ki * vi for ki, vi in zip(k, v_hat))
    potential = np.divide(kdotv, ksq, out=np.zeros_like(kdotv), where=ksq > 0)
    sol = np.stack([vi - ki * potential for ki, vi in zip(k, v_hat)])
    return sol, potential


def _pressure_hat(potential: np.ndarray, symbol: np.ndarray, scale: float) -> tuple[np.ndarray, int]:
    """Invert ``i k G p_hat = k (k . v_hat)/|k|^2`` for ``p_hat``; returns the guarded count.

    ``scale`` is the largest Fourier amplitude of the projected field.
    """
    # rounding-level modes carry no pressure; dividing them by a small symbol
    # would only amplify noise
    signal = np.abs(potential) > 1e-13 * scale
    guarded = symbol < SYMBOL_GUARD
    keep = signal & ~guarded
    p_hat = np.where(keep, -1j * potential / np.where(keep, symbol, 1.0), 0.0)
    count = int(np.count_nonzero(guarded & signal))
    return p_hat, count


def leray_project(
    v: VectorField,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
) -> tuple[VectorField, ScalarField]:
    """Split ``v = v_sol + grad_beta p`` with ``v_sol`` divergence-free.

    ``p`` has zero mean.  Modes whose mollifier symbol falls below
    :data:`SYMBOL_GUARD` contribute no pressure; a :class:`GuardTriggered`
    warning reports how many.
    """
    grid = v.grid
    if grid.boundary is not Boundary.PERIODIC:
        raise ValueError("Leray projection needs a periodic grid")
    order, mode = as_order(beta), NormalizationMode.parse(mode)
    v_hat = _fft(v.values, grid)
    sol_hat, potential = _project_hat(v_hat, grid)
    p_hat, guarded = _pressure_hat(potential, _symbol(grid, order, mode), float(np.max(np.abs(v_hat), initial=0.0)))
    if guarded:
        warnings.warn(f"{guarded} modes skipped in pressure recovery", GuardTriggered, stacklevel=2)
    meta = {"operator": "leray_project", "beta": float(order), "mode": mode.value, "guarded_modes": guarded}
    return VectorField(grid, _ifft(sol_hat, grid), meta), ScalarField(grid, _ifft(p_hat, grid), dict(meta))


def convection(
    v: VectorField,
    beta: OrderLike,
    variant: OperatorVariant | str = field_ops.INSIDE,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    dealias: bool = True,
) -> VectorField:
    """``(v . grad_beta) v``, i.e. ``sum_j v_j (fractional d_j v_i)``.

    Products are formed in physical space; with ``dealias`` both factors and
    the result are truncated by the 2/3 rule.
    """
    grid = v.grid
    theta = field_ops.grad_tensor_beta(v, beta, variant, mode)  # theta[j, i] = d_j v_i
    vel, grad = v.values, theta.values
    if dealias:
        vel = field_ops.truncate(vel, grid)
        grad = field_ops.truncate(grad, grid)
    out = np.einsum("j...,ji...->i...", vel, grad)
    if dealias:
        out = field_ops.truncate(out, grid)
    return VectorField(grid, out, dict(theta.meta, operator="convection", dealias=dealias))


@dataclass
class NSConfig:
    grid: GridSpec
    beta: Order
    mode: NormalizationMode = NormalizationMode.UNIT_MASS
    mu: float = 0.01
    rho: float = 1.0
    lambda_bulk: float = 0.0
    force: Any = None
    initial: Any = TAYLOR_GREEN
    amplitude: float = 1.0
    seed: int = 0
    slope: float = -5.0 / 3.0
    dt: Optional[float] = None
    steps: int = 1000
    every: int = 10
    dealias: bool = True
    variant: OperatorVariant = field_ops.INSIDE
    # "single": mu lap_beta v (default); "double": mollified divergence of
    # the mollified stress, one extra smoothing factor
    viscous: str = "single"

    def __post_init__(self) -> None:
        self.beta = as_order(self.beta)
        self.mode = NormalizationMode.parse(self.mode)
        self.variant = OperatorVariant.parse(self.variant)
        problems = []
        if self.grid.ndim != 2 or self.grid.boundary is not Boundary.PERIODIC:
            problems.append("the Navier-Stokes solver needs a 2D periodic grid")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            problems.append(f"mu must be non-negative, got {self.mu!r}")
        if not (math.isfinite(self.rho) and self.rho > 0):
            problems.append(f"rho must be positive, got {self.rho!r}")
        if not math.isfinite(self.lambda_bulk):
            problems.append("lambda_bulk must be finite")
        if self.dt is not None and not (math.isfinite(self.dt) and self.dt > 0):
            problems.append(f"dt must be positive, got {self.dt!r}")
        if self.steps < 0:
            problems.append("steps must be non-negative")
        if self.every < 1:
            problems.append("snapshot interval must be at least 1")
        if self.viscous not in ("single", "double"):
            problems.append(f"viscous must be 'single' or 'double', got {self.viscous!r}")
        if problems:
            raise ConfigError(problems[0], problems)

    @property
    def nu(self) -> float:
        return self.mu / self.rho

    def provenance(self) -> dict:
        return {
            "beta": float(self.beta),
            "mode": self.mode.value,
            "variant": self.variant.value,
            "backend": "spectral",
            "dealias": self.dealias,
            "viscous": self.viscous,
        }


@dataclass
class NSState:
    velocity: VectorField
    pressure: ScalarField
    time: float = 0.0


def taylor_green(grid: GridSpec, amplitude: float = 1.0) -> VectorField:
    """``A (sin x cos y, -cos x sin y)`` scaled to the box's fundamental wavenumber."""
    X, Y = grid.mesh()
    kx, ky = (2.0 * math.pi / L for L in grid.length)
    return VectorField.from_components(
        grid,
        [amplitude * np.sin(kx * X) * np.cos(ky * Y), -amplitude * (kx / ky) * np.cos(kx * X) * np.sin(ky * Y)],
    )


def random_div_free(grid: GridSpec, seed: int, slope: float = -5.0 / 3.0, amplitude: float = 1.0) -> VectorField:
    """Divergence-free field with spectrum ``|k|**slope`` and rms speed ``amplitude``."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((grid.ndim,) + grid.shape)
    ksq = spectral(grid).ksq
    shape = np.where(ksq > 0, np.power(np.where(ksq > 0, ksq, 1.0), slope / 2.0), 0.0)
    v_hat = _fft(noise, grid) * shape * field_ops.dealias_mask(grid)
    sol, _ = _project_hat(v_hat, grid)
    v = _ifft(sol, grid)
    rms = math.sqrt(float(np.mean(np.sum(v * v, axis=0))))
    if rms > 0:
        v *= amplitude / rms
    return VectorField(grid, v)


def initial_velocity(cfg: NSConfig) -> VectorField:
    grid = cfg.grid
    init = cfg.initial
    if isinstance(init, VectorField):
        v = init
    elif init == TAYLOR_GREEN:
        v = taylor_green(grid, cfg.amplitude)
    elif init == RANDOM_DIV_FREE:
        v = random_div_free(grid, cfg.seed, cfg.slope, cfg.amplitude)
    elif init is None or init == "zero":
        v = VectorField.zeros(grid)
    else:
        v = sample_vector(init, grid)
    sol, _ = _project_hat(_fft(v.values, grid), grid)
    return VectorField(grid, _ifft(sol, grid))


def _force(cfg: NSConfig, t: float) -> np.ndarray | None:
    if cfg.force is None:
        return None
    if isinstance(cfg.force, VectorField):
        return cfg.force.values
    return sample_vector(cfg.force, cfg.grid, t).values


def _force_is_steady(cfg: NSConfig) -> bool:
    if cfg.force is None or isinstance(cfg.force, VectorField):
        return True
    return not any((e if isinstance(e, AnalyticField) else AnalyticField(str(e))).time_dependent for e in cfg.force)


def default_dt(cfg: NSConfig, v0: VectorField) -> float:
    """Half the advective CFL step, capped by the explicit viscous bound."""
    h = min(cfg.grid.spacing)
    vmax = float(np.max(np.sqrt(np.sum(v0.values**2, axis=0))))
    candidates = [0.5 * h / vmax] if vmax > 0 else []
    visc = float(np.max(viscous_symbol(cfg)))
    if visc > 0:
        candidates.append(2.0 / visc)
    return min(candidates) if candidates else 1e-2


def viscous_symbol(cfg: NSConfig) -> np.ndarray:
    G = _symbol(cfg.grid, cfg.beta, cfg.mode)
    ksq = spectral(cfg.grid).ksq
    return cfg.nu * ksq * (G * G if cfg.viscous == "double" else G)


class _Stepper:
    """Integrating-factor RK4 with projection after every stage."""

    def __init__(self, cfg: NSConfig, dt: float) -> None:
        self.cfg = cfg
        self.grid = cfg.grid
        self.dt = dt
        nu = viscous_symbol(cfg)
        self.E = np.exp(-nu * dt)
        self.E_half = np.exp(-nu * dt / 2.0)
        self.symbol = _symbol(cfg.grid, cfg.beta, cfg.mode)
        self.steady_force = _force_is_steady(cfg)
        self._force_hat = None
        self.guarded = 0

    def force_hat(self, t: float) -> np.ndarray | None:
        if self.steady_force and self._force_hat is not None:
            return self._force_hat
        b = _force(self.cfg, t)
        out = None if b is None else _fft(b, self.grid)
        if self.steady_force:
            self._force_hat = out
        return out

    def explicit(self, v_hat: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Projected ``b - (v . grad_beta) v`` and its gradient-part potential."""
        cfg = self.cfg
        v = VectorField(self.grid, _ifft(v_hat, self.grid))
        rhs = -_fft(convection(v, cfg.beta, cfg.variant, cfg.mode, cfg.dealias).values, self.grid)
        b_hat = self.force_hat(t)
        if b_hat is not None:
            rhs = rhs + b_hat
        return _project_hat(rhs, self.grid)

    def step(self, v_hat: np.ndarray, t: float) -> np.ndarray:
        dt, E, Eh = self.dt, self.E, self.E_half
        k1, _ = self.explicit(v_hat, t)
        k2, _ = self.explicit(Eh * (v_hat + 0.5 * dt * k1), t + 0.5 * dt)
        k3, _ = self.explicit(Eh * v_hat + 0.5 * dt * k2, t + 0.5 * dt)
        k4, _ = self.explicit(E * v_hat + dt * Eh * k3, t + dt)
        new = E * v_hat + dt / 6.0 * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)
        return _project_hat(new, self.grid)[0]

    def pressure(self, v_hat: np.ndarray, t: float) -> np.ndarray:
        rhs, potential = self.explicit(v_hat, t)
        scale = max(float(np.max(np.abs(rhs), initial=0.0)), float(np.max(np.abs(potential), initial=0.0)))
        p_hat, guarded = _pressure_hat(potential, self.symbol, scale)
        self.guarded = max(self.guarded, guarded)
        return self.cfg.rho * _ifft(p_hat, self.grid)


def step_ns(state: NSState, cfg: NSConfig, dt: float | None = None) -> NSState:
    """Advance one time step; ``dt`` defaults to ``cfg.dt`` or :func:`default_dt`."""
    dt = dt or cfg.dt or default_dt(cfg, state.velocity)
    stepper = _Stepper(cfg, dt)
    return _advance(stepper, state)


def _advance(stepper: _Stepper, state: NSState) -> NSState:
    grid = stepper.grid
    v = state.velocity.values
    h = min(grid.spacing)
    courant = float(np.max(np.sqrt(np.sum(v * v, axis=0)))) * stepper.dt / h
    if courant > 0.5:
        warnings.warn(f"Courant number {courant:.3g} exceeds 0.5", CFLExceeded, stacklevel=3)
    new_hat = stepper.step(_fft(v, grid), state.time)
    new_v = _ifft(new_hat, grid)
    t = state.time + stepper.dt
    if not np.all(np.isfinite(new_v)):
        raise NaNDetected(f"velocity became non-finite at t={t:.6g}")
    p = stepper.pressure(new_hat, t)
    return NSState(VectorField(grid, new_v), ScalarField(grid, p), t)


def kinetic_energy(v: VectorField) -> float:
    return 0.5 * float(np.sum(v.values * v.values)) * v.grid.cell_volume


def ns_diagnostics(state: NSState, cfg: NSConfig) -> dict:
    """Strain rate, stress, divergence residual, energy and enstrophy of a state.

    Enstrophy uses the fractional vorticity.  ``lambda_term_norm`` is the
    max-norm of the bulk-viscosity part of the stress, which vanishes for
    incompressible states.
    """
    v = state.velocity
    strain = field_ops.strain_rate(v, cfg.beta, cfg.variant, cfg.mode)
    stress = field_ops.cauchy_stress(v, state.pressure, cfg.mu, cfg.lambda_bulk, cfg.beta, cfg.mode, cfg.variant)
    div = field_ops.div_beta(v, cfg.beta, cfg.variant, cfg.mode)
    vort = field_ops.curl_beta(v, cfg.beta, cfg.variant, cfg.mode)
    return {
        "strain_rate": strain,
        "stress": stress,
        "divergence_residual": float(np.max(np.abs(div.values))),
        "lambda_term_norm": abs(cfg.lambda_bulk) * float(np.max(np.abs(div.values))),
        "energy": kinetic_energy(v),
        "enstrophy": 0.5 * float(np.sum(vort.values**2)) * v.grid.cell_volume,
        "max_speed": float(np.max(np.sqrt(np.sum(v.values**2, axis=0)))),
    }


@dataclass
class NSResult:
    report: RunReport
    state: NSState
    snapshots: list = field(default_factory=list)


def initial_state(cfg: NSConfig) -> NSState:
    v0 = initial_velocity(cfg)
    dt = cfg.dt or default_dt(cfg, v0)
    stepper = _Stepper(cfg, dt)
    p0 = stepper.pressure(_fft(v0.values, cfg.grid), 0.0)
    return NSState(v0, ScalarField(cfg.grid, p0), 0.0)


def run_ns(cfg: NSConfig, on_snapshot=None) -> NSResult:
    """Integrate ``cfg.steps`` steps, recording energy, enstrophy and divergence.

    ``on_snapshot(step, t, state)`` receives every ``cfg.every``-th state
    (and the initial one); without a callback the states are kept in memory.
    """
    state = initial_state(cfg)
    dt = cfg.dt or default_dt(cfg, state.velocity)
    stepper = _Stepper(cfg, dt)
    series = {"t": [], "energy": [], "enstrophy": [], "divergence_residual": [], "max_speed": []}
    snapshots = []
    report = RunReport("ns")
    report.config = {"provenance": cfg.provenance(), "dt": dt}

    def record(s: NSState) -> None:
        d = ns_diagnostics(s, cfg)
        series["t"].append(s.time)
        for key in ("energy", "enstrophy", "divergence_residual", "max_speed"):
            series[key].append(d[key])

    def snap(step: int, s: NSState) -> None:
        if on_snapshot is not None:
            on_snapshot(step, s.time, s)
        else:
            snapshots.append((step, s.time, s))

    start = time.perf_counter()
    record(state)
    snap(0, state)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for step in range(1, cfg.steps + 1):
            state = _advance(stepper, state)
            state.time = step * dt
            record(state)
            if step % cfg.every == 0 or step == cfg.steps:
                snap(step, state)
    elapsed = time.perf_counter() - start
    for w in caught:
        report.warn(f"{w.category.__name__}: {w.message}")
    if stepper.guarded:
        report.warn(f"GuardTriggered: up to {stepper.guarded} modes skipped in pressure recovery")

    energy = np.asarray(series["energy"])
    increases = np.diff(energy)
    final = ns_diagnostics(state, cfg)
    report.series = series
    report.scalars = {
        "final_time": state.time,
        "max_divergence_residual": max(series["divergence_residual"]),
        "max_energy_increase": float(increases.max()) if increases.size else 0.0,
        "energy_non_increasing": bool(np.all(increases <= 1e-12)),
        "mean_velocity": [float(np.mean(c)) for c in state.velocity.values],
        "lambda_term_norm": final["lambda_term_norm"],
        "guarded_modes": stepper.guarded,
    }
    if cfg.steps:
        report.fits["energy_decay"] = fit_decay_rate(series["t"], series["energy"]).as_dict()
        report.fits["enstrophy_decay"] = fit_decay_rate(series["t"], series["enstrophy"]).as_dict()
    report.timings = {"wall_seconds": elapsed, "seconds_per_step": elapsed / max(cfg.steps, 1)}
    return NSResult(report, state, snapshots)
