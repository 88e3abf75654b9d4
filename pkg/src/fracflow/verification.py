"""Property suites behind ``fracflow verify``.

Each suite returns :class:`Check` rows: a measured quantity, the bound it
must satisfy, and whether it did.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fracflow import field_ops
from fracflow.analytic import AnalyticField
from fracflow.fields import GridSpec, ScalarField, VectorField
from fracflow.heat_solver import HeatConfig, run_heat
from fracflow.kernel_core import KernelDescriptor, NormalizationMode, mollifier_mass, unit_symbol
from fracflow.line_ops import AnalyticLine, SampledLine, cf_derivative, line_oracle, ysm_derivative
from fracflow.ns_solver import leray_project, random_div_free

SUITES = ("limits", "identities", "oracles", "backends")


@dataclass
class Check:
    name: str
    measured: float
    bound: float
    passed: bool
    relation: str = "<"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "bound": self.bound,
            "relation": self.relation,
            "passed": self.passed,
        }


def _below(name: str, measured: float, bound: float) -> Check:
    return Check(name, float(measured), float(bound), bool(measured < bound))


def _above(name: str, measured: float, bound: float) -> Check:
    return Check(name, float(measured), float(bound), bool(measured > bound), ">")


def band_limited(grid: GridSpec, seed: int, kmax: int = 8) -> ScalarField:
    """Random real field containing only modes with ``|k_i| <= kmax``."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape)
    f_hat = np.fft.rfftn(noise, axes=grid.axes)
    for ax, k in enumerate(field_ops.spectral(grid).k):
        L = grid.length[ax]
        f_hat = f_hat * (np.abs(k * L / (2 * math.pi)) <= kmax)
    return ScalarField(grid, np.fft.irfftn(f_hat, s=grid.shape, axes=grid.axes))


def gradient_limit_errors(betas=(0.9, 0.99, 0.999), n: int = 256) -> list[tuple[float, float, float]]:
    """``(beta, relative L2 error of grad_beta sin x vs cos x, envelope)``."""
    grid = GridSpec(1, n)
    (x,) = grid.mesh()
    f = ScalarField(grid, np.sin(x))
    exact = np.cos(x)
    rows = []
    for beta in betas:
        g = field_ops.grad_beta(f, beta).values[0]
        err = np.linalg.norm(g - exact) / np.linalg.norm(exact)
        rows.append((beta, float(err), 1.0 - unit_symbol(beta, 1.0)))
    return rows


def suite_limits() -> list[Check]:
    checks = []
    rows = gradient_limit_errors()
    for beta, err, envelope in rows:
        checks.append(_below(f"grad_beta sin x, beta={beta}: rel L2 error vs 1.05(1-G(1))", err, 1.05 * envelope))
    errs = [r[1] for r in rows]
    checks.append(Check("grad_beta error monotone in beta", float(max(np.diff(errs))), 0.0, bool(np.all(np.diff(errs) < 0))))
    checks.append(_below("grad_beta rel L2 error at beta=0.999", errs[-1], 1e-3))

    grid = GridSpec(2, 64)
    X, Y = grid.mesh()
    v = VectorField.from_components(grid, [-np.sin(Y), np.sin(X)])
    w = field_ops.curl_beta(v, 0.999).values
    checks.append(_below("curl_beta at beta=0.999 vs classical vorticity", np.max(np.abs(w - np.cos(X) - np.cos(Y))), 5e-3))

    x = np.arange(1025) * 2 * math.pi / 1024
    d = cf_derivative(SampledLine(0.0, x[1], np.sin(x)), 0.999, NormalizationMode.LOSADA_NIETO).values
    checks.append(_below("CF derivative of sin at beta=0.999 vs cos (x > 0)", np.max(np.abs(d[1:] - np.cos(x[1:]))), 5e-3))

    cfg = HeatConfig(GridSpec(1, 64), 0.999, initial=AnalyticField("cos(2*x)"), dt=0.01, steps=50, every=50)
    rate = run_heat(cfg).report.fits["mode_decay"]["rate"]
    checks.append(_below("heat mode-2 decay at beta=0.999 vs classical 4", abs(rate / 4.0 - 1.0), 5e-3))
    return checks


def suite_identities() -> list[Check]:
    checks = []
    grid = GridSpec(2, 128)
    worst = 0.0
    for seed in range(20):
        f = band_limited(grid, seed)
        lap = field_ops.laplacian_beta(f, 0.5).values
        dg = field_ops.divergence(field_ops.grad_beta(f, 0.5, field_ops.OUTSIDE)).values
        worst = max(worst, float(np.max(np.abs(lap - dg))))
    checks.append(_below("laplacian_beta = div(grad_beta), 20 seeds, N=128", worst, 1e-12))

    f = band_limited(grid, 99)
    a = field_ops.grad_beta(f, 0.5, field_ops.INSIDE).values
    b = field_ops.grad_beta(f, 0.5, field_ops.OUTSIDE).values
    checks.append(_below("grad_beta inside vs outside (periodic)", np.max(np.abs(a - b)), 1e-12))

    curl = field_ops.curl_beta(field_ops.grad_beta(f, 0.5), 0.5).values
    checks.append(_below("curl_beta(grad_beta f)", np.max(np.abs(curl)), 1e-12))

    v = random_div_free(GridSpec(2, 64), seed=3)
    raw = VectorField(v.grid, v.values + field_ops.grad_beta(band_limited(v.grid, 4), 0.5).values)
    once, _ = leray_project(raw, 0.5)
    twice, _ = leray_project(once, 0.5)
    checks.append(_below("Leray projection idempotence", np.max(np.abs(twice.values - once.values)), 1e-14))

    theta = field_ops.grad_tensor_beta(raw, 0.5)
    recon = theta.symmetric_part().values + theta.antisymmetric_part().values
    checks.append(_below("Theta = sym + antisym reconstruction", np.max(np.abs(recon - theta.values)), 1e-15))
    return checks


def line_convergence(f: AnalyticLine, form: str, beta: float, mode=NormalizationMode.UNIT_MASS) -> tuple[list, float]:
    """Max-node errors on ``[0, 1]`` for ``dx = 2^-6 .. 2^-10`` and the fitted order."""
    op = cf_derivative if form == "cf" else ysm_derivative
    errors = []
    for p in range(6, 11):
        line = SampledLine.sample(f, 0.0, 1.0, 2**p + 1)
        exact = np.array([line_oracle(f, form, beta, mode, x) for x in line.x])
        errors.append(float(np.max(np.abs(op(line, beta, mode).values - exact))))
    dx = 2.0 ** -np.arange(6, 11)
    order = float(np.polyfit(np.log(dx), np.log(errors), 1)[0])
    return errors, order


def suite_oracles() -> list[Check]:
    checks = []
    line = SampledLine.sample(lambda x: x, 0.0, 1.0, 1025)
    cf = cf_derivative(line, 0.5, NormalizationMode.PAPER_CF).values[-1]
    checks.append(_below("CF of x at x=1, beta=0.5 vs 1.5(1-1/e)", abs(cf - 1.5 * (1 - math.exp(-1))), 1e-12))
    ones = SampledLine(0.0, 1.0 / 1024, np.ones(1025))
    ysm = ysm_derivative(ones, 0.5, NormalizationMode.PAPER_CF).values[-1]
    checks.append(_below("YSM of 1 at x=1, beta=0.5 vs 2/e", abs(ysm - 2 * math.exp(-1)), 1e-12))
    for f, label in ((AnalyticLine.monomial(3), "x^3"), (AnalyticLine.exponential(1.3), "exp(1.3x)")):
        for form in ("cf", "ysm"):
            for beta in (0.3, 0.5, 0.7):
                _, order = line_convergence(f, form, beta)
                checks.append(_below(f"{form.upper()} order on {label}, beta={beta}: |order-2|", abs(order - 2.0), 0.2))

    grid = GridSpec(1, 64)
    (x,) = grid.mesh()
    m = field_ops.mollify(ScalarField(grid, np.sin(x)), 0.5).values
    checks.append(_below("mollify sin x vs exp(-1/4) sin x", np.max(np.abs(m - math.exp(-0.25) * np.sin(x))), 1e-10))

    cfg = HeatConfig(grid, 0.5, initial=AnalyticField("cos(2*x)"), dt=0.01, steps=100, every=100)
    rate = run_heat(cfg).report.fits["mode_decay"]["rate"]
    checks.append(_below("heat mode-2 decay rate vs 4/e (relative)", abs(rate / (4 * math.exp(-1)) - 1), 5e-3))
    return checks


def suite_backends() -> list[Check]:
    checks = []
    for ndim in (1, 2):
        grid = GridSpec(ndim, 128)
        f = band_limited(grid, 7, kmax=20)
        for beta in (0.3, 0.5, 0.8):
            a = field_ops.mollify(f, beta, backend="spectral").values
            b = field_ops.mollify(f, beta, backend="direct").values
            checks.append(_below(f"spectral vs direct mollify, {ndim}D N=128, beta={beta}", np.max(np.abs(a - b)), 1e-6))
    for n in (1, 2, 3):
        for beta in (0.1, 0.3, 0.5, 0.7, 0.9):
            mass = mollifier_mass(KernelDescriptor.gaussian(beta, n))
            checks.append(_below(f"unit-mass mollifier mass, n={n}, beta={beta}: |mass-1|", abs(mass - 1.0), 1e-10))
    for n in (1, 2, 3):
        mass = mollifier_mass(KernelDescriptor.gaussian(0.5, n, NormalizationMode.PAPER_YSM))
        checks.append(_above(f"paper-ysm mollifier mass, n={n}, beta=0.5: |mass-1| (not unit)", abs(mass - 1.0), 1e-3))
    return checks


def run_suite(name: str) -> list[Check]:
    table = {
        "limits": suite_limits,
        "identities": suite_identities,
        "oracles": suite_oracles,
        "backends": suite_backends,
    }
    if name == "all":
        return [c for s in SUITES for c in table[s]()]
    if name not in table:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)} or all")
    return table[name]()


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'measured':>12}  {'bound':>10}  result"]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{c.name:<{width}}  {c.measured:>12.4e}  {c.relation}{c.bound:>9.3e}  {status}")
    return "\n".join(lines)
