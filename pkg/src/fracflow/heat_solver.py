"""Fractional heat conduction with heat generation.

Evolves

    dT/dt = (kappa / (rho c)) lap_beta T + g / (rho c)

where ``lap_beta`` is the mollified Laplacian.  On periodic grids every
Fourier mode obeys a scalar linear ODE with rate
``nu_k = (kappa / rho c) |k|^2 G(|k|^2)``, which the exponential integrator
solves exactly for a time-independent source.
"""

from __future__ import annotations

import enum
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from fracflow import field_ops
from fracflow.analytic import AnalyticField
from fracflow.errors import ConfigError, GuardTriggered, NaNDetected, SingularSteadyState, UnstableStep
from fracflow.fields import Boundary, GridSpec, ScalarField, VectorField, spectral
from fracflow.kernel_core import (
    ClassicalLimit,
    SYMBOL_GUARD,
    KernelDescriptor,
    NormalizationMode,
    Order,
    OrderLike,
    analytic_mass,
    as_order,
    mollifier_symbol,
    unit_symbol,
)
from fracflow.report import RunReport, fit_decay_rate


class Integrator(enum.Enum):
    EXPONENTIAL = "exponential"
    RK4 = "rk4"
    FORWARD_EULER = "forward-euler"


FieldSource = Union[AnalyticField, ScalarField, None]


@dataclass
class HeatConfig:
    grid: GridSpec
    beta: Order
    mode: NormalizationMode = NormalizationMode.UNIT_MASS
    kappa: float = 1.0
    rho: float = 1.0
    c_heat: float = 1.0
    source: FieldSource = None
    initial: FieldSource = None
    dt: float = 1e-2
    steps: int = 100
    integrator: Integrator = Integrator.EXPONENTIAL
    every: int = 10
    backend: Optional[str] = None

    def __post_init__(self) -> None:
        self.beta = as_order(self.beta)
        self.mode = NormalizationMode.parse(self.mode)
        self.integrator = Integrator(self.integrator)
        for name in ("kappa", "rho", "c_heat", "dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.every < 1:
            raise ConfigError("snapshot interval must be at least 1")
        if self.integrator is Integrator.EXPONENTIAL and self.grid.boundary is not Boundary.PERIODIC:
            raise ConfigError("the exponential integrator needs a periodic grid")
        if self.grid.boundary is Boundary.TRUNCATED and self.grid.ndim == 3:
            raise ConfigError("truncated heat runs are supported in 1D and 2D only")

    @property
    def diffusivity(self) -> float:
        return self.kappa / (self.rho * self.c_heat)

    def provenance(self) -> dict:
        return {
            "beta": float(self.beta),
            "mode": self.mode.value,
            "integrator": self.integrator.value,
            "backend": field_ops._backend(self.grid, self.backend),
        }


def _sample(src: FieldSource, grid: GridSpec, t: float) -> np.ndarray:
    if src is None:
        return np.zeros(grid.shape)
    if isinstance(src, ScalarField):
        return src.values
    return src.evaluate(grid, t)


def _kernel(cfg: HeatConfig) -> KernelDescriptor:
    return KernelDescriptor.gaussian(cfg.beta, cfg.grid.ndim, cfg.mode)


def decay_symbol(cfg: HeatConfig) -> np.ndarray:
    """Per-mode decay rate ``nu_k`` on the ``rfftn`` layout."""
    ksq = spectral(cfg.grid).ksq
    if isinstance(cfg.beta, ClassicalLimit):
        return cfg.diffusivity * ksq
    return cfg.diffusivity * ksq * mollifier_symbol(_kernel(cfg), ksq)


def heat_flux(
    T: ScalarField,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    kappa: float = 1.0,
    variant=field_ops.INSIDE,
    backend: str | None = None,
) -> VectorField:
    """Fractional Fourier law ``q = -kappa grad_beta T``."""
    g = field_ops.grad_beta(T, beta, variant, mode, backend)
    return VectorField(T.grid, -kappa * g.values, dict(g.meta, operator="heat_flux"))


def stability_limit(cfg: HeatConfig) -> float:
    """Largest stable forward-Euler step for the bounded diffusion symbol.

    ``s exp(-a s)`` peaks at ``s = 1/a`` with value ``1/(a e)``; when that
    peak lies beyond the resolved band the cutoff value is used instead.
    """
    s_max = max(float(np.max(spectral(cfg.grid).ksq)), 0.0)
    if isinstance(cfg.beta, ClassicalLimit):
        peak = s_max
    else:
        a = cfg.beta.symbol_coefficient
        if 1.0 / a <= s_max:
            peak = 1.0 / (a * math.e)
        else:
            peak = s_max * math.exp(-a * s_max)
        peak *= analytic_mass(_kernel(cfg))
    if peak == 0.0:
        return math.inf
    return 2.0 / (cfg.diffusivity * peak)


def _phi(nu: np.ndarray, dt: float) -> np.ndarray:
    """``(1 - exp(-nu dt)) / nu``, with its series where ``nu dt`` is tiny."""
    z = nu * dt
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, nu)
    return np.where(small, dt * (1.0 - 0.5 * z), -np.expm1(-z) / safe)


def _rhs(T: np.ndarray, cfg: HeatConfig, t: float) -> np.ndarray:
    lap = field_ops.laplacian_beta(ScalarField(cfg.grid, T), cfg.beta, cfg.mode, cfg.backend)
    return cfg.diffusivity * lap.values + _sample(cfg.source, cfg.grid, t) / (cfg.rho * cfg.c_heat)


def step_heat(state: ScalarField, cfg: HeatConfig, t: float = 0.0) -> ScalarField:
    """Advance the temperature by one step of ``cfg.dt`` starting at time ``t``."""
    if state.grid != cfg.grid:
        raise ValueError("state and configuration grids differ")
    dt, grid = cfg.dt, cfg.grid
    T = state.values
    if cfg.integrator is Integrator.EXPONENTIAL:
        nu = decay_symbol(cfg)
        # a time-dependent source is frozen at the step midpoint
        g_hat = np.fft.rfftn(_sample(cfg.source, grid, t + 0.5 * dt), axes=grid.axes)
        T_hat = np.fft.rfftn(T, axes=grid.axes)
        T_hat = np.exp(-nu * dt) * T_hat + _phi(nu, dt) * g_hat / (cfg.rho * cfg.c_heat)
        out = np.fft.irfftn(T_hat, s=grid.shape, axes=grid.axes)
    elif cfg.integrator is Integrator.FORWARD_EULER:
        limit = stability_limit(cfg)
        if dt > limit:
            raise UnstableStep(f"dt={dt} exceeds the forward-Euler limit {limit:.6g}")
        out = T + dt * _rhs(T, cfg, t)
    else:
        k1 = _rhs(T, cfg, t)
        k2 = _rhs(T + 0.5 * dt * k1, cfg, t + 0.5 * dt)
        k3 = _rhs(T + 0.5 * dt * k2, cfg, t + 0.5 * dt)
        k4 = _rhs(T + dt * k3, cfg, t + dt)
        out = T + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NaNDetected(f"temperature became non-finite at t={t + dt:.6g}")
    return ScalarField(grid, out, {"time": t + dt})


def steady_state(cfg: HeatConfig) -> ScalarField:
    """Zero-mean solution of ``kappa lap_beta T = -g`` by per-mode division.

    Modes whose source is at rounding level, or whose mollifier symbol is
    below :data:`SYMBOL_GUARD`, are set to zero; a :class:`GuardTriggered`
    warning counts the guarded modes where the source carried real content.
    """
    if cfg.grid.boundary is not Boundary.PERIODIC:
        raise ConfigError("the direct steady solve needs a periodic grid")
    grid = cfg.grid
    g_hat = np.fft.rfftn(_sample(cfg.source, grid, 0.0), axes=grid.axes)
    scale = max(float(np.max(np.abs(g_hat))), 1.0)
    origin = (0,) * grid.ndim
    if abs(g_hat[origin]) > 1e-12 * scale:
        raise SingularSteadyState("a steady state needs a zero-mean source")
    nu = decay_symbol(cfg) * cfg.rho * cfg.c_heat  # kappa |k|^2 G
    # Dividing by a tiny symbol only amplifies rounding, so modes whose source
    # is at rounding level, or whose symbol underflows, get no response.
    signal = np.abs(g_hat) > 1e-13 * scale
    guarded = unit_symbol(cfg.beta, spectral(grid).ksq) < SYMBOL_GUARD
    guarded[origin] = True
    lost = int(np.count_nonzero(guarded & signal))
    if lost:
        warnings.warn(f"{lost} source modes dropped from the steady solve", GuardTriggered, stacklevel=2)
    keep = signal & ~guarded
    T_hat = np.where(keep, g_hat / np.where(keep, nu, 1.0), 0.0)
    meta = {"steady": True, "guarded_modes": lost}
    return ScalarField(grid, np.fft.irfftn(T_hat, s=grid.shape, axes=grid.axes), meta)


@dataclass
class HeatResult:
    report: RunReport
    state: ScalarField
    snapshots: list = field(default_factory=list)


def _initial(cfg: HeatConfig) -> ScalarField:
    return ScalarField(cfg.grid, _sample(cfg.initial, cfg.grid, 0.0).copy())


def _dominant_mode(T: np.ndarray, grid: GridSpec):
    T_hat = np.abs(np.fft.rfftn(T, axes=grid.axes))
    T_hat[(0,) * grid.ndim] = 0.0
    if not np.any(T_hat):
        return None
    return np.unravel_index(int(np.argmax(T_hat)), T_hat.shape)


def run_heat(cfg: HeatConfig, on_snapshot=None) -> HeatResult:
    """Integrate ``cfg.steps`` steps, recording norms and a dominant-mode amplitude.

    Snapshots are taken every ``cfg.every`` steps (and at step 0); each is
    passed to ``on_snapshot(step, t, field)`` if given, else kept in memory.
    """
    grid = cfg.grid
    state = _initial(cfg)
    mode_index = _dominant_mode(state.values, grid) if grid.boundary is Boundary.PERIODIC else None
    volume = grid.cell_volume
    series = {"t": [], "l2_norm": [], "max_abs": [], "mean": []}
    if mode_index is not None:
        series["mode_amplitude"] = []
    snapshots = []

    def record(T: np.ndarray, t: float) -> None:
        series["t"].append(t)
        series["l2_norm"].append(math.sqrt(float(np.sum(T * T)) * volume))
        series["max_abs"].append(float(np.max(np.abs(T))))
        series["mean"].append(float(np.mean(T)))
        if mode_index is not None:
            amp = abs(np.fft.rfftn(T, axes=grid.axes)[mode_index]) * 2.0 / T.size
            series["mode_amplitude"].append(float(amp))

    def snap(step: int, t: float, f: ScalarField) -> None:
        if on_snapshot is not None:
            on_snapshot(step, t, f)
        else:
            snapshots.append((step, t, f))

    if cfg.integrator is Integrator.FORWARD_EULER and cfg.steps:
        limit = stability_limit(cfg)
        if cfg.dt > limit:
            raise UnstableStep(f"dt={cfg.dt} exceeds the forward-Euler limit {limit:.6g}")

    start = time.perf_counter()
    t = 0.0
    record(state.values, t)
    snap(0, t, state)
    for step in range(1, cfg.steps + 1):
        state = step_heat(state, cfg, t)
        t = step * cfg.dt
        record(state.values, t)
        if step % cfg.every == 0 or step == cfg.steps:
            snap(step, t, state)
    elapsed = time.perf_counter() - start

    report = RunReport("heat")
    report.config = {"provenance": cfg.provenance()}
    report.series = series
    report.scalars = {
        "initial_max_abs": series["max_abs"][0],
        "initial_mean": series["mean"][0],
        "initial_l2_norm": series["l2_norm"][0],
        "final_max_abs": series["max_abs"][-1],
        "final_mean": series["mean"][-1],
        "final_l2_norm": series["l2_norm"][-1],
        "mean_drift": series["mean"][-1] - series["mean"][0],
        "stability_limit": stability_limit(cfg),
        "final_time": t,
    }
    if cfg.steps:
        report.fits["l2_decay"] = fit_decay_rate(series["t"], series["l2_norm"]).as_dict()
        if mode_index is not None:
            report.fits["mode_decay"] = fit_decay_rate(series["t"], series["mode_amplitude"]).as_dict()
            report.fits["mode_decay"]["mode_index"] = [int(i) for i in mode_index]
    report.timings = {"wall_seconds": elapsed, "seconds_per_step": elapsed / max(cfg.steps, 1)}
    return HeatResult(report, state, snapshots)
