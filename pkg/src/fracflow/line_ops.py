"""One-dimensional derivatives with an exponential (nonsingular) kernel.

Both operators reduce to the causal convolution

    K(x) = int_a^x exp(-c (x - s)) g(s) ds,     c = beta / (1 - beta),

which obeys ``K(x + h) = exp(-c h) K(x) + (last-cell integral)``.  With ``g``
linear on each cell the last-cell integral is exact, so one pass over the
samples gives the whole transform in O(N) work.  The pass itself is a
first-order IIR filter and runs through :func:`scipy.signal.lfilter`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from fracflow.errors import NonFiniteInput, TooFewSamples, UnsupportedDescriptor
from fracflow.kernel_core import (
    FractionalOrder,
    LineForm,
    NormalizationMode,
    OrderLike,
    line_prefactor,
)

#: Samples per block when filtering a stack of lines (128 KiB of doubles).
BLOCK_SAMPLES = 16384


@dataclass(frozen=True)
class SampledLine:
    """Uniform samples ``values[i] = f(origin + i*dx)``."""

    origin: float
    dx: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 3:
            raise TooFewSamples(f"need at least 3 samples, got shape {values.shape}")
        if not (math.isfinite(self.dx) and self.dx > 0):
            raise ValueError(f"dx must be positive, got {self.dx}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("samples contain NaN or infinity")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "dx", float(self.dx))

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.values.size)

    @classmethod
    def sample(cls, func, origin: float, stop: float, n: int) -> SampledLine:
        """Sample ``func`` on ``n`` equispaced nodes spanning ``[origin, stop]``."""
        x = np.linspace(origin, stop, n)
        return cls(origin, x[1] - x[0], func(x))


def _cell_weights(z: float) -> tuple[float, float]:
    """Weights of the left/right node values in ``int_0^1 exp(-z(1-t)) g(t) dt``.

    Closed forms ``(1 - e^-z (1+z))/z^2`` and ``(z - 1 + e^-z)/z^2`` lose
    digits for small ``z``; their Taylor series are used there instead.
    """
    if z < 1e-2:
        w_left = w_right = 0.0
        term = 0.5  # (-1)^m z^(m-2) / m! at m = 2
        for m in range(2, 12):
            if m > 2:
                term *= -z / m
            w_left += (m - 1) * term
            w_right += term
        return w_left, w_right
    ez = math.exp(-z)
    return (1.0 - ez * (1.0 + z)) / (z * z), (z - 1.0 + ez) / (z * z)


def exp_convolution(values: np.ndarray, dx: float, rate: float) -> np.ndarray:
    """``K_i = int_{x_0}^{x_i} exp(-rate (x_i - s)) g(s) ds`` for piecewise-linear ``g``.

    Runs along the last axis, so a stack of lines is filtered in one call.
    """
    values = np.asarray(values, dtype=float)
    decay = math.exp(-rate * dx)
    w_left, w_right = _cell_weights(rate * dx)
    if values.ndim < 2:
        return _filter_block(values, dx, decay, w_left, w_right)
    # stacks are filtered a few rows at a time so the temporaries stay in cache
    rows = values.reshape(-1, values.shape[-1])
    out = np.empty_like(rows)
    step = max(1, BLOCK_SAMPLES // rows.shape[1])
    for start in range(0, rows.shape[0], step):
        block = slice(start, start + step)
        out[block] = _filter_block(rows[block], dx, decay, w_left, w_right)
    return out.reshape(values.shape)


def _filter_block(values: np.ndarray, dx: float, decay: float, w_left: float, w_right: float) -> np.ndarray:
    forcing = np.empty_like(values)
    forcing[..., 0] = 0.0
    forcing[..., 1:] = dx * (w_left * values[..., :-1] + w_right * values[..., 1:])
    return lfilter([1.0], [1.0, -decay], forcing, axis=-1)


def _check_mode(mode) -> NormalizationMode:
    mode = NormalizationMode.parse(mode)
    if mode is NormalizationMode.PAPER_YSM:
        raise UnsupportedDescriptor("paper-ysm normalization applies to field operators only")
    return mode


def cf_derivative(
    line: SampledLine,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
) -> SampledLine:
    """Caputo-Fabrizio derivative: exponential kernel applied to ``f'``.

    ``f'`` is reconstructed from the samples with second-order differences
    (central inside, one-sided at both ends) and treated as piecewise linear.
    """
    order = FractionalOrder(float(beta))
    mode = _check_mode(mode)
    slope = np.gradient(line.values, line.dx, edge_order=2)
    conv = exp_convolution(slope, line.dx, order.rate)
    return SampledLine(line.origin, line.dx, line_prefactor(order, mode, LineForm.CF) * conv)


def ysm_derivative(
    line: SampledLine,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
) -> SampledLine:
    """Derivative taken outside the exponential-kernel integral.

    Uses ``d/dx K = f(x) - c K(x)`` rather than differencing ``K`` numerically,
    so the value at the first node is ``P (f(a) - 0)``.  By convention the
    first node is reported as 0 (an empty integral), matching the CF operator.
    """
    order = FractionalOrder(float(beta))
    mode = _check_mode(mode)
    conv = exp_convolution(line.values, line.dx, order.rate)
    out = line_prefactor(order, mode, LineForm.YSM) * (line.values - order.rate * conv)
    out[0] = 0.0
    return SampledLine(line.origin, line.dx, out)


class LineKind(enum.Enum):
    CONSTANT = "constant"
    MONOMIAL = "monomial"
    EXPONENTIAL = "exponential"
    SINUSOID = "sinusoid"


@dataclass(frozen=True)
class AnalyticLine:
    """Closed-form test signal.

    ``CONSTANT``: ``value``; ``MONOMIAL``: ``x**power``;
    ``EXPONENTIAL``: ``exp(rate*x)``; ``SINUSOID``: ``sin(wavenumber*x + phase)``.
    """

    kind: LineKind
    value: float = 1.0
    power: int = 1
    rate: float = 0.0
    wavenumber: float = 1.0
    phase: float = 0.0

    @classmethod
    def constant(cls, v: float) -> AnalyticLine:
        return cls(LineKind.CONSTANT, value=v)

    @classmethod
    def monomial(cls, p: int) -> AnalyticLine:
        return cls(LineKind.MONOMIAL, power=p)

    @classmethod
    def exponential(cls, s: float) -> AnalyticLine:
        return cls(LineKind.EXPONENTIAL, rate=s)

    @classmethod
    def sinusoid(cls, k: float, phase: float = 0.0) -> AnalyticLine:
        return cls(LineKind.SINUSOID, wavenumber=k, phase=phase)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is LineKind.CONSTANT:
            return np.full_like(x, self.value)
        if self.kind is LineKind.MONOMIAL:
            return x**self.power
        if self.kind is LineKind.EXPONENTIAL:
            return np.exp(self.rate * x)
        return np.sin(self.wavenumber * x + self.phase)


def _exp_moment(s: complex, c: float, a: float, x: float) -> complex:
    """``int_a^x exp(-c(x-t)) exp(s t) dt``."""
    if abs(c + s) < 1e-300:
        return (x - a) * np.exp(s * x)
    return (np.exp(s * x) - np.exp(s * a) * math.exp(-c * (x - a))) / (c + s)


def _power_moment(m: int, c: float, a: float, x: float) -> float:
    """``int_a^x exp(-c(x-t)) t**m dt`` by integration by parts."""
    decay = math.exp(-c * (x - a))
    total = (1.0 - decay) / c
    for j in range(1, m + 1):
        total = (x**j - a**j * decay) / c - (j / c) * total
    return total


def _kernel_transform(f: AnalyticLine, c: float, a: float, x: float, derivative: bool) -> float:
    """``int_a^x exp(-c(x-t)) g(t) dt`` with ``g = f`` or ``g = f'``."""
    if f.kind is LineKind.CONSTANT:
        return 0.0 if derivative else f.value * _power_moment(0, c, a, x)
    if f.kind is LineKind.MONOMIAL:
        p = f.power
        if derivative:
            return p * _power_moment(p - 1, c, a, x) if p >= 1 else 0.0
        return _power_moment(p, c, a, x)
    if f.kind is LineKind.EXPONENTIAL:
        s = f.rate
        return (s if derivative else 1.0) * _exp_moment(s, c, a, x).real
    k, phi = f.wavenumber, f.phase
    moment = np.exp(1j * phi) * _exp_moment(1j * k, c, a, x)
    return (k * moment.real) if derivative else moment.imag


def line_oracle(
    f: AnalyticLine,
    op: LineForm | str,
    beta: OrderLike,
    mode: NormalizationMode | str,
    x: float,
    origin: float = 0.0,
) -> float:
    """Closed-form CF or YSM transform of an analytic signal at ``x >= origin``."""
    if not isinstance(f, AnalyticLine):
        raise UnsupportedDescriptor(f"no closed form for {type(f).__name__}")
    if f.kind is LineKind.MONOMIAL and f.power not in (1, 2, 3):
        raise UnsupportedDescriptor(f"monomial power must be 1, 2 or 3, got {f.power}")
    if x < origin:
        raise ValueError("x must not precede the lower limit")
    order = FractionalOrder(float(beta))
    mode = _check_mode(mode)
    form = LineForm(op)
    c = order.rate
    pref = line_prefactor(order, mode, form)
    if form is LineForm.CF:
        return pref * _kernel_transform(f, c, origin, x, derivative=True)
    if x == origin:
        return 0.0
    return pref * (float(f(x)) - c * _kernel_transform(f, c, origin, x, derivative=False))
