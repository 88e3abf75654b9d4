"""Exponential and Gaussian kernels, their normalizations and Fourier symbols.

Every operator in the package asks this module for kernel values, scale
factors and multipliers, so conventions live in one place:

* the exponential (line) kernel is ``exp(-c s)`` with rate ``c = beta/(1-beta)``;
* the Gaussian mollifier is ``exp(-c |r|^2)``, scaled according to a
  :class:`NormalizationMode`, with unit-mass Fourier symbol
  ``exp(-(1-beta)|k|^2 / (4 beta))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from fracflow.errors import NonConvergedQuadrature, UnsupportedDescriptor, UnsupportedDimension

#: Gaussian standard deviations covered by real-space quadrature.
TRUNCATION_SIGMAS = 8.0

#: Symbol values below this are treated as zero when dividing by them.
SYMBOL_GUARD = 1e-14


@dataclass(frozen=True)
class FractionalOrder:
    """Order of a nonsingular-kernel derivative, strictly inside ``(0, 1)``."""

    beta: float

    def __post_init__(self) -> None:
        beta = float(self.beta)
        if not (math.isfinite(beta) and 0.0 < beta < 1.0):
            raise ValueError(f"beta must lie in (0,1), got {self.beta!r}")
        object.__setattr__(self, "beta", beta)

    @property
    def rate(self) -> float:
        return self.beta / (1.0 - self.beta)

    @property
    def symbol_coefficient(self) -> float:
        """Coefficient ``a`` in the unit-mass symbol ``exp(-a |k|^2)``."""
        return (1.0 - self.beta) / (4.0 * self.beta)

    @property
    def sigma(self) -> float:
        """Standard deviation of the Gaussian mollifier."""
        return math.sqrt((1.0 - self.beta) / (2.0 * self.beta))

    def __float__(self) -> float:
        return self.beta


@dataclass(frozen=True)
class ClassicalLimit:
    """Marker for ``beta = 1``: every mollified operator becomes classical."""

    beta: float = 1.0

    @property
    def rate(self) -> float:
        return math.inf

    @property
    def symbol_coefficient(self) -> float:
        return 0.0

    @property
    def sigma(self) -> float:
        return 0.0

    def __float__(self) -> float:
        return 1.0


CLASSICAL_LIMIT = ClassicalLimit()

Order = Union[FractionalOrder, ClassicalLimit]
OrderLike = Union[float, FractionalOrder, ClassicalLimit]


def as_order(beta: OrderLike) -> Order:
    if isinstance(beta, (FractionalOrder, ClassicalLimit)):
        return beta
    return FractionalOrder(beta)


class NormalizationMode(enum.Enum):
    """Rule fixing the prefactor of the kernels.

    ``UNIT_MASS`` is the working default: the mollifier integrates to one and
    the line operators reduce to the classical derivative as ``beta -> 1``.
    The remaining modes reproduce literal published prefactors.
    """

    UNIT_MASS = "unit-mass"
    PAPER_CF = "paper-cf"
    PAPER_YSM = "paper-ysm"
    LOSADA_NIETO = "losada-nieto"

    @classmethod
    def parse(cls, value: str | NormalizationMode) -> NormalizationMode:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(
            f"unknown normalization mode {value!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )


class KernelKind(enum.Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"


class LineForm(enum.Enum):
    """Derivative inside the integral (``CF``) or outside it (``YSM``)."""

    CF = "cf"
    YSM = "ysm"


@dataclass(frozen=True)
class KernelDescriptor:
    kind: KernelKind
    beta: Order
    mode: NormalizationMode = NormalizationMode.UNIT_MASS
    ndim: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", as_order(self.beta))
        object.__setattr__(self, "mode", NormalizationMode.parse(self.mode))
        if self.kind is KernelKind.GAUSSIAN and self.ndim not in (1, 2, 3):
            raise UnsupportedDimension(f"mollifier dimension must be 1, 2 or 3, got {self.ndim}")

    @classmethod
    def gaussian(cls, beta: OrderLike, ndim: int = 1, mode=NormalizationMode.UNIT_MASS):
        return cls(KernelKind.GAUSSIAN, as_order(beta), NormalizationMode.parse(mode), ndim)

    @classmethod
    def exponential(cls, beta: OrderLike, mode=NormalizationMode.UNIT_MASS):
        return cls(KernelKind.EXPONENTIAL, as_order(beta), NormalizationMode.parse(mode), 1)

    @property
    def rate(self) -> float:
        return self.beta.rate

    @property
    def coefficient(self) -> float:
        return self.beta.symbol_coefficient

    @property
    def scale(self) -> float:
        """Factor multiplying the bare kernel in this descriptor's mode."""
        if self.kind is KernelKind.EXPONENTIAL:
            return 1.0
        return gaussian_scale(self.beta, self.ndim, self.mode)


def exp_rate(beta: OrderLike) -> float:
    """Decay rate ``beta/(1-beta)`` of the exponential kernel."""
    return as_order(beta).rate


def cf_prefactor(beta: OrderLike) -> float:
    """Literal prefactor ``beta / ((1-beta) sqrt(pi^beta))`` of the CF-style field operators."""
    b = as_order(beta).beta
    return b / ((1.0 - b) * math.pi ** (b / 2.0))


def paper_constant_I(beta: OrderLike, n: int) -> float:
    """Published dimension-dependent constant of the YSM-style field operators."""
    b = as_order(beta).beta
    if n == 1:
        return (1.0 - b) ** 1.5 * math.pi ** ((1.0 + b) / 2.0) / b**1.5
    if n == 2:
        return (1.0 - b) ** 2 * math.pi ** ((2.0 + b) / 2.0) / b**2
    if n == 3:
        return (1.0 - b) ** 2.5 * math.pi ** ((3.0 + b) / 2.0) / b**2.5
    raise UnsupportedDimension(f"constant defined for n in {{1,2,3}}, got {n}")


def aleph(beta: OrderLike, mode: NormalizationMode) -> float:
    """Normalization function of the line operators.

    ``PAPER_CF`` uses the constant 1; ``LOSADA_NIETO`` (and ``UNIT_MASS``,
    which is defined to coincide with it) uses ``2/(2-beta)``.
    """
    mode = NormalizationMode.parse(mode)
    b = as_order(beta).beta
    if mode is NormalizationMode.PAPER_CF:
        return 1.0
    if mode in (NormalizationMode.LOSADA_NIETO, NormalizationMode.UNIT_MASS):
        return 2.0 / (2.0 - b)
    raise UnsupportedDescriptor(f"mode {mode.value} has no line-operator normalization")


def line_prefactor(beta: OrderLike, mode: NormalizationMode, form: LineForm) -> float:
    b = as_order(beta).beta
    al = aleph(b, mode)
    if LineForm(form) is LineForm.CF:
        return (2.0 - b) * al / (2.0 * (1.0 - b))
    return al / (1.0 - b)


def gaussian_scale(beta: OrderLike, ndim: int, mode: NormalizationMode) -> float:
    order = as_order(beta)
    mode = NormalizationMode.parse(mode)
    if isinstance(order, ClassicalLimit):
        if mode is not NormalizationMode.UNIT_MASS:
            raise UnsupportedDescriptor("the classical limit is defined in unit-mass mode only")
        return math.inf
    if mode is NormalizationMode.UNIT_MASS:
        return (order.rate / math.pi) ** (ndim / 2.0)
    if mode is NormalizationMode.PAPER_CF:
        return cf_prefactor(order)
    if mode is NormalizationMode.PAPER_YSM:
        return cf_prefactor(order) * paper_constant_I(order, ndim)
    raise UnsupportedDescriptor("losada-nieto normalization applies to line operators only")


def analytic_mass(k: KernelDescriptor) -> float:
    """Closed-form integral of the scaled Gaussian over R^n."""
    if isinstance(k.beta, ClassicalLimit):
        return 1.0
    if k.mode is NormalizationMode.UNIT_MASS:
        return 1.0
    return k.scale * (math.pi / k.rate) ** (k.ndim / 2.0)


def mollifier_eval(k: KernelDescriptor, r):
    """Kernel value at distance ``r`` including the mode's scale factor.

    Gaussian kernels are radial in R^n, so ``r`` is a Euclidean distance;
    exponential kernels are evaluated at ``|r|``.
    """
    if isinstance(k.beta, ClassicalLimit):
        raise UnsupportedDescriptor("the classical-limit kernel is a delta and has no point values")
    r = np.asarray(r, dtype=float)
    if k.kind is KernelKind.EXPONENTIAL:
        out = np.exp(-k.rate * np.abs(r))
    else:
        out = k.scale * np.exp(-k.rate * r * r)
    return float(out) if out.ndim == 0 else out


def _truncated_trapezoid(rate: float, radius: float, npts: int) -> float:
    x = np.linspace(-radius, radius, npts)
    return float(np.trapezoid(np.exp(-rate * x * x), x))


def mollifier_mass(k: KernelDescriptor, quadrature_n: int = 256) -> float:
    """Integrate the scaled Gaussian over R^n by truncated trapezoid quadrature.

    The kernel is a tensor product of one-dimensional Gaussians, so the
    n-dimensional trapezoid sum equals the n-th power of the 1D sum.
    """
    if quadrature_n < 64:
        raise ValueError("quadrature_n must be at least 64")
    if k.kind is not KernelKind.GAUSSIAN:
        raise UnsupportedDescriptor("mass is defined for the Gaussian mollifier only")
    if isinstance(k.beta, ClassicalLimit):
        return 1.0
    scale = k.scale
    # Radius where the scaled kernel drops below 1e-16.
    radius = math.sqrt(math.log(max(scale, 1.0) * 1e16) / k.rate)
    coarse = scale * _truncated_trapezoid(k.rate, radius, quadrature_n) ** k.ndim
    fine = scale * _truncated_trapezoid(k.rate, radius, 2 * quadrature_n) ** k.ndim
    if abs(fine - coarse) > 1e-10 * max(1.0, abs(fine)):
        raise NonConvergedQuadrature(
            f"mass changed by {abs(fine - coarse):.3e} when doubling quadrature_n={quadrature_n}"
        )
    return fine


def mollifier_symbol(k: KernelDescriptor, ksq):
    """Fourier multiplier of the scaled Gaussian at squared wavenumber ``ksq``.

    In unit-mass mode this is ``exp(-(1-beta) ksq / (4 beta))``; other modes
    multiply by their total mass.
    """
    ksq = np.asarray(ksq, dtype=float)
    out = analytic_mass(k) * np.exp(-k.coefficient * ksq)
    return float(out) if out.ndim == 0 else out


def unit_symbol(beta: OrderLike, ksq):
    """Unit-mass Gaussian symbol; shorthand used throughout the solvers."""
    ksq = np.asarray(ksq, dtype=float)
    out = np.exp(-as_order(beta).symbol_coefficient * ksq)
    return float(out) if out.ndim == 0 else out
