"""Uniform Cartesian grids and the scalar/vector/tensor fields sampled on them."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from fracflow.errors import NaNDetected, UnsupportedDimension


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    TRUNCATED = "truncated"


class OperatorVariant(enum.Enum):
    """Where the classical derivative sits relative to the smoothing integral."""

    DERIVATIVE_INSIDE = "inside"
    DERIVATIVE_OUTSIDE = "outside"

    @classmethod
    def parse(cls, value) -> OperatorVariant:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"cf": "inside", "ysm": "outside"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, L_1) x ... x [0, L_n)``.

    ``n`` and ``length`` may be scalars (shared by every axis) or per-axis
    tuples; both are stored as tuples.
    """

    ndim: int
    n: Any
    length: Any = 2.0 * math.pi
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self) -> None:
        if self.ndim not in (1, 2, 3):
            raise UnsupportedDimension(f"ndim must be 1, 2 or 3, got {self.ndim}")
        n = tuple(int(v) for v in np.broadcast_to(np.asarray(self.n), (self.ndim,)))
        length = tuple(float(v) for v in np.broadcast_to(np.asarray(self.length), (self.ndim,)))
        if any(v < 8 for v in n):
            raise ValueError(f"need at least 8 points per axis, got {n}")
        if any(not (math.isfinite(v) and v > 0) for v in length):
            raise ValueError(f"axis lengths must be positive, got {length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def axes(self) -> tuple[int, ...]:
        """Trailing array axes holding the spatial dimensions."""
        return tuple(range(-self.ndim, 0))

    def coords(self) -> list[np.ndarray]:
        return [h * np.arange(N) for h, N in zip(self.spacing, self.n)]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coords(), indexing="ij"))

    @property
    def is_power_of_two(self) -> bool:
        return all(N & (N - 1) == 0 for N in self.n)


@dataclass(frozen=True)
class Spectral:
    """Wavenumber arrays shaped to broadcast against ``rfftn`` output."""

    k: tuple[np.ndarray, ...]
    # same, with the Nyquist wavenumber zeroed (odd-order derivatives)
    k_odd: tuple[np.ndarray, ...]
    ksq: np.ndarray
    kmax: tuple[float, ...]


@functools.lru_cache(maxsize=32)
def spectral(grid: GridSpec) -> Spectral:
    ks, kodd, kmax = [], [], []
    for ax, (N, L) in enumerate(zip(grid.n, grid.length)):
        last = ax == grid.ndim - 1
        freq = np.fft.rfftfreq(N, d=1.0 / N) if last else np.fft.fftfreq(N, d=1.0 / N)
        k = 2.0 * math.pi / L * freq
        ko = k.copy()
        if N % 2 == 0:
            ko[np.abs(freq) == N // 2] = 0.0
        shape = [1] * grid.ndim
        shape[ax] = k.size
        ks.append(k.reshape(shape))
        kodd.append(ko.reshape(shape))
        kmax.append(2.0 * math.pi / L * (N // 2))
    ksq = sum(k * k for k in ks)
    for arr in (*ks, *kodd, ksq):
        arr.setflags(write=False)
    return Spectral(tuple(ks), tuple(kodd), ksq, tuple(kmax))


def _check_values(values: np.ndarray, grid: GridSpec, lead: tuple[int, ...]) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    expected = lead + grid.shape
    if values.shape != expected:
        raise ValueError(f"expected samples of shape {expected}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise NaNDetected("field contains NaN or infinity")
    return values


@dataclass(eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = _check_values(self.values, self.grid, ())

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> ScalarField:
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape).copy())

    @classmethod
    def zeros(cls, grid: GridSpec) -> ScalarField:
        return cls(grid, np.zeros(grid.shape))


@dataclass(eq=False)
class VectorField:
    """``values[i]`` is the i-th Cartesian component."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = _check_values(self.values, self.grid, (self.grid.ndim,))

    @classmethod
    def from_components(cls, grid: GridSpec, comps) -> VectorField:
        return cls(grid, np.stack([np.broadcast_to(c, grid.shape) for c in comps]))

    @classmethod
    def zeros(cls, grid: GridSpec) -> VectorField:
        return cls(grid, np.zeros((grid.ndim,) + grid.shape))

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i].copy(), dict(self.meta))

    def dot(self, other: VectorField) -> np.ndarray:
        return np.einsum("i...,i...->...", self.values, other.values)


@dataclass(eq=False)
class TensorField:
    """``values[i, j]`` is the (i, j) component."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.grid.ndim
        self.values = _check_values(self.values, self.grid, (n, n))

    @property
    def T(self) -> TensorField:
        return TensorField(self.grid, np.swapaxes(self.values, 0, 1).copy(), dict(self.meta))

    def symmetric_part(self) -> TensorField:
        return TensorField(self.grid, 0.5 * (self.values + np.swapaxes(self.values, 0, 1)), dict(self.meta))

    def antisymmetric_part(self) -> TensorField:
        return TensorField(self.grid, 0.5 * (self.values - np.swapaxes(self.values, 0, 1)), dict(self.meta))

    def trace(self) -> np.ndarray:
        return np.einsum("ii...->...", self.values)

    def component(self, i: int, j: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i, j].copy(), dict(self.meta))
