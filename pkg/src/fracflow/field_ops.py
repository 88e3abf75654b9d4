"""Nonlocal vector calculus built on the Gaussian mollifier.

Each fractional operator is a classical differential operator composed with
convolution against the scaled Gaussian of :mod:`fracflow.kernel_core`.
``DERIVATIVE_INSIDE`` smooths the classical derivative; ``DERIVATIVE_OUTSIDE``
differentiates the smoothed field.  On periodic grids the two coincide up to
rounding; on truncated grids they differ in a layer near the boundary.

Two backends evaluate the convolution:

``spectral``
    multiply every Fourier mode by the kernel symbol (periodic grids whose
    sizes are powers of two);
``direct``
    real-space quadrature over the nodes within ``8 sigma``, applied one axis
    at a time (the Gaussian is a tensor product), with periodic wrapping or
    zero extension outside a truncated domain.

Classical derivatives are spectral on periodic grids and second-order
central differences on truncated ones.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from fracflow.errors import NaNDetected, NonPowerOfTwo, UnsupportedDimension
from fracflow.fields import (
    Boundary,
    GridSpec,
    OperatorVariant,
    ScalarField,
    TensorField,
    VectorField,
    spectral,
)
from fracflow.kernel_core import (
    TRUNCATION_SIGMAS,
    ClassicalLimit,
    KernelDescriptor,
    NormalizationMode,
    Order,
    OrderLike,
    as_order,
    gaussian_scale,
    mollifier_symbol,
)

SPECTRAL = "spectral"
DIRECT = "direct"

INSIDE = OperatorVariant.DERIVATIVE_INSIDE
OUTSIDE = OperatorVariant.DERIVATIVE_OUTSIDE


def _backend(grid: GridSpec, backend: str | None) -> str:
    """Validate an explicit backend, or pick one: spectral when the grid allows it."""
    if backend is None:
        return SPECTRAL if grid.boundary is Boundary.PERIODIC and grid.is_power_of_two else DIRECT
    backend = str(backend).lower()
    if backend not in (SPECTRAL, DIRECT):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == SPECTRAL:
        if grid.boundary is not Boundary.PERIODIC:
            raise ValueError("the spectral backend needs a periodic grid")
        if not grid.is_power_of_two:
            raise NonPowerOfTwo(f"spectral backend needs power-of-two sizes, got {grid.n}")
    return backend


def _fft(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.rfftn(values, axes=grid.axes)


def _ifft(values_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.irfftn(values_hat, s=grid.shape, axes=grid.axes)


# -- convolution -------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _quadrature_matrix(N: int, h: float, rate: float, periodic: bool) -> np.ndarray:
    """``W[i, j]``: weight of node ``j`` in the 1D Gaussian sum at node ``i``."""
    sigma = math.sqrt(0.5 / rate)
    reach = int(math.ceil(TRUNCATION_SIGMAS * sigma / h))
    diff = np.subtract.outer(np.arange(N), np.arange(N))
    if periodic:
        base = np.mod(diff, N)
        W = np.zeros((N, N))
        images = reach // N + 1
        for q in range(-images - 1, images + 1):
            offset = base + q * N
            inside = np.abs(offset) <= reach
            W += np.where(inside, h * np.exp(-rate * (offset * h) ** 2), 0.0)
    else:
        W = np.where(np.abs(diff) <= reach, h * np.exp(-rate * (diff * h) ** 2), 0.0)
    W.setflags(write=False)
    return W


def _mollify_values(
    values: np.ndarray, grid: GridSpec, order: Order, mode: NormalizationMode, backend: str
) -> np.ndarray:
    if isinstance(order, ClassicalLimit):
        return values.copy()
    if backend == SPECTRAL:
        kernel = KernelDescriptor.gaussian(order, grid.ndim, mode)
        symbol = mollifier_symbol(kernel, spectral(grid).ksq)
        return _ifft(_fft(values, grid) * symbol, grid)
    out = values
    periodic = grid.boundary is Boundary.PERIODIC
    for ax, (N, h) in enumerate(zip(grid.n, grid.spacing)):
        W = _quadrature_matrix(N, h, order.rate, periodic)
        axis = values.ndim - grid.ndim + ax
        out = np.moveaxis(np.tensordot(out, W, axes=([axis], [1])), -1, axis)
    return gaussian_scale(order, grid.ndim, mode) * out


def _finite(values: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NaNDetected("operator produced NaN or infinity")
    return values


def _meta(name: str, order: Order, mode, backend: str, variant=None) -> dict:
    meta = {
        "operator": name,
        "beta": float(order),
        "mode": NormalizationMode.parse(mode).value,
        "backend": backend,
    }
    if variant is not None:
        meta["variant"] = OperatorVariant.parse(variant).value
    return meta


def mollify(
    f: ScalarField,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> ScalarField:
    """Convolve ``f`` with the scaled Gaussian mollifier."""
    order = as_order(beta)
    mode = NormalizationMode.parse(mode)
    backend = _backend(f.grid, backend)
    out = _finite(_mollify_values(f.values, f.grid, order, mode, backend))
    return ScalarField(f.grid, out, _meta("mollify", order, mode, backend))


# -- classical derivatives ---------------------------------------------------


def _partial(values: np.ndarray, grid: GridSpec, ax: int) -> np.ndarray:
    """Classical derivative along spatial axis ``ax`` (trailing axes layout)."""
    axis = values.ndim - grid.ndim + ax
    if grid.boundary is Boundary.PERIODIC:
        k = spectral(grid).k_odd[ax]
        return _ifft(1j * k * _fft(values, grid), grid)
    return np.gradient(values, grid.spacing[ax], axis=axis, edge_order=2)


def _classical_laplacian(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    if grid.boundary is Boundary.PERIODIC:
        return _ifft(-spectral(grid).ksq * _fft(values, grid), grid)
    return sum(_partial(_partial(values, grid, ax), grid, ax) for ax in range(grid.ndim))


def gradient(f: ScalarField) -> VectorField:
    """Classical gradient."""
    comps = [_partial(f.values, f.grid, ax) for ax in range(f.grid.ndim)]
    return VectorField(f.grid, np.stack(comps), {"operator": "gradient"})


def divergence(v: VectorField) -> ScalarField:
    """Classical divergence."""
    out = sum(_partial(v.values[ax], v.grid, ax) for ax in range(v.grid.ndim))
    return ScalarField(v.grid, out, {"operator": "divergence"})


def laplacian(f: ScalarField) -> ScalarField:
    """Classical Laplacian."""
    return ScalarField(f.grid, _classical_laplacian(f.values, f.grid), {"operator": "laplacian"})


# -- fractional operators ----------------------------------------------------


def _fractional_partial(
    values: np.ndarray,
    grid: GridSpec,
    ax: int,
    order: Order,
    variant: OperatorVariant,
    mode: NormalizationMode,
    backend: str,
) -> np.ndarray:
    if variant is INSIDE:
        return _mollify_values(_partial(values, grid, ax), grid, order, mode, backend)
    return _partial(_mollify_values(values, grid, order, mode, backend), grid, ax)


def grad_beta(
    f: ScalarField,
    beta: OrderLike,
    variant: OperatorVariant | str = INSIDE,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> VectorField:
    """Fractional gradient."""
    order, mode = as_order(beta), NormalizationMode.parse(mode)
    variant = OperatorVariant.parse(variant)
    backend = _backend(f.grid, backend)
    grid = f.grid
    if variant is INSIDE:
        raw = np.stack([_partial(f.values, grid, ax) for ax in range(grid.ndim)])
        out = _mollify_values(raw, grid, order, mode, backend)
    else:
        smooth = _mollify_values(f.values, grid, order, mode, backend)
        out = np.stack([_partial(smooth, grid, ax) for ax in range(grid.ndim)])
    return VectorField(grid, _finite(out), _meta("grad_beta", order, mode, backend, variant))


def div_beta(
    v: VectorField,
    beta: OrderLike,
    variant: OperatorVariant | str = INSIDE,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> ScalarField:
    """Fractional divergence: both smoothing and differentiation act on ``v``."""
    order, mode = as_order(beta), NormalizationMode.parse(mode)
    variant = OperatorVariant.parse(variant)
    backend = _backend(v.grid, backend)
    grid = v.grid
    if variant is INSIDE:
        raw = sum(_partial(v.values[ax], grid, ax) for ax in range(grid.ndim))
        out = _mollify_values(raw, grid, order, mode, backend)
    else:
        smooth = _mollify_values(v.values, grid, order, mode, backend)
        out = sum(_partial(smooth[ax], grid, ax) for ax in range(grid.ndim))
    return ScalarField(grid, _finite(out), _meta("div_beta", order, mode, backend, variant))


def laplacian_beta(
    f: ScalarField,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> ScalarField:
    """Fractional Laplacian ``mollify(lap f)``; spectral symbol ``-|k|^2 G(|k|^2)``."""
    order, mode = as_order(beta), NormalizationMode.parse(mode)
    backend = _backend(f.grid, backend)
    out = _mollify_values(_classical_laplacian(f.values, f.grid), f.grid, order, mode, backend)
    return ScalarField(f.grid, _finite(out), _meta("laplacian_beta", order, mode, backend))


def curl_beta(
    v: VectorField,
    beta: OrderLike,
    variant: OperatorVariant | str = INSIDE,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> ScalarField | VectorField:
    """Fractional curl; the scalar vorticity in 2D."""
    grid = v.grid
    if grid.ndim == 1:
        raise UnsupportedDimension("curl needs a 2D or 3D grid")
    order, mode = as_order(beta), NormalizationMode.parse(mode)
    variant = OperatorVariant.parse(variant)
    backend = _backend(grid, backend)

    def d(i: int, j: int) -> np.ndarray:
        # fractional d v_j / d x_i
        return _fractional_partial(v.values[j], grid, i, order, variant, mode, backend)

    meta = _meta("curl_beta", order, mode, backend, variant)
    if grid.ndim == 2:
        return ScalarField(grid, _finite(d(0, 1) - d(1, 0)), meta)
    comps = [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
    return VectorField(grid, _finite(np.stack(comps)), meta)


def grad_tensor_beta(
    v: VectorField,
    beta: OrderLike,
    variant: OperatorVariant | str = INSIDE,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> TensorField:
    """Velocity-gradient tensor ``Theta[i, j] = fractional d_i v_j``."""
    grid = v.grid
    if grid.ndim == 1:
        raise UnsupportedDimension("velocity-gradient tensor needs a 2D or 3D grid")
    order, mode = as_order(beta), NormalizationMode.parse(mode)
    variant = OperatorVariant.parse(variant)
    backend = _backend(grid, backend)
    rows = [
        [_fractional_partial(v.values[j], grid, i, order, variant, mode, backend) for j in range(grid.ndim)]
        for i in range(grid.ndim)
    ]
    out = np.array(rows)
    return TensorField(grid, _finite(out), _meta("grad_tensor_beta", order, mode, backend, variant))


def strain_rate(
    v: VectorField,
    beta: OrderLike,
    variant: OperatorVariant | str = INSIDE,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    backend: str | None = None,
) -> TensorField:
    """Symmetric part of the velocity-gradient tensor."""
    theta = grad_tensor_beta(v, beta, variant, mode, backend)
    out = theta.symmetric_part()
    out.meta = dict(theta.meta, operator="strain_rate")
    return out


def cauchy_stress(
    v: VectorField,
    p: ScalarField,
    mu: float,
    lambda_bulk: float,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    variant: OperatorVariant | str = INSIDE,
    backend: str | None = None,
) -> TensorField:
    """Linear stress ``-p I + 2 mu Lambda + lambda (div_beta v) I``."""
    if mu < 0:
        raise ValueError("shear viscosity must be non-negative")
    if p.grid != v.grid:
        raise ValueError("pressure and velocity live on different grids")
    lam = strain_rate(v, beta, variant, mode, backend)
    div = div_beta(v, beta, variant, mode, backend)
    eye = np.eye(v.grid.ndim).reshape((v.grid.ndim, v.grid.ndim) + (1,) * v.grid.ndim)
    out = 2.0 * mu * lam.values + eye * (lambda_bulk * div.values - p.values)
    return TensorField(v.grid, out, dict(lam.meta, operator="cauchy_stress"))


def continuity_residual(
    rho: ScalarField,
    drho_dt: ScalarField,
    v: VectorField,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    variant: OperatorVariant | str = INSIDE,
    backend: str | None = None,
) -> ScalarField:
    """Pointwise ``drho/dt + v . grad_beta(rho)`` (diagnostic only)."""
    if not (rho.grid == drho_dt.grid == v.grid):
        raise ValueError("density, its rate and velocity live on different grids")
    g = grad_beta(rho, beta, variant, mode, backend)
    out = drho_dt.values + v.dot(g)
    return ScalarField(rho.grid, out, dict(g.meta, operator="continuity_residual"))


# -- products ----------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def dealias_mask(grid: GridSpec) -> np.ndarray:
    """Boolean 2/3-rule mask on the ``rfftn`` layout."""
    sp = spectral(grid)
    mask = np.ones(sp.ksq.shape, dtype=bool)
    for k, kmax in zip(sp.k, sp.kmax):
        mask &= np.abs(k) < (2.0 / 3.0) * kmax
    mask.setflags(write=False)
    return mask


def truncate(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Zero the modes outside the 2/3-rule band."""
    return _ifft(_fft(values, grid) * dealias_mask(grid), grid)


def dealiased_product(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> np.ndarray:
    return truncate(truncate(a, grid) * truncate(b, grid), grid)


def transport_form_gap(
    rho: ScalarField,
    v: VectorField,
    beta: OrderLike,
    mode: NormalizationMode | str = NormalizationMode.UNIT_MASS,
    variant: OperatorVariant | str = INSIDE,
) -> ScalarField:
    """``div_beta(v rho) - v . grad_beta(rho)`` on a periodic grid.

    For divergence-free ``v`` and classical derivatives this vanishes; with
    mollified derivatives it does not, because smoothing does not commute with
    pointwise multiplication.  The gap shrinks as ``beta -> 1``.
    """
    grid = rho.grid
    flux = VectorField(grid, np.stack([dealiased_product(vi, rho.values, grid) for vi in v.values]))
    left = div_beta(flux, beta, variant, mode)
    g = grad_beta(rho, beta, variant, mode)
    right = sum(dealiased_product(v.values[i], g.values[i], grid) for i in range(grid.ndim))
    return ScalarField(grid, left.values - right, dict(left.meta, operator="transport_form_gap"))
