"""Nonlocal derivatives with nonsingular kernels, and the heat and
Navier-Stokes solvers built on them."""

from fracflow.errors import (
    ConfigError,
    FieldIOError,
    FracflowError,
    GuardTriggered,
    NaNDetected,
    NumericalFailure,
    VerificationFailed,
)
from fracflow.fields import Boundary, GridSpec, OperatorVariant, ScalarField, TensorField, VectorField
from fracflow.kernel_core import FractionalOrder, KernelDescriptor, NormalizationMode

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "ConfigError",
    "FieldIOError",
    "FracflowError",
    "FractionalOrder",
    "GridSpec",
    "GuardTriggered",
    "KernelDescriptor",
    "NaNDetected",
    "NormalizationMode",
    "NumericalFailure",
    "OperatorVariant",
    "ScalarField",
    "TensorField",
    "VectorField",
    "VerificationFailed",
]
