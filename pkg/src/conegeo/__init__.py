"""Geometry, likelihood and combinatorics of the positive-definite cone."""

__version__ = "0.1.0"

from ._validation import (  # noqa: E402
    ConeGeoError,
    DimensionMismatchError,
    DomainError,
    NumericalFailure,
    SingularHessianError,
)
from .likelihood import LinearConcentrationMLE, LinearModel  # noqa: E402
from .symcone import ConeBasis, SymMatrix, SymVectorizer  # noqa: E402

__all__ = [
    "__version__",
    "ConeGeoError",
    "DimensionMismatchError",
    "DomainError",
    "NumericalFailure",
    "SingularHessianError",
    "LinearModel",
    "LinearConcentrationMLE",
    "ConeBasis",
    "SymMatrix",
    "SymVectorizer",
]
