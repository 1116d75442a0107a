"""Input validation helpers shared by every module.

All public functions accept array-likes (nested lists, numpy arrays or
:class:`~conegeo.symcone.SymMatrix`) and funnel them through these checks
before doing any numerical work.
"""

import numbers

import numpy as np

__all__ = [
    "ConeGeoError",
    "DimensionMismatchError",
    "DomainError",
    "NumericalFailure",
    "SingularHessianError",
    "check_symmetric",
    "check_pd",
    "check_same_dim",
    "check_vector",
    "check_positive_int",
]


class ConeGeoError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(ConeGeoError, ValueError):
    """Operands do not share a dimension."""


class DomainError(ConeGeoError, ValueError):
    """Input lies outside the domain of the operation (e.g. not PD)."""


class NumericalFailure(ConeGeoError, RuntimeError):
    """An iterative or numerical procedure failed to produce a valid result."""


class SingularHessianError(NumericalFailure):
    """The Hessian of a potential is not invertible at the queried point."""


def check_symmetric(A, *, name="A", allow_complex=False, sym_tol=1e-10):
    """Return ``A`` as a square symmetric ndarray.

    The matrix is symmetrized after checking; ``sym_tol`` is relative to
    the largest entry.
    """
    # SymMatrix and anything else exposing a dense view
    if hasattr(A, "full") and callable(A.full):
        A = A.full()
    arr = np.asarray(A)
    if arr.dtype == object:
        try:
            arr = arr.astype(complex if allow_complex else float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{name} has non-numeric entries") from exc
    if np.iscomplexobj(arr):
        if not allow_complex:
            if np.any(arr.imag != 0):
                raise ValueError(f"{name} must be real")
            arr = arr.real
    else:
        arr = arr.astype(float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"{name} must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DimensionMismatchError(f"{name} must have n >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > sym_tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return (arr + arr.T) / 2


def check_pd(A, *, name="X", rel_floor=1e-14):
    """Return ``(A, eigenvalues, eigenvectors)`` for a real PD matrix.

    Raises :class:`DomainError` when the smallest eigenvalue is not above
    ``rel_floor`` times the largest one in magnitude.
    """
    arr = check_symmetric(A, name=name)
    w, V = np.linalg.eigh(arr)
    top = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if w[0] <= rel_floor * top:
        raise DomainError(f"{name} is not positive definite (min eigenvalue {w[0]:.3e})")
    return arr, w, V


def check_same_dim(*mats):
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def check_vector(x, length=None, *, name="x", allow_complex=False):
    arr = np.asarray(x, dtype=complex if allow_complex else float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatchError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
