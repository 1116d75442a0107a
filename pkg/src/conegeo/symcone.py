"""Symmetric matrices, the positive-definite cone and its orthonormal chart.

Coordinates on the space of symmetric ``n x n`` matrices use a fixed basis
that is orthonormal for the trace pairing ``<A, B> = Tr(AB)``: the diagonal
units ``E_ii`` first, then ``(E_ij + E_ji) / sqrt(2)`` for ``i < j`` in
lexicographic order.  In these coordinates the trace pairing is the plain
dot product, so Hessians need no metric correction.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    DimensionMismatchError,
    check_positive_int,
    check_same_dim,
    check_symmetric,
)

__all__ = [
    "SymMatrix",
    "ConeBasis",
    "SymVectorizer",
    "trace_inner",
    "is_positive_definite",
    "vec",
    "mat",
    "matrix_to_json",
    "matrix_from_json",
]

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric matrix stored by its upper triangle (row-major)."""

    n: int
    upper: tuple

    def __post_init__(self):
        check_positive_int(self.n, "n")
        upper = tuple(self.upper)
        if len(upper) != self.n * (self.n + 1) // 2:
            raise DimensionMismatchError(
                f"upper triangle of a {self.n}x{self.n} matrix needs "
                f"{self.n * (self.n + 1) // 2} entries, got {len(upper)}"
            )
        if not np.all(np.isfinite(np.asarray(upper, dtype=complex))):
            raise ValueError("SymMatrix entries must be finite")
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_array(cls, A):
        arr = check_symmetric(A, allow_complex=True)
        iu = np.triu_indices(arr.shape[0])
        vals = arr[iu]
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        return cls(arr.shape[0], tuple(vals.tolist()))

    @classmethod
    def identity(cls, n):
        return cls.from_array(np.eye(n))

    def full(self):
        dtype = complex if any(isinstance(v, complex) for v in self.upper) else float
        out = np.zeros((self.n, self.n), dtype=dtype)
        iu = np.triu_indices(self.n)
        out[iu] = self.upper
        out.T[iu] = self.upper
        return out

    def __array__(self, dtype=None, copy=None):
        arr = self.full()
        return arr if dtype is None else arr.astype(dtype)


@dataclass(frozen=True)
class ConeBasis:
    """Orthonormal basis of the symmetric matrices under the trace pairing."""

    n: int
    _pairs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_positive_int(self.n, "n")
        pairs = [(i, i) for i in range(self.n)]
        pairs += [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]
        object.__setattr__(self, "_pairs", tuple(pairs))

    @property
    def N(self):
        return self.n * (self.n + 1) // 2

    @property
    def pairs(self):
        """Index pair ``(i, j)`` of each basis element."""
        return self._pairs

    @cached_property
    def matrices(self):
        """Array of shape ``(N, n, n)`` holding ``E_1 .. E_N``."""
        E = np.zeros((self.N, self.n, self.n))
        for a, (i, j) in enumerate(self._pairs):
            if i == j:
                E[a, i, i] = 1.0
            else:
                E[a, i, j] = E[a, j, i] = 1.0 / SQRT2
        E.setflags(write=False)
        return E

    def index(self, i, j):
        """Coordinate index of the basis element supported on ``(i, j)``."""
        i, j = min(i, j), max(i, j)
        return self._pairs.index((i, j))


def trace_inner(A, B):
    """Trace pairing ``Tr(AB)`` of two symmetric matrices."""
    A = check_symmetric(A, name="A")
    B = check_symmetric(B, name="B")
    check_same_dim(A, B)
    return float(np.einsum("ij,ji->", A, B))


def is_positive_definite(A, tol=1e-9):
    """Strict positive-definiteness test with a reported margin.

    Returns ``(is_pd, min_eigenvalue)``; ``A`` counts as PD when its
    smallest eigenvalue exceeds ``tol * (1 + ||A||_F)``.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    A = check_symmetric(A)
    lam = float(np.linalg.eigvalsh(A)[0])
    return bool(lam > tol * (1.0 + np.linalg.norm(A))), lam


def _basis_for(n, basis):
    if basis is None:
        return ConeBasis(n)
    if basis.n != n:
        raise DimensionMismatchError(f"basis is for n={basis.n}, matrix has n={n}")
    return basis


def _vec_array(A, n):
    """Coordinates of a stack ``(..., n, n)`` of symmetric matrices."""
    iu = np.triu_indices(n, 1)
    diag = np.diagonal(A, axis1=-2, axis2=-1)
    off = A[..., iu[0], iu[1]] * SQRT2
    return np.concatenate([diag, off], axis=-1)


def _mat_array(x, n):
    iu = np.triu_indices(n, 1)
    out = np.zeros(x.shape[:-1] + (n, n), dtype=x.dtype)
    idx = np.arange(n)
    out[..., idx, idx] = x[..., :n]
    off = x[..., n:] / SQRT2
    out[..., iu[0], iu[1]] = off
    out[..., iu[1], iu[0]] = off
    return out


def vec(A, basis=None):
    """Coordinates of a symmetric matrix in the orthonormal cone basis."""
    A = check_symmetric(A, allow_complex=True)
    basis = _basis_for(A.shape[0], basis)
    return _vec_array(A, basis.n)


def mat(x, basis):
    """Inverse of :func:`vec`."""
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != basis.N:
        raise DimensionMismatchError(f"expected a vector of length {basis.N}, got shape {x.shape}")
    if not np.iscomplexobj(x):
        x = x.astype(float)
    return _mat_array(x, basis.n)


class SymVectorizer(TransformerMixin, BaseEstimator):
    """Map stacks of symmetric matrices to cone-basis coordinates.

    ``transform`` takes an array of shape ``(k, n, n)`` and returns
    ``(k, N)``; ``inverse_transform`` goes back.  Downstream estimators can
    then treat matrices as ordinary feature vectors with the trace pairing
    as the Euclidean inner product.
    """

    def __init__(self, check_symmetry=True):
        self.check_symmetry = check_symmetry

    def fit(self, X, y=None):
        X = self._check_stack(X)
        self.n_ = X.shape[-1]
        self.basis_ = ConeBasis(self.n_)
        self.n_features_out_ = self.basis_.N
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = self._check_stack(X)
        if X.shape[-1] != self.n_:
            raise DimensionMismatchError(f"fitted for n={self.n_}, got n={X.shape[-1]}")
        return _vec_array(X, self.n_)

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_out_:
            raise DimensionMismatchError(
                f"expected shape (k, {self.n_features_out_}), got {X.shape}"
            )
        return _mat_array(X, self.n_)

    def _check_stack(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[1] != X.shape[2]:
            raise DimensionMismatchError(f"expected shape (k, n, n), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("input has non-finite entries")
        if self.check_symmetry and not np.allclose(X, np.swapaxes(X, 1, 2)):
            raise ValueError("input matrices are not symmetric")
        return X


def _encode_scalar(v):
    v = complex(v)
    return [v.real, v.imag] if v.imag != 0 else v.real


def matrix_to_json(A):
    """Encode a symmetric matrix as ``{"n": n, "upper": [...]}``."""
    arr = check_symmetric(A, allow_complex=True)
    iu = np.triu_indices(arr.shape[0])
    if np.iscomplexobj(arr):
        upper = [_encode_scalar(v) for v in arr[iu]]
    else:
        upper = [float(v) for v in arr[iu]]
    return {"n": int(arr.shape[0]), "upper": upper}


def matrix_from_json(obj):
    """Decode ``{"n": n, "upper": [...]}``; complex entries are ``[re, im]`` pairs.

    A bare nested list (dense rows) is accepted as well.
    """
    if isinstance(obj, list):
        return check_symmetric(obj, allow_complex=True)
    if not isinstance(obj, dict) or "n" not in obj or "upper" not in obj:
        raise ValueError('matrix JSON must be {"n": int, "upper": [...]}')
    n = obj["n"]
    check_positive_int(n, "n")
    vals = []
    for v in obj["upper"]:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValueError("complex entries must be [re, im] pairs")
            vals.append(complex(float(v[0]), float(v[1])))
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            vals.append(float(v))
        else:
            raise ValueError(f"bad matrix entry {v!r}")
    sm = SymMatrix(n, vals)
    full = sm.full()
    if np.iscomplexobj(full) and not np.any(full.imag):
        full = full.real
    return full
