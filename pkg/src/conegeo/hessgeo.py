"""Hessian and Monge-Ampere geometry of the positive-definite cone.

The canonical potential of the cone is ``Phi(X) = -c log det X``.  Its
coordinate Hessian (in the orthonormal cone basis) is the affine-invariant
metric, its third derivative is the cubic tensor that drives the curvature,
and ``det Hess Phi * det(X)^(n+1)`` is a constant, which is the
Monge-Ampere property of the cone.
"""

from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy import special, stats

from ._validation import (
    DimensionMismatchError,
    DomainError,
    NumericalFailure,
    check_pd,
    check_positive_int,
    check_same_dim,
    check_vector,
)
from .symcone import ConeBasis

__all__ = [
    "Potential",
    "MetricTensor",
    "ThirdTensor",
    "PolyVectorField",
    "potential_value",
    "chi_closed_form",
    "chi_monte_carlo",
    "metric",
    "third_tensor",
    "curvature",
    "sectional_curvature",
    "monge_ampere_invariant",
    "geodesic",
    "pre_lie_product",
]


@dataclass(frozen=True)
class Potential:
    """Scaled log-det potential ``-c log det X`` on the n x n PD cone."""

    n: int
    c: float = None

    def __post_init__(self):
        check_positive_int(self.n, "n")
        c = (self.n + 1) / 2 if self.c is None else float(self.c)
        if not np.isfinite(c) or c <= 0:
            raise ValueError(f"potential scale c must be positive, got {self.c}")
        object.__setattr__(self, "c", c)

    @property
    def basis(self):
        return ConeBasis(self.n)

    @property
    def N(self):
        return self.n * (self.n + 1) // 2


@dataclass(frozen=True)
class MetricTensor:
    X: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class ThirdTensor:
    X: np.ndarray
    A: np.ndarray


def _point(P, X):
    X, w, V = check_pd(X)
    if X.shape[0] != P.n:
        raise DimensionMismatchError(f"potential is for n={P.n}, X has n={X.shape[0]}")
    return X, w, V


def _inverse(w, V):
    return (V / w) @ V.T


def potential_value(P, X):
    X, w, _ = _point(P, X)
    return float(-P.c * np.sum(np.log(w)))


def chi_closed_form(P, X):
    """Characteristic function ``det(X)^(-(n+1)/2)`` (normalizing constant dropped)."""
    X, w, _ = _point(P, X)
    return float(np.exp(-(P.n + 1) / 2 * np.sum(np.log(w))))


def chi_monte_carlo(P, X, samples, seed=0, block_size=100_000):
    """Importance-sampling estimate of the dual-cone Laplace integral.

    Estimates ``int_{A > 0} exp(-Tr(XA)) dA`` with ``dA`` the Lebesgue
    measure in cone-basis coordinates.  The proposal is a Wishart law with
    ``n + 1`` degrees of freedom and scale ``I / (2 s)``, ``s`` being the
    smallest eigenvalue of ``X``, which keeps the weights bounded.

    Returns ``(mean, stderr)``.  Blocks are drawn and summed in a fixed
    order so a given ``(seed, samples)`` always yields the same numbers.
    """
    X, w, _ = _point(P, X)
    samples = check_positive_int(samples, "samples")
    n = P.n
    s = float(w[0])
    df = n + 1
    proposal = stats.wishart(df=df, scale=np.eye(n) / (2 * s))
    scale_inv = 2 * s * np.eye(n)
    logdet_scale = -n * np.log(2 * s)
    # Lebesgue in entries -> Lebesgue in cone-basis coordinates
    log_jac = 0.25 * n * (n - 1) * np.log(2.0)
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        k = min(block_size, samples - done)
        A = proposal.rvs(size=k, random_state=rng)
        A = A.reshape(k, n, n)
        logq = _wishart_logpdf(A, df, scale_inv, logdet_scale)
        logw = -np.einsum("ij,kji->k", X, A) - logq + log_jac
        wts = np.exp(logw)
        total += float(np.sum(wts))
        total_sq += float(np.sum(wts**2))
        done += k
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    stderr = np.sqrt(var / samples) if samples > 1 else float("inf")
    return mean, float(stderr)


def _wishart_logpdf(A, df, scale_inv, logdet_scale):
    # vectorized over the leading axis; scipy's logpdf loops per sample
    n = A.shape[-1]
    _, logdet_a = np.linalg.slogdet(A)
    tr = np.einsum("ij,kji->k", scale_inv, A)
    return (
        0.5 * (df - n - 1) * logdet_a
        - 0.5 * tr
        - 0.5 * df * n * np.log(2.0)
        - 0.5 * df * logdet_scale
        - special.multigammaln(0.5 * df, n)
    )


def _sandwiches(P, X):
    X, w, V = _point(P, X)
    Y = _inverse(w, V)
    E = P.basis.matrices
    return X, np.einsum("ij,ajk->aik", Y, E)


def metric(P, X):
    """Hessian of the potential: ``g_ab = c Tr(X^-1 E_a X^-1 E_b)``."""
    X, YE = _sandwiches(P, X)
    g = P.c * np.einsum("aij,bji->ab", YE, YE)
    return MetricTensor(X=X, g=(g + g.T) / 2)


def third_tensor(P, X):
    """Third derivative ``A_abc = -c [Tr(Y E_a Y E_b Y E_c) + Tr(Y E_b Y E_a Y E_c)]``."""
    X, YE = _sandwiches(P, X)
    T = np.einsum("aij,bjk,cki->abc", YE, YE, YE)
    A = -P.c * (T + T.transpose(1, 0, 2))
    return ThirdTensor(X=X, A=A)


def _curvature_from(g, A):
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("metric is singular") from exc
    first = np.einsum("ef,eab,fcd->acdb", ginv, A, A)
    second = np.einsum("ef,ead,fcb->acdb", ginv, A, A)
    return first - second


def curvature(P, X):
    """Curvature tensor ``R_acdb = sum g^ef (A_eab A_fcd - A_ead A_fcb)``.

    Axes are ordered ``(a, c, d, b)``.
    """
    g = metric(P, X).g
    A = third_tensor(P, X).A
    return _curvature_from(g, A)


def sectional_curvature(P, X, u, v):
    """Sectional curvature of the plane spanned by coordinate vectors ``u, v``.

    The Levi-Civita curvature of a Hessian metric is ``-1/4`` of the
    contraction of ``R_acdb`` with ``u^a v^c v^d u^b``; the result is
    normalized by the Gram determinant of the plane.
    """
    N = P.N
    u = check_vector(u, N, name="u")
    v = check_vector(v, N, name="v")
    g = metric(P, X).g
    R = curvature(P, X)
    area = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if area <= 1e-300:
        raise ValueError("u and v do not span a plane")
    q = np.einsum("acdb,a,c,d,b->", R, u, v, v, u)
    return float(-0.25 * q / area)


def monge_ampere_invariant(P, X):
    """``det(Hess Phi(X)) * det(X)^(n+1)``; equals ``c^N`` on the whole cone."""
    mt = metric(P, X)
    sign, logdet_g = np.linalg.slogdet(mt.g)
    if sign <= 0:
        raise NumericalFailure("metric determinant is not positive")
    w = np.linalg.eigvalsh(mt.X)
    return float(np.exp(logdet_g + (P.n + 1) * np.sum(np.log(w))))


def _pd_power(w, V, p):
    return (V * w**p) @ V.T


def geodesic(X, Y, t):
    """Point at parameter ``t`` on the affine-invariant geodesic from X to Y.

    ``X^(1/2) (X^(-1/2) Y X^(-1/2))^t X^(1/2)``; ``t`` may be any real.
    """
    X, wx, Vx = check_pd(X, name="X")
    Y, _, _ = check_pd(Y, name="Y")
    check_same_dim(X, Y)
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    Xh = _pd_power(wx, Vx, 0.5)
    Xmh = _pd_power(wx, Vx, -0.5)
    M = Xmh @ Y @ Xmh
    M = (M + M.T) / 2
    wm, Vm = np.linalg.eigh(M)
    if wm[0] <= 1e-14 * wm[-1]:
        raise DomainError("geodesic endpoints are too close to the cone boundary")
    G = Xh @ _pd_power(wm, Vm, t) @ Xh
    return (G + G.T) / 2


class PolyVectorField:
    """Polynomial vector field with exact rational coefficients.

    Component ``k`` is the coefficient of ``d/dx_k``; the variables are
    ``gens`` (sympy symbols).  Fields on the cone use ``x1 .. xN``, fields on
    the diagonal chart use ``t1 .. tn``.
    """

    def __init__(self, components, gens):
        gens = tuple(gens)
        if len(components) != len(gens):
            raise DimensionMismatchError(
                f"{len(components)} components for {len(gens)} variables"
            )
        self.gens = gens
        self.components = tuple(sp.Poly(c, *gens, domain=sp.QQ) for c in components)

    @classmethod
    def from_strings(cls, components, prefix="x"):
        gens = sp.symbols(f"{prefix}1:{len(components) + 1}")
        local = {str(g): g for g in gens}
        exprs = [sp.sympify(str(c).replace("^", "**"), locals=local) for c in components]
        for e in exprs:
            extra = e.free_symbols - set(gens)
            if extra:
                raise ValueError(f"unknown variables {sorted(map(str, extra))}")
        return cls(exprs, gens)

    @property
    def dim(self):
        return len(self.gens)

    def is_zero(self):
        return all(c.is_zero for c in self.components)

    def __sub__(self, other):
        self._check(other)
        return PolyVectorField([a - b for a, b in zip(self.components, other.components)], self.gens)

    def __add__(self, other):
        self._check(other)
        return PolyVectorField([a + b for a, b in zip(self.components, other.components)], self.gens)

    def __eq__(self, other):
        return (
            isinstance(other, PolyVectorField)
            and self.gens == other.gens
            and all((a - b).is_zero for a, b in zip(self.components, other.components))
        )

    def __hash__(self):
        return hash((self.gens, tuple(c.as_expr() for c in self.components)))

    def __repr__(self):
        return f"PolyVectorField({self.as_strings()})"

    def as_strings(self):
        return [str(c.as_expr()) for c in self.components]

    def _check(self, other):
        if self.gens != other.gens:
            raise DimensionMismatchError("vector fields live on different charts")


def pre_lie_product(V, W):
    """Flat covariant derivative ``V o W = nabla_V W``.

    In flat coordinates ``(V o W)^k = sum_i V^i d_i W^k``.
    """
    V._check(W)
    out = []
    for wk in W.components:
        acc = sp.Poly(0, *V.gens, domain=sp.QQ)
        for vi, xi in zip(V.components, V.gens):
            if not vi.is_zero:
                acc += vi * wk.diff(xi)
        out.append(acc)
    return PolyVectorField(out, V.gens)


def pre_lie_associator_defect(a, b, c):
    """``a o (b o c) - b o (a o c) - (a o b) o c + (b o a) o c``; zero for a pre-Lie product."""
    lhs = pre_lie_product(a, pre_lie_product(b, c)) - pre_lie_product(b, pre_lie_product(a, c))
    rhs = pre_lie_product(pre_lie_product(a, b), c) - pre_lie_product(pre_lie_product(b, a), c)
    return lhs - rhs


def random_pd(n, rng, spread=1.0):
    """Random well-conditioned PD matrix; used by the CLI and tests."""
    M = rng.standard_normal((n, n)) * spread
    return M @ M.T + n * np.eye(n) * 0.5

