"""Gaussian likelihood on linear concentration models.

A model is the affine span ``L0 + x_1 L_1 + ... + x_d L_d`` of symmetric
matrices; its concentration cone is the part of the span that is positive
definite.  For a sample covariance ``S`` the log-likelihood of a
concentration matrix ``K`` is ``log det K - Tr(KS)``, strictly concave on
the cone, so the maximum-likelihood estimate is unique when it exists.

The ML degree of a linear model counts the complex critical points of the
log-likelihood for generic ``S``.  :func:`ml_degree` estimates it by damped
complex Newton iterations from many random starts, followed by clustering.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy import linalg as sla
from scipy import optimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import (
    DimensionMismatchError,
    DomainError,
    NumericalFailure,
    check_pd,
    check_positive_int,
    check_symmetric,
    check_vector,
)
from .symcone import ConeBasis, _mat_array, _vec_array, matrix_from_json, matrix_to_json

log = logging.getLogger(__name__)

__all__ = [
    "LinearModel",
    "MLEResult",
    "CriticalPoint",
    "CriticalPointSet",
    "MLDegreeResult",
    "EmptyConeError",
    "UnboundedLikelihoodError",
    "ConvergenceError",
    "LinearConcentrationMLE",
    "log_likelihood",
    "score",
    "mle",
    "critical_polynomial_system",
    "ml_degree",
    "polar_space",
    "random_sample_covariance",
]


class EmptyConeError(DomainError):
    """No positive-definite matrix was found in the model."""


class UnboundedLikelihoodError(NumericalFailure):
    pass


class ConvergenceError(NumericalFailure):
    pass


class LinearModel:
    """Affine space of symmetric matrices ``L0 + sum_i x_i L_i``."""

    def __init__(self, basis, offset=None):
        mats = [check_symmetric(L, name=f"L{i + 1}") for i, L in enumerate(basis)]
        if not mats:
            raise ValueError("a linear model needs at least one basis matrix")
        n = mats[0].shape[0]
        if any(L.shape[0] != n for L in mats):
            raise DimensionMismatchError("basis matrices have different sizes")
        self.n = n
        self.basis = np.stack(mats)
        self.basis.setflags(write=False)
        if offset is None:
            self.offset = np.zeros((n, n))
        else:
            self.offset = check_symmetric(offset, name="L0")
            if self.offset.shape[0] != n:
                raise DimensionMismatchError("offset has the wrong size")
        self.offset.setflags(write=False)
        self._coords = _vec_array(self.basis, n)  # (d, N)
        sv = np.linalg.svd(self._coords, compute_uv=False)
        if sv[-1] <= 1e-10 * max(sv[0], 1.0):
            raise ValueError("model basis matrices are linearly dependent")

    @property
    def d(self):
        return self.basis.shape[0]

    @property
    def N(self):
        return self.n * (self.n + 1) // 2

    @property
    def is_linear(self):
        return not np.any(self.offset)

    def matrix(self, x):
        """``K(x)``; ``x`` may be a vector or a batch ``(R, d)``, real or complex."""
        x = np.asarray(x)
        if x.shape[-1] != self.d:
            raise DimensionMismatchError(f"expected {self.d} parameters, got {x.shape[-1]}")
        return self.offset + np.tensordot(x, self.basis, axes=(-1, 0))

    def coordinates(self, K, tol=1e-10):
        """Parameters ``x`` with ``K(x) = K``; raises if ``K`` is off the model."""
        K = check_symmetric(K, name="K")
        if K.shape[0] != self.n:
            raise DimensionMismatchError(f"model is for n={self.n}, K has n={K.shape[0]}")
        target = _vec_array(K - self.offset, self.n)
        x, *_ = np.linalg.lstsq(self._coords.T, target, rcond=None)
        resid = np.linalg.norm(self._coords.T @ x - target)
        if resid > tol * (1.0 + np.linalg.norm(K)):
            raise DomainError(f"K is not in the model (projection residual {resid:.2e})")
        return x

    def scaled(self, factors):
        """Same span with basis ``L_i -> factors[i] * L_i``."""
        factors = check_vector(factors, self.d, name="factors")
        return LinearModel(self.basis * factors[:, None, None], self.offset)

    @classmethod
    def full(cls, n):
        return cls(list(ConeBasis(n).matrices))

    @classmethod
    def diagonal(cls, n):
        eye = np.eye(n)
        return cls([np.outer(eye[i], eye[i]) for i in range(n)])

    def to_json(self):
        return {
            "n": self.n,
            "L0": None if self.is_linear else matrix_to_json(self.offset),
            "basis": [matrix_to_json(L) for L in self.basis],
        }

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "basis" not in obj:
            raise ValueError('model JSON must be {"n": int, "L0": matrix|null, "basis": [...]}')
        basis = [matrix_from_json(m) for m in obj["basis"]]
        offset = obj.get("L0")
        offset = None if offset is None else matrix_from_json(offset)
        model = cls(basis, offset)
        if "n" in obj and obj["n"] != model.n:
            raise ValueError(f"declared n={obj['n']} but matrices are {model.n}x{model.n}")
        return model

    def __repr__(self):
        return f"LinearModel(n={self.n}, d={self.d}, linear={self.is_linear})"


def log_likelihood(K, S):
    """``log det K - Tr(KS)``."""
    K, w, _ = check_pd(K, name="K")
    S = check_symmetric(S, name="S")
    if S.shape != K.shape:
        raise DimensionMismatchError("K and S differ in size")
    return float(np.sum(np.log(w)) - np.einsum("ij,ji->", K, S))


def _traces(model, M):
    # Tr(M L_i) for all i; M may be batched (..., n, n)
    return np.einsum("...ij,dji->...d", M, model.basis)


def score(K, S, model):
    """Gradient of the log-likelihood along the model directions.

    Component ``i`` is ``Tr(K^-1 L_i) - Tr(S L_i)``.
    """
    K = check_symmetric(K, name="K")
    S = check_symmetric(S, name="S")
    model.coordinates(K)
    if S.shape[0] != model.n:
        raise DimensionMismatchError("S has the wrong size")
    try:
        Kinv = np.linalg.inv(K)
    except np.linalg.LinAlgError as exc:
        raise DomainError("K is singular") from exc
    if not np.all(np.isfinite(Kinv)):
        raise DomainError("K is singular")
    return _traces(model, Kinv) - _traces(model, S)


@dataclass
class MLEResult:
    K: np.ndarray
    x: np.ndarray
    loglik: float
    score_norm: float
    n_iter: int
    converged: bool


def _min_eig(model, x):
    return float(np.linalg.eigvalsh(model.matrix(x))[0])


def find_interior_point(model, S=None):
    """Parameters of some positive-definite ``K`` in the model.

    Tries the projections of ``S^-1`` and ``Id``, then a coarse grid, and
    finally polishes the best candidate of ``lambda_min(K(x)) / (1 + |x|)``
    with Nelder-Mead.
    """
    cands = []
    targets = [np.eye(model.n)]
    if S is not None:
        try:
            targets.insert(0, np.linalg.inv(S))
        except np.linalg.LinAlgError:
            pass
    for T in targets:
        rhs = _vec_array(T - model.offset, model.n)
        x, *_ = np.linalg.lstsq(model._coords.T, rhs, rcond=None)
        cands.append(x)
    for x in cands:
        if _min_eig(model, x) > 0:
            return x
    d = model.d
    if d <= 3:
        axis = np.linspace(-1.0, 1.0, 5)
        grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
    else:
        grid = np.random.default_rng(0).uniform(-1, 1, size=(200, d))
    cands.extend(grid)

    def h(x):
        return _min_eig(model, x) / (1.0 + np.linalg.norm(x))

    vals = np.array([h(x) for x in cands])
    order = np.argsort(-vals, kind="stable")
    for k in order[:3]:
        if vals[k] > 0:
            return np.asarray(cands[k], dtype=float)
        res = optimize.minimize(lambda x: -h(x), cands[k], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if -res.fun > 0:
            return res.x
    raise EmptyConeError("no positive-definite matrix found in the model")


def mle(model, S, init=None, max_iter=200, tol=1e-10):
    """Maximum-likelihood concentration matrix in the model.

    Damped Newton ascent from ``init`` (a PD matrix in the model) or from an
    interior point found automatically.  Stops once the score norm is at
    most ``tol * (1 + ||S||_F)``.
    """
    S, _, _ = check_pd(S, name="S")
    if S.shape[0] != model.n:
        raise DimensionMismatchError("S has the wrong size")
    if init is None:
        x = find_interior_point(model, S)
    else:
        K0, _, _ = check_pd(init, name="init")
        x = model.coordinates(K0)
    b = _traces(model, S)
    target = tol * (1.0 + np.linalg.norm(S))

    def evaluate(x):
        K = model.matrix(x)
        w, V = np.linalg.eigh(K)
        if w[0] <= 0:
            return None
        Kinv = (V / w) @ V.T
        f = float(np.sum(np.log(w)) - np.einsum("ij,ji->", K, S))
        return K, Kinv, f

    state = evaluate(x)
    if state is None:
        raise DomainError("initial point is not positive definite")
    for it in range(max_iter + 1):
        K, Kinv, f = state
        g = _traces(model, Kinv) - b
        gnorm = float(np.linalg.norm(g))
        KL = np.einsum("ij,djk->dik", Kinv, model.basis)
        M = np.einsum("aij,bji->ab", KL, KL)
        dx = np.linalg.solve(M, g)
        if gnorm <= target:
            # one polishing step, kept only if it helps
            polished = evaluate(x + dx)
            if polished is not None:
                gp = float(np.linalg.norm(_traces(model, polished[1]) - b))
                if gp < gnorm:
                    x, (K, _, f), gnorm = x + dx, polished, gp
            return MLEResult(K=(K + K.T) / 2, x=x, loglik=f, score_norm=gnorm, n_iter=it, converged=True)
        if it == max_iter:
            break
        step = 1.0
        for _ in range(31):
            trial = evaluate(x + step * dx)
            if trial is not None:
                gt = float(np.linalg.norm(_traces(model, trial[1]) - b))
                if trial[2] >= f - 1e-14 * (1 + abs(f)) or gt < gnorm:
                    break
            step *= 0.5
        else:
            raise ConvergenceError(f"line search failed at iteration {it} (score norm {gnorm:.2e})")
        x = x + step * dx
        if np.linalg.norm(x) > 1e8:
            raise UnboundedLikelihoodError("parameters diverged; likelihood appears unbounded")
        state = trial
    raise ConvergenceError(f"no convergence in {max_iter} iterations (score norm {gnorm:.2e})")


class LinearConcentrationMLE(BaseEstimator):
    """Maximum-likelihood estimator of a Gaussian linear concentration model.

    Parameters
    ----------
    basis : list of (n, n) array_like
        Spanning matrices ``L_1 .. L_d`` of the model.
    offset : (n, n) array_like, optional
        Affine offset ``L0``.
    assume_centered : bool
        If True the sample covariance is ``X^T X / k`` without subtracting
        the mean.
    precomputed : bool
        If True, ``fit`` receives the sample covariance itself.
    max_iter, tol
        Newton iteration cap and relative score tolerance.

    Attributes
    ----------
    precision_ : (n, n) ndarray
        The estimated concentration matrix.
    covariance_ : (n, n) ndarray
        Its inverse.
    coef_ : (d,) ndarray
        Model parameters of ``precision_``.
    sample_covariance_, n_iter_, score_norm_, loglik_
    """

    def __init__(self, basis=None, offset=None, assume_centered=False, precomputed=False,
                 max_iter=200, tol=1e-10):
        self.basis = basis
        self.offset = offset
        self.assume_centered = assume_centered
        self.precomputed = precomputed
        self.max_iter = max_iter
        self.tol = tol

    def _model(self, n):
        if self.basis is None:
            return LinearModel.full(n)
        return LinearModel(self.basis, self.offset)

    def _covariance(self, X):
        if self.precomputed:
            return check_symmetric(X, name="S")
        X = check_array(X, ensure_min_samples=1)
        if not self.assume_centered:
            X = X - X.mean(axis=0)
        return X.T @ X / X.shape[0]

    def fit(self, X, y=None):
        S = self._covariance(X)
        model = self._model(S.shape[0])
        if model.n != S.shape[0]:
            raise DimensionMismatchError(f"model is for n={model.n}, data has {S.shape[0]} features")
        res = mle(model, S, max_iter=self.max_iter, tol=self.tol)
        self.model_ = model
        self.sample_covariance_ = S
        self.precision_ = res.K
        self.covariance_ = np.linalg.inv(res.K)
        self.coef_ = res.x
        self.n_iter_ = res.n_iter
        self.score_norm_ = res.score_norm
        self.loglik_ = res.loglik
        self.n_features_in_ = S.shape[0]
        return self

    def get_precision(self):
        check_is_fitted(self, "precision_")
        return self.precision_

    def score(self, X, y=None):
        """Log-likelihood ``log det K - Tr(K S_test)`` of held-out data."""
        check_is_fitted(self, "precision_")
        return log_likelihood(self.precision_, self._covariance(X))


def _to_rational(M):
    return sp.Matrix(M.shape[0], M.shape[1], lambda i, j: sp.Rational(float(M[i, j])))


def critical_polynomial_system(model, S, exact_matrices=None):
    """Cleared-denominator score equations as sympy polynomials in ``x1 .. xd``.

    Polynomial ``i`` is ``Tr(adj(K(x)) L_i) - det(K(x)) Tr(S L_i)`` with
    ``K(x) = sum_j x_j L_j``.  Float inputs are converted to their exact
    binary rationals; pass ``exact_matrices=(basis, S)`` as sympy matrices to
    avoid that.
    """
    if not model.is_linear:
        raise ValueError("critical polynomial system needs a linear model (L0 = 0)")
    if exact_matrices is None:
        S = check_symmetric(S, name="S")
        Ls = [_to_rational(L) for L in model.basis]
        Sq = _to_rational(S)
    else:
        Ls, Sq = exact_matrices
    xs = sp.symbols(f"x1:{model.d + 1}")
    K = sp.zeros(model.n, model.n)
    for xi, L in zip(xs, Ls):
        K += xi * L
    adj = K.adjugate()
    det = K.det()
    polys = []
    for L in Ls:
        expr = (adj * L).trace() - det * (Sq * L).trace()
        polys.append(sp.Poly(sp.expand(expr), *xs, domain=sp.QQ))
    return polys


@dataclass
class CriticalPoint:
    x: np.ndarray
    residual: float
    det: complex
    multiplicity: int


@dataclass
class CriticalPointSet:
    S: np.ndarray
    points: list = field(default_factory=list)
    n_converged: int = 0
    max_membership_residual: float = 0.0

    @property
    def n_distinct(self):
        return len(self.points)

    def to_json(self):
        return {
            "n_distinct": self.n_distinct,
            "n_converged": self.n_converged,
            "max_membership_residual": self.max_membership_residual,
            "S": matrix_to_json(self.S),
            "roots": [
                {
                    "x": [[float(v.real), float(v.imag)] for v in p.x],
                    "residual": p.residual,
                    "det": [float(p.det.real), float(p.det.imag)],
                    "multiplicity": p.multiplicity,
                }
                for p in self.points
            ],
        }


@dataclass
class MLDegreeResult:
    estimate: int
    counts: list
    trials: list
    stable: bool
    flag: str = None

    def to_json(self):
        return {
            "estimate": self.estimate,
            "counts": self.counts,
            "stable": self.stable,
            "flag": self.flag,
            "trials": [t.to_json() for t in self.trials],
        }


def random_sample_covariance(n, rng, pd=True):
    """Generic symmetric matrix with entries uniform in ``[-1, 1]``.

    With ``pd=True`` it is shifted by ``(n + 1) Id``, which makes it PD.
    """
    A = rng.uniform(-1.0, 1.0, size=(n, n))
    A = np.triu(A) + np.triu(A, 1).T
    if pd:
        A = A + (n + 1) * np.eye(n)
    return A


def _batched_score(model, x, b):
    K = model.matrix(x)
    Kinv = np.linalg.inv(K)
    F = _traces(model, Kinv) - b
    return K, Kinv, F


def _safe_batched_score(model, x, b):
    try:
        return _batched_score(model, x, b)
    except np.linalg.LinAlgError:
        pass
    # rare: an exactly singular K somewhere in the batch
    R = x.shape[0]
    K = model.matrix(x)
    Kinv = np.full_like(K, np.nan)
    for r in range(R):
        try:
            Kinv[r] = np.linalg.inv(K[r])
        except np.linalg.LinAlgError:
            pass
    F = _traces(model, Kinv) - b
    return K, Kinv, F


def _newton_solve(model, S, starts, max_iter=200, max_halvings=30, guard=1e8):
    """Damped complex Newton on the score equations, vectorized over starts."""
    b = _traces(model, S).astype(complex)
    x = starts.astype(complex).copy()
    R = x.shape[0]
    scale = 1.0 + np.linalg.norm(b)
    alive = np.ones(R, dtype=bool)
    done = np.zeros(R, dtype=bool)
    _, Kinv, F = _safe_batched_score(model, x, b)
    Fn = np.linalg.norm(F, axis=1)
    Fn[~np.isfinite(Fn)] = np.inf
    alive &= np.isfinite(Fn)
    for _ in range(max_iter):
        done |= alive & (Fn <= 1e-13 * scale)
        act = np.flatnonzero(alive & ~done)
        if act.size == 0:
            break
        KL = np.einsum("rij,djk->rdik", Kinv[act], model.basis)
        J = -np.einsum("raij,rbji->rab", KL, KL)
        try:
            dx = np.linalg.solve(J, -F[act][..., None])[..., 0]
        except np.linalg.LinAlgError:
            dx = np.stack([np.linalg.lstsq(J[k], -F[act][k], rcond=None)[0] for k in range(act.size)])
        step = np.ones(act.size)
        pending = np.ones(act.size, dtype=bool)
        new_x = x[act].copy()
        new_F = F[act].copy()
        new_Kinv = Kinv[act].copy()
        new_Fn = Fn[act].copy()
        for _h in range(max_halvings + 1):
            idx = np.flatnonzero(pending)
            if idx.size == 0:
                break
            xt = x[act][idx] + step[idx, None] * dx[idx]
            _, Kt, Ft = _safe_batched_score(model, xt, b)
            Ftn = np.linalg.norm(Ft, axis=1)
            ok = np.isfinite(Ftn) & (Ftn < Fn[act][idx])
            acc = idx[ok]
            new_x[acc] = xt[ok]
            new_F[acc] = Ft[ok]
            new_Kinv[acc] = Kt[ok]
            new_Fn[acc] = Ftn[ok]
            pending[acc] = False
            step[idx[~ok]] *= 0.5
        # starts whose line search failed are stalled
        alive[act[pending]] = False
        x[act] = new_x
        F[act] = new_F
        Kinv[act] = new_Kinv
        Fn[act] = new_Fn
        alive &= np.linalg.norm(x, axis=1) <= guard
    done &= alive
    return x, Fn / scale, done


def _cluster(points, rtol=1e-6):
    """Greedy clustering after a canonical lexicographic sort."""
    keys = [tuple(np.round(np.concatenate([p.real, p.imag]), 8)) for p in points]
    order = sorted(range(len(points)), key=lambda k: keys[k])
    reps, members = [], []
    for k in order:
        p = points[k]
        for ci, r in enumerate(reps):
            if np.linalg.norm(p - r) <= rtol * (1.0 + np.linalg.norm(r)):
                members[ci].append(k)
                break
        else:
            reps.append(p)
            members.append([k])
    return reps, members


def solve_critical_points(model, S, restarts=500, rng=None, max_iter=200, cluster_rtol=1e-6):
    """Distinct complex critical points of the log-likelihood for one ``S``."""
    if not model.is_linear:
        raise ValueError("ML degree needs a linear model (L0 = 0)")
    S = check_symmetric(S, name="S")
    rng = np.random.default_rng(0) if rng is None else rng
    b = _traces(model, S)
    # at a critical point sum_i x_i Tr(S L_i) = Tr(SK) = n, which sets the scale
    rho = model.n / max(np.linalg.norm(b), 1e-12)
    scales = np.array([0.1, 1.0, 10.0])[np.arange(restarts) % 3]
    z = rng.standard_normal((restarts, model.d)) + 1j * rng.standard_normal((restarts, model.d))
    starts = z / np.sqrt(2) * (rho * scales)[:, None]
    x, resid, conv = _newton_solve(model, S, starts, max_iter=max_iter)
    kept, kept_res, kept_det = [], [], []
    for k in np.flatnonzero(conv):
        K = model.matrix(x[k])
        det = complex(np.linalg.det(K))
        if abs(det) < 1e-10 * np.linalg.norm(K) ** model.n:
            continue
        if resid[k] >= 1e-10:
            continue
        kept.append(x[k])
        kept_res.append(float(resid[k]))
        kept_det.append(det)
    out = CriticalPointSet(S=S, n_converged=len(kept))
    if not kept:
        return out
    reps, members = _cluster(kept, cluster_rtol)
    worst = 0.0
    for rep, mem in zip(reps, members):
        best = min(mem, key=lambda k: kept_res[k])
        K = model.matrix(kept[best])
        Sigma = np.linalg.inv(K)
        # membership of Sigma in L^perp + S
        memb = np.abs(_traces(model, Sigma - S)) / (1.0 + np.abs(_traces(model, S)))
        worst = max(worst, float(np.max(memb)))
        out.points.append(CriticalPoint(x=kept[best], residual=kept_res[best],
                                        det=kept_det[best], multiplicity=len(mem)))
    out.max_membership_residual = worst
    return out


def ml_degree(model, trials=3, restarts=500, seed=0, samples=None):
    """Estimate the ML degree of a linear model.

    For each trial a generic ``S`` (or the matrices in ``samples``) is
    solved with ``restarts`` random complex starts; the estimate is the
    largest per-trial count of distinct critical points.  Disagreeing trial
    counts are reported through ``stable=False`` and ``flag``.
    """
    if not model.is_linear:
        raise ValueError("ML degree needs a linear model (L0 = 0)")
    check_positive_int(restarts, "restarts")
    if samples is None:
        check_positive_int(trials, "trials")
        samples = [None] * trials
    results = []
    for t, S in enumerate(samples):
        rng = np.random.default_rng([seed, t])
        if S is None:
            S = random_sample_covariance(model.n, rng, pd=False)
        res = solve_critical_points(model, S, restarts=restarts, rng=rng)
        if res.max_membership_residual > 1e-8:
            raise NumericalFailure(
                f"critical point fails the L-perp + S membership check "
                f"({res.max_membership_residual:.2e})"
            )
        log.debug("trial %d: %d distinct critical points", t, res.n_distinct)
        results.append(res)
    counts = [r.n_distinct for r in results]
    if max(counts) == 0:
        raise NumericalFailure("no critical points converged; increase restarts")
    stable = len(set(counts)) == 1
    flag = None if stable else "unstable - increase restarts"
    return MLDegreeResult(estimate=max(counts), counts=counts, trials=results, stable=stable, flag=flag)


def polar_space(model):
    """Orthonormal basis (trace pairing) of the annihilator of the span of ``L_i``."""
    null = sla.null_space(model._coords)
    return [_mat_array(null[:, k], model.n) for k in range(null.shape[1])]
