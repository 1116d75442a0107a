"""Independent reference computations used by the test-suite.

Nothing here calls the closed-form tensors under test: derivatives come
from finite differences of ``slogdet``, curvature from Christoffel symbols
of a differenced metric, and polynomial counts from exact elimination.
"""

import itertools

import numpy as np
import sympy as sp


def sym_from_coords(x, n):
    """Matrix of coordinate vector ``x`` in the trace-orthonormal basis, built by hand."""
    X = np.zeros((n, n))
    k = 0
    for i in range(n):
        X[i, i] = x[k]
        k += 1
    r = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            X[i, j] = X[j, i] = x[k] * r
            k += 1
    return X


def coords_from_sym(X):
    n = X.shape[0]
    out = [X[i, i] for i in range(n)]
    out += [np.sqrt(2) * X[i, j] for i in range(n) for j in range(i + 1, n)]
    return np.array(out)


def logdet_potential(x, n, c):
    sign, ld = np.linalg.slogdet(sym_from_coords(x, n))
    assert sign > 0
    return -c * ld


def _step(x, scale):
    return scale * (1.0 + np.abs(x))


def fd_hessian(f, x, scale=1e-4):
    """Composition of two central differences; valid on the diagonal too."""
    N = len(x)
    h = _step(x, scale)
    H = np.zeros((N, N))
    for a in range(N):
        for b in range(a, N):
            acc = 0.0
            for sa, sb in itertools.product((1, -1), repeat=2):
                y = x.copy()
                y[a] += sa * h[a]
                y[b] += sb * h[b]
                acc += sa * sb * f(y)
            H[a, b] = H[b, a] = acc / (4 * h[a] * h[b])
    return H


def fd_third(f, x, scale=1e-3):
    N = len(x)
    h = _step(x, scale)
    T = np.zeros((N, N, N))
    for a, b, c in itertools.combinations_with_replacement(range(N), 3):
        acc = 0.0
        for s in itertools.product((1, -1), repeat=3):
            y = x.copy()
            y[a] += s[0] * h[a]
            y[b] += s[1] * h[b]
            y[c] += s[2] * h[c]
            acc += s[0] * s[1] * s[2] * f(y)
        val = acc / (8 * h[a] * h[b] * h[c])
        for p in set(itertools.permutations((a, b, c))):
            T[p] = val
    return T


def christoffel_sectional(metric_fn, x, u, v, h=1e-4):
    """Sectional curvature of a metric field by brute-force Christoffel symbols.

    ``metric_fn(x)`` gives the metric matrix at coordinates ``x``.  Uses
    ``R(u,v)v = (nabla_u nabla_v - nabla_v nabla_u) v`` in coordinates with
    ``R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik``.
    """
    N = len(x)

    def dmetric(y):
        D = np.zeros((N, N, N))  # D[k] = d_k g
        for k in range(N):
            e = np.zeros(N)
            e[k] = h
            D[k] = (metric_fn(y + e) - metric_fn(y - e)) / (2 * h)
        return D

    def gamma(y):
        g = metric_fn(y)
        gi = np.linalg.inv(g)
        D = dmetric(y)
        # G^l_ij = 1/2 g^lm (d_i g_jm + d_j g_im - d_m g_ij)
        t = D.transpose(0, 1, 2) + D.transpose(1, 0, 2) - D.transpose(1, 2, 0)
        return 0.5 * np.einsum("lm,ijm->lij", gi, t)

    G = gamma(x)
    dG = np.zeros((N, N, N, N))  # dG[i, l, j, k] = d_i G^l_jk
    H = 10 * h
    for i in range(N):
        e = np.zeros(N)
        e[i] = H
        dG[i] = (gamma(x + e) - gamma(x - e)) / (2 * H)
    R = (
        np.einsum("iljk->lijk", dG)
        - np.einsum("jlik->lijk", dG)
        + np.einsum("lim,mjk->lijk", G, G)
        - np.einsum("ljm,mik->lijk", G, G)
    )
    g = metric_fn(x)
    Ruvv = np.einsum("lijk,i,j,k->l", R, u, v, v)
    area = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return float(u @ g @ Ruvv / area)


def cholesky_is_pd(A):
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return False
    return True


def standard_monomial_count(polys, gens):
    """Dimension of ``Q[gens]/I`` for a zero-dimensional ideal, via a grevlex basis."""
    G = sp.groebner(polys, *gens, order="grevlex", domain=sp.QQ)
    leads = [sp.Poly(g, *gens).monoms(order="grevlex")[0] for g in G.exprs]
    m = len(gens)
    pure = [None] * m
    for lm in leads:
        nz = [i for i in range(m) if lm[i]]
        if len(nz) == 1:
            i = nz[0]
            pure[i] = lm[i] if pure[i] is None else min(pure[i], lm[i])
    if any(p is None for p in pure):
        raise ValueError("ideal is not zero-dimensional")
    count = 0
    for mono in itertools.product(*[range(p) for p in pure]):
        if not any(all(mono[i] >= lm[i] for i in range(m)) for lm in leads):
            count += 1
    return count


def exact_ml_degree(basis, S):
    """Critical points with ``det K != 0`` for a linear model, exactly over Q.

    ``basis`` and ``S`` are sympy matrices with rational entries.  The
    score equations are cleared of denominators and saturated by
    ``det K`` with an extra variable ``y``.
    """
    d = len(basis)
    xs = sp.symbols(f"x1:{d + 1}")
    y = sp.Symbol("y")
    K = sp.zeros(*basis[0].shape)
    for xi, L in zip(xs, basis):
        K += xi * L
    det = sp.expand(K.det())
    adj = K.adjugate()
    eqs = [sp.expand((adj * L).trace() - det * (S * L).trace()) for L in basis]
    eqs.append(sp.expand(y * det - 1))
    return standard_monomial_count(eqs, (*xs, y))


def resultant_root_count(basis, S):
    """Distinct roots in ``x2`` of the eliminant, with the ``x2 = 0`` factor removed.

    Only for two-parameter models.
    """
    x1, x2 = sp.symbols("x1 x2")
    K = x1 * basis[0] + x2 * basis[1]
    det = sp.expand(K.det())
    adj = K.adjugate()
    p, q = [sp.expand((adj * L).trace() - det * (S * L).trace()) for L in basis]
    r = sp.Poly(sp.resultant(p, q, x1), x2)
    while r.eval(0) == 0:
        r = sp.Poly(sp.quo(r.as_expr(), x2), x2)
    return sp.Poly(sp.sqf_part(r.as_expr()), x2).degree()


def rational_matrix(M):
    M = np.asarray(M)
    return sp.Matrix(M.shape[0], M.shape[1], lambda i, j: sp.nsimplify(M[i, j], rational=True))
