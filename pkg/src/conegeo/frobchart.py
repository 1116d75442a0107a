"""The diagonal chart of the cone and its associativity (WDVV) equations.

Points of the chart are positive vectors ``t`` standing for ``diag(t)``.
On this chart the log-det potential splits as ``-c sum log t_i``, the
metric is diagonal and the cubic tensor is supported on the diagonal
``(i, i, i)``, which makes the chart flat and the associativity equations
hold identically.  Polynomial potentials can be supplied for comparison;
they are differentiated exactly and contracted in floating point.
"""

import json
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from ._validation import (
    DimensionMismatchError,
    DomainError,
    SingularHessianError,
    check_positive_int,
    check_vector,
)

__all__ = [
    "DiagChart",
    "LogPotential",
    "PolynomialPotential",
    "diag_metric",
    "wdvv_residual",
    "wdvv_tensor",
    "chart_flatness",
    "parse_potential",
    "stored_counterexample",
]


@dataclass(frozen=True)
class DiagChart:
    t: tuple
    c: float = None

    def __post_init__(self):
        t = check_vector(self.t, name="t")
        if np.any(t <= 0):
            raise DomainError("diagonal chart coordinates must be positive")
        object.__setattr__(self, "t", tuple(float(v) for v in t))
        n = len(t)
        c = (n + 1) / 2 if self.c is None else float(self.c)
        if c <= 0:
            raise ValueError("c must be positive")
        object.__setattr__(self, "c", c)

    @property
    def n(self):
        return len(self.t)

    def matrix(self):
        return np.diag(self.t)


def diag_metric(chart):
    """Metric ``c / t_i^2`` on the diagonal chart."""
    t = np.asarray(chart.t)
    return np.diag(chart.c / t**2)


class LogPotential:
    """Built-in potential ``-c sum_i log t_i``."""

    def __init__(self, n, c=None):
        self.n = check_positive_int(n, "n")
        self.c = (n + 1) / 2 if c is None else float(c)
        if self.c <= 0:
            raise ValueError("c must be positive")

    def _t(self, t):
        t = check_vector(t, self.n, name="t")
        if np.any(t <= 0):
            raise DomainError("log potential needs positive coordinates")
        return t

    def value(self, t):
        return float(-self.c * np.sum(np.log(self._t(t))))

    def hessian(self, t):
        return np.diag(self.c / self._t(t) ** 2)

    def third(self, t):
        t = self._t(t)
        A = np.zeros((self.n,) * 3)
        idx = np.arange(self.n)
        A[idx, idx, idx] = -2 * self.c / t**3
        return A


class PolynomialPotential:
    """Polynomial potential in ``t1 .. tn`` with rational coefficients.

    Second and third partials are taken exactly; only their evaluation at
    a point is floating point.
    """

    def __init__(self, expr, n):
        self.n = check_positive_int(n, "n")
        self.gens = sp.symbols(f"t1:{n + 1}")
        self.poly = sp.Poly(expr, *self.gens, domain=sp.QQ)
        g = self.gens
        self._hess = [[self.poly.diff(g[i]).diff(g[j]) for j in range(n)] for i in range(n)]
        self._third = {}
        for i in range(n):
            for j in range(i, n):
                for k in range(j, n):
                    self._third[i, j, k] = self._hess[i][j].diff(g[k])

    def __repr__(self):
        return f"PolynomialPotential({self.poly.as_expr()}, n={self.n})"

    def _eval(self, p, t):
        return float(p.eval(dict(zip(self.gens, t)))) if not p.is_zero else 0.0

    def _point(self, t):
        t = check_vector(t, self.n, name="t")
        return [sp.Rational(v) for v in t]

    def value(self, t):
        return self._eval(self.poly, self._point(t))

    def hessian(self, t):
        t = self._point(t)
        return np.array([[self._eval(h, t) for h in row] for row in self._hess])

    def third(self, t):
        t = self._point(t)
        A = np.zeros((self.n,) * 3)
        for (i, j, k), p in self._third.items():
            v = self._eval(p, t)
            for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                A[a, b, c] = v
        return A

    def exact_third(self, t):
        """Exact rational third-derivative tensor (nested lists) at a rational point."""
        t = [sp.Rational(v) for v in t]
        subs = dict(zip(self.gens, t))
        out = [[[None] * self.n for _ in range(self.n)] for _ in range(self.n)]
        for (i, j, k), p in self._third.items():
            v = p.eval(subs) if not p.is_zero else sp.Integer(0)
            for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                out[a][b][c] = v
        return out

    def exact_hessian(self, t):
        subs = dict(zip(self.gens, [sp.Rational(v) for v in t]))
        return sp.Matrix([[h.eval(subs) if not h.is_zero else 0 for h in row] for row in self._hess])


_POLY_TOKEN = re.compile(r"\s*(t\d+|\d+(?:/\d+)?|[-+*^()])")


def parse_potential(text, n):
    """Parse a polynomial potential string in ``t1 .. tn``.

    Grammar: integer or rational coefficients, ``+ - * ^`` and parentheses,
    with non-negative integer exponents.
    """
    pos = 0
    text = text.strip()
    if not text:
        raise ValueError("empty potential")
    while pos < len(text):
        m = _POLY_TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected character {text[pos]!r} at position {pos}")
        tok = m.group(1)
        if tok.startswith("t") and not 1 <= int(tok[1:]) <= n:
            raise ValueError(f"variable {tok} out of range for n={n}")
        pos = m.end()
    gens = sp.symbols(f"t1:{n + 1}")
    local = {str(g): g for g in gens}
    expr = parse_expr(
        text.replace("^", "**"), local_dict=local, transformations=standard_transformations,
        evaluate=True,
    )
    try:
        sp.Poly(expr, *gens, domain=sp.QQ)
    except (sp.PolynomialError, sp.GeneratorsNeeded, sp.CoercionFailed) as exc:
        raise ValueError(f"not a polynomial with rational coefficients: {text}") from exc
    return PolynomialPotential(expr, n)


def _tensors(pot, t, metric=None):
    g = pot.hessian(t) if metric is None else np.asarray(metric, dtype=float)
    if g.shape != (pot.n, pot.n):
        raise DimensionMismatchError(f"metric must be {pot.n}x{pot.n}")
    try:
        cond = np.linalg.cond(g)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularHessianError(f"Hessian of the potential is singular at t={list(t)}") from exc
    return ginv, pot.third(t)


def wdvv_tensor(pot, t, metric=None):
    """Both sides of the associativity equations, indexed ``[a, b, c, d]``.

    Returns ``(lhs, rhs)`` with ``lhs = sum A_abe g^ef A_fcd`` and
    ``rhs = sum A_fcb g^ef A_ead``.
    """
    ginv, A = _tensors(pot, t, metric)
    lhs = np.einsum("abe,ef,fcd->abcd", A, ginv, A)
    rhs = np.einsum("fcb,ef,ead->abcd", A, ginv, A)
    return lhs, rhs


def wdvv_residual(pot, t, metric=None):
    """Largest absolute violation of the associativity equations at ``t``.

    Not normalized by the size of the tensors.
    """
    lhs, rhs = wdvv_tensor(pot, t, metric)
    return float(np.max(np.abs(lhs - rhs)))


def chart_flatness(pot, t):
    """Largest entry of ``R_acdb = sum g^ef (A_eab A_fcd - A_ead A_fcb)`` on the chart."""
    ginv, A = _tensors(pot, t)
    R = np.einsum("ef,eab,fcd->acdb", ginv, A, A) - np.einsum("ef,ead,fcb->acdb", ginv, A, A)
    return float(np.max(np.abs(R)))


def stored_counterexample():
    """Quartic potential shipped with the package that breaks associativity.

    Returns ``(potential, point)``.
    """
    raw = resources.files("conegeo").joinpath("data/quartic_n3.json").read_text()
    obj = json.loads(raw)
    return parse_potential(obj["potential"], obj["n"]), tuple(obj["at"])
