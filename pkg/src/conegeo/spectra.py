"""Spectrahedra, diagospectrahedra and concentration-cone membership."""

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import DimensionMismatchError, check_symmetric, check_vector
from .symcone import matrix_from_json, matrix_to_json

__all__ = [
    "Membership",
    "Classification",
    "Spectrahedron",
    "Diagospectrahedron",
    "AffineInequalities",
    "membership",
    "diago_inequalities",
    "concentration_cone_membership",
]


class Membership(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class Classification:
    status: Membership
    margin: float
    scale: float

    def to_json(self):
        return {"status": self.status.value, "margin": self.margin, "scale": self.scale}


def _classify(lam, scale, tol):
    if abs(lam) <= tol * scale:
        return Membership.BOUNDARY
    return Membership.INTERIOR if lam > 0 else Membership.OUTSIDE


class Spectrahedron:
    """``{x : Q0 + sum_i x_i Q_i is PSD}``."""

    def __init__(self, Q0, generators):
        self.Q0 = check_symmetric(Q0, name="Q0")
        gens = [check_symmetric(Q, name=f"Q{i + 1}") for i, Q in enumerate(generators)]
        if not gens:
            raise ValueError("a spectrahedron needs at least one generator")
        n = self.Q0.shape[0]
        if any(Q.shape[0] != n for Q in gens):
            raise DimensionMismatchError("generators differ in size")
        self.generators = np.stack(gens)
        self.n = n

    @property
    def m(self):
        return self.generators.shape[0]

    def matrix(self, x):
        x = check_vector(x, self.m)
        return self.Q0 + np.tensordot(x, self.generators, axes=(0, 0))

    def is_diagonal(self):
        off = ~np.eye(self.n, dtype=bool)
        return not np.any(self.Q0[off]) and not np.any(self.generators[:, off])

    def to_json(self):
        return {
            "n": self.n,
            "Q0": matrix_to_json(self.Q0),
            "generators": [matrix_to_json(Q) for Q in self.generators],
        }

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "Q0" not in obj or "generators" not in obj:
            raise ValueError('spectrahedron JSON must be {"n": int, "Q0": matrix, "generators": [...]}')
        spec = cls(matrix_from_json(obj["Q0"]), [matrix_from_json(Q) for Q in obj["generators"]])
        if spec.is_diagonal():
            spec = Diagospectrahedron(spec.Q0, spec.generators)
        if "n" in obj and obj["n"] != spec.n:
            raise ValueError(f"declared n={obj['n']} but matrices are {spec.n}x{spec.n}")
        return spec


class Diagospectrahedron(Spectrahedron):
    """Spectrahedron with diagonal data; it is a polyhedron."""

    def __init__(self, Q0, generators):
        super().__init__(Q0, generators)
        if not self.is_diagonal():
            raise ValueError("diagospectrahedron generators must all be diagonal")


def membership(spec, x, tol=1e-9):
    """Classify ``Q(x)`` by its smallest eigenvalue.

    The boundary band is ``|lambda_min| <= tol * ||Q(x)||_F``.
    """
    Q = spec.matrix(x)
    lam = float(np.linalg.eigvalsh(Q)[0])
    scale = float(np.linalg.norm(Q))
    return Classification(_classify(lam, scale, tol), lam, scale)


@dataclass(frozen=True)
class AffineInequalities:
    """Functionals ``f_j(x) = constants[j] + coefficients[j] . x`` required to be ``>= 0``."""

    constants: tuple
    coefficients: tuple

    def values(self, x):
        x = check_vector(x, len(self.coefficients[0]))
        return np.array(self.constants) + np.array(self.coefficients) @ x

    def exact_values(self, x):
        x = [Fraction(v) for v in x]
        return [
            Fraction(c) + sum(Fraction(a) * xi for a, xi in zip(row, x))
            for c, row in zip(self.constants, self.coefficients)
        ]

    def classify(self, x, tol=1e-9):
        """Same three-way rule as :func:`membership`, read off the functionals."""
        f = self.values(x)
        lam = float(np.min(f))
        scale = float(np.linalg.norm(f))
        return Classification(_classify(lam, scale, tol), lam, scale)

    def __str__(self):
        rows = []
        for c, row in zip(self.constants, self.coefficients):
            terms = [f"{c:g}"] + [f"{a:+g}*x{i + 1}" for i, a in enumerate(row) if a != 0]
            rows.append(" ".join(terms) + " >= 0")
        return "\n".join(rows)


def diago_inequalities(d):
    """The ``n`` affine inequalities describing a diagospectrahedron."""
    if not isinstance(d, Diagospectrahedron):
        if not d.is_diagonal():
            raise ValueError("generators must all be diagonal")
    consts = tuple(float(v) for v in np.diag(d.Q0))
    coeffs = tuple(tuple(float(Q[j, j]) for Q in d.generators) for j in range(d.n))
    return AffineInequalities(consts, coeffs)


def concentration_cone_membership(model, x, tol=1e-9):
    """Classify ``K(x)`` of a linear model against the PD cone."""
    x = check_vector(x, model.d)
    K = model.matrix(x)
    lam = float(np.linalg.eigvalsh(K)[0])
    scale = float(np.linalg.norm(K))
    return Classification(_classify(lam, scale, tol), lam, scale)
