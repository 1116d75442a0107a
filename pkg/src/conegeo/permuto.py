"""Exact combinatorics of the compactified diagonal chart.

Faces of the ``n``-permutohedron, cones of the type ``A_n`` Weyl-chamber
fan and boundary strata of the compactified chart are all indexed by
ordered set partitions of ``{1, ..., n+1}``.  An ordered set partition
``(B_1, ..., B_k)`` names the face whose vertices give the smallest values
to ``B_1``, the next ones to ``B_2`` and so on; the same partition names
the fan cone ``{a : a constant on blocks, a(B_1) < ... < a(B_k)}``, which
is the normal cone of that face.

Everything here is integer arithmetic; there are no tolerances.
"""

import warnings
from collections import Counter
from dataclasses import dataclass
from itertools import combinations, permutations, product
from math import comb, factorial

from ._validation import check_positive_int

__all__ = [
    "Permutation",
    "OrderedSetPartition",
    "RootSubset",
    "WeylChamberFan",
    "vertices",
    "faces",
    "f_vector",
    "ordered_set_partitions",
    "count_ordered_set_partitions",
    "weyl_chamber_fan",
    "fixed_point_strata",
    "coset_count",
    "bb_cells",
    "default_weight",
    "frobenius_residual_strata",
    "ml_degree_indexing_report",
]

FACE_LIMIT = 7
REPORT_LIMIT = 5


@dataclass(frozen=True, order=True)
class Permutation:
    """Bijection of ``{1..n+1}`` stored as its image list."""

    image: tuple

    def __post_init__(self):
        image = tuple(int(v) for v in self.image)
        if sorted(image) != list(range(1, len(image) + 1)):
            raise ValueError(f"{image} is not a permutation of 1..{len(image)}")
        object.__setattr__(self, "image", image)

    def __len__(self):
        return len(self.image)

    def compose(self, other):
        """``(self o other)(i) = self(other(i))``."""
        return Permutation(tuple(self.image[j - 1] for j in other.image))


@dataclass(frozen=True, order=True)
class OrderedSetPartition:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(v) for v in b)) for b in self.blocks)
        if not blocks or any(len(b) == 0 for b in blocks):
            raise ValueError("blocks must be nonempty")
        flat = sorted(v for b in blocks for v in b)
        if flat != list(range(1, len(flat) + 1)):
            raise ValueError("blocks must be disjoint and cover 1..n+1")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def _trusted(cls, blocks):
        # blocks already canonical; skips validation in bulk enumeration
        obj = object.__new__(cls)
        object.__setattr__(obj, "blocks", blocks)
        return obj

    @property
    def ground_size(self):
        return sum(len(b) for b in self.blocks)

    @property
    def face_dim(self):
        return self.ground_size - len(self.blocks)

    @property
    def cone_dim(self):
        return len(self.blocks) - 1

    def is_vertex(self):
        return len(self.blocks) == self.ground_size

    def as_vertex(self):
        """Vertex coordinates of a singleton-block partition."""
        if not self.is_vertex():
            raise ValueError("only singleton-block partitions are vertices")
        v = [0] * self.ground_size
        for value, (elem,) in enumerate(self.blocks, start=1):
            v[elem - 1] = value
        return tuple(v)

    def face_vertices(self):
        """All permutohedron vertices lying on this face, sorted."""
        per_block = []
        start = 1
        for b in self.blocks:
            vals = range(start, start + len(b))
            per_block.append([dict(zip(b, p)) for p in permutations(vals)])
            start += len(b)
        out = []
        for choice in product(*per_block):
            v = [0] * self.ground_size
            for assignment in choice:
                for elem, val in assignment.items():
                    v[elem - 1] = val
            out.append(tuple(v))
        return sorted(out)

    def to_json(self):
        return [list(b) for b in self.blocks]


@dataclass(frozen=True, order=True)
class RootSubset:
    """Set of pairwise orthogonal simple roots of ``A_n`` (no two adjacent)."""

    n: int
    J: tuple

    def __post_init__(self):
        J = tuple(sorted(int(j) for j in self.J))
        if len(set(J)) != len(J) or any(not 1 <= j <= self.n for j in J):
            raise ValueError(f"J must be a subset of 1..{self.n}")
        if any(b - a == 1 for a, b in zip(J, J[1:])):
            raise ValueError(f"J={J} contains adjacent simple roots")
        object.__setattr__(self, "J", J)

    @property
    def stratum_size(self):
        return factorial(self.n + 1) // 2 ** len(self.J)


def vertices(n):
    """The ``(n+1)!`` permutations of ``(1, ..., n+1)``."""
    check_positive_int(n, "n")
    return sorted(permutations(range(1, n + 2)))


def _guard(n, limit, allow_large):
    check_positive_int(n, "n")
    if n > limit:
        if not allow_large:
            raise ValueError(f"n={n} exceeds the enumeration limit {limit}; pass allow_large=True")
        warnings.warn(f"enumerating for n={n} may need a lot of memory", ResourceWarning, stacklevel=3)


def ordered_set_partitions(ground):
    """Recursive block-building enumeration of ordered set partitions.

    Works on bitmasks of the ground set with memoized tails; yields tuples
    of sorted blocks.
    """
    ground = tuple(ground)
    elems = {1 << i: v for i, v in enumerate(ground)}
    memo = {0: [()]}

    def block(mask):
        return tuple(v for bit, v in elems.items() if mask & bit)

    def build(mask):
        if mask in memo:
            return memo[mask]
        out = []
        sub = mask
        while sub:
            first = block(sub)
            for tail in build(mask ^ sub):
                out.append((first,) + tail)
            sub = (sub - 1) & mask
        memo[mask] = out
        return out

    yield from build((1 << len(ground)) - 1)


def count_ordered_set_partitions(m, k):
    """Ordered partitions of an ``m``-set into ``k`` blocks (surjections ``[m] -> [k]``)."""
    return sum((-1) ** j * comb(k, j) * (k - j) ** m for j in range(k + 1))


def faces(n, allow_large=False):
    """All faces of the ``n``-permutohedron, canonically sorted."""
    _guard(n, FACE_LIMIT, allow_large)
    raw = sorted(ordered_set_partitions(range(1, n + 2)), key=lambda b: (n + 1 - len(b), b))
    return [OrderedSetPartition._trusted(b) for b in raw]


def f_vector(n, allow_large=False):
    """Face counts by dimension, ``(f_0, ..., f_n)``."""
    _guard(n, FACE_LIMIT, allow_large)
    counts = Counter(n + 1 - len(b) for b in ordered_set_partitions(range(1, n + 2)))
    return [counts[k] for k in range(n + 1)]


class WeylChamberFan:
    """Fan of the hyperplanes ``a_i = a_j`` in ``{a : sum a_i = 0}``."""

    def __init__(self, n):
        self.n = check_positive_int(n, "n")

    def maximal_cones(self):
        """One permutation ``s`` per chamber ``a_s(1) <= ... <= a_s(n+1)``."""
        return [Permutation(p) for p in permutations(range(1, self.n + 2))]

    def cones(self):
        raw = sorted(ordered_set_partitions(range(1, self.n + 2)), key=lambda b: (len(b), b))
        return [OrderedSetPartition._trusted(b) for b in raw]

    def _check_point(self, a):
        a = tuple(a)
        if len(a) != self.n + 1:
            raise ValueError(f"point must have {self.n + 1} coordinates")
        if sum(a) != 0:
            raise ValueError("point must lie on the hyperplane sum a_i = 0")
        return a

    def locate(self, a):
        """The relatively open cone containing ``a``; exact ties define shared faces."""
        a = self._check_point(a)
        levels = sorted(set(a))
        return OrderedSetPartition(
            tuple(tuple(i + 1 for i, v in enumerate(a) if v == lev) for lev in levels)
        )

    def maximal_cones_containing(self, a):
        cone = self.locate(a)
        out = []
        for choice in product(*(permutations(b) for b in cone.blocks)):
            out.append(Permutation(tuple(v for block in choice for v in block)))
        return sorted(out)

    @staticmethod
    def in_chamber(a, sigma):
        vals = [a[i - 1] for i in sigma.image]
        return all(x <= y for x, y in zip(vals, vals[1:]))


def weyl_chamber_fan(n):
    return WeylChamberFan(n)


def _independent_subsets(n):
    out = []
    for r in range(n + 1):
        for J in combinations(range(1, n + 1), r):
            if all(b - a > 1 for a, b in zip(J, J[1:])):
                out.append(RootSubset(n, J))
    return out


def fixed_point_strata(n):
    """Strata ``W / W_J`` over pairwise orthogonal root sets ``J``.

    Returns ``(rows, total)`` where rows are ``(RootSubset, size)`` with
    ``size = (n+1)! / 2^|J|``.
    """
    check_positive_int(n, "n")
    rows = [(J, J.stratum_size) for J in _independent_subsets(n)]
    return rows, sum(size for _, size in rows)


def coset_count(J):
    """Number of cosets ``W / W_J`` by direct enumeration of canonical representatives."""
    m = J.n + 1
    gens = []
    for i in J.J:
        img = list(range(1, m + 1))
        img[i - 1], img[i] = img[i], img[i - 1]
        gens.append(Permutation(tuple(img)))
    # W_J is an elementary abelian 2-group: all products of distinct generators
    subgroup = []
    for mask in product((0, 1), repeat=len(gens)):
        w = Permutation(tuple(range(1, m + 1)))
        for bit, s in zip(mask, gens):
            if bit:
                w = w.compose(s)
        subgroup.append(w)
    reps = set()
    for p in permutations(range(1, m + 1)):
        sigma = Permutation(p)
        reps.add(min(sigma.compose(w) for w in subgroup))
    return len(reps)


def default_weight(n):
    """Generic integer weight ``(-n, -n+2, ..., n)`` on the sum-zero hyperplane."""
    return tuple(2 * i - n for i in range(n + 1))


@dataclass(frozen=True)
class BBCells:
    cells: tuple  # (vertex, dimension) pairs
    census: dict

    @property
    def total(self):
        return len(self.cells)


def bb_cells(n, weight=None):
    """Per-vertex cell dimensions for a generic one-parameter subgroup.

    The cell centred at a vertex has dimension equal to the number of
    permutohedron edges at that vertex along which ``weight`` increases.
    """
    check_positive_int(n, "n")
    weight = default_weight(n) if weight is None else tuple(weight)
    if len(weight) != n + 1:
        raise ValueError(f"weight must have {n + 1} entries")
    if any(int(w) != w for w in weight):
        raise ValueError("weight must be an integer vector")
    if sum(weight) != 0:
        raise ValueError("weight must lie on the hyperplane sum a_i = 0")
    if len(set(weight)) != len(weight):
        raise ValueError("weight is not generic: entries must be pairwise distinct")
    cells = []
    for v in vertices(n):
        pos = {val: i for i, val in enumerate(v)}
        up = 0
        for k in range(1, n + 1):
            # edge swapping values k and k+1 moves along e_i - e_j
            i, j = pos[k], pos[k + 1]
            if weight[i] - weight[j] > 0:
                up += 1
        cells.append((v, up))
    census = Counter(dim for _, dim in cells)
    return BBCells(tuple(cells), {k: census[k] for k in range(n + 1)})


@dataclass(frozen=True)
class Stratum:
    face: OrderedSetPartition
    dim: int
    cell_centers: tuple

    def to_json(self):
        return {"face": self.face.to_json(), "dim": self.dim,
                "cell_centers": [list(v) for v in self.cell_centers]}


def frobenius_residual_strata(n, allow_large=False):
    """Boundary strata of the compactified chart: the proper faces, by dimension.

    Each stratum lists the vertices (BB cell centres) lying on it.
    """
    by_dim = {}
    for f in faces(n, allow_large):
        if len(f.blocks) < 2:
            continue
        by_dim.setdefault(f.face_dim, []).append(
            Stratum(face=f, dim=f.face_dim, cell_centers=tuple(f.face_vertices()))
        )
    return by_dim


def ml_degree_indexing_report(n, allow_large=False):
    """Index set of torus-fixed points on the boundary strata of the chart.

    Only the index set is produced; the rational weight attached to each
    fixed point is left as ``None``.
    """
    _guard(n, REPORT_LIMIT, allow_large)
    strata = frobenius_residual_strata(n, allow_large=True)
    incidence = Counter()
    for group in strata.values():
        for s in group:
            incidence.update(s.cell_centers)
    index = [
        {"vertex": list(v), "residual_strata": incidence[v], "weight": None}
        for v in vertices(n)
        if incidence[v] > 0
    ]
    rows, total = fixed_point_strata(n)
    table = [
        {
            "J": list(J.J),
            "size": size,
            "placement": "diagonal chart" if not J.J else "ambient, placement unspecified",
        }
        for J, size in rows
    ]
    return {
        "n": n,
        "index_set": index,
        "cardinality": len(index),
        "residual_strata": {str(k): len(v) for k, v in sorted(strata.items())},
        "fixed_point_strata": table,
        "fixed_point_total": total,
    }
