from math import comb, factorial

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from conegeo.permuto import (
    FACE_LIMIT,
    REPORT_LIMIT,
    OrderedSetPartition,
    Permutation,
    RootSubset,
    bb_cells,
    coset_count,
    count_ordered_set_partitions,
    default_weight,
    f_vector,
    faces,
    fixed_point_strata,
    frobenius_residual_strata,
    ml_degree_indexing_report,
    vertices,
    weyl_chamber_fan,
)


def eulerian(m, k):
    # permutations of m letters with k descents
    return sum((-1) ** j * comb(m + 1, j) * (k + 1 - j) ** m for j in range(k + 1))


def random_generic_weight(rng, n):
    w = rng.choice(np.arange(-40, 41), size=n + 1, replace=False)
    return tuple(int(v) for v in (n + 1) * w - w.sum())


def argmax_face(a, verts):
    vals = [sum(x * y for x, y in zip(a, v)) for v in verts]
    top = max(vals)
    return sorted(v for v, s in zip(verts, vals) if s == top)


class TestVertices:
    def test_small(self):
        assert vertices(1) == [(1, 2), (2, 1)]
        assert len(vertices(2)) == 6
        assert len(set(vertices(4))) == 120

    def test_hexagon_is_convex_position(self):
        V = np.array(vertices(2), dtype=float)
        # coordinates in the plane sum = 6
        B = np.array([[1, -1, 0], [1, 1, -2]], dtype=float).T
        hull = ConvexHull(V @ B)
        assert len(hull.vertices) == 6


class TestFaces:
    @pytest.mark.parametrize(
        "n, f", [(1, [2, 1]), (2, [6, 6, 1]), (3, [24, 36, 14, 1]), (4, [120, 240, 150, 30, 1])]
    )
    def test_f_vector(self, n, f):
        assert f_vector(n) == f
        assert [count_ordered_set_partitions(n + 1, n + 1 - k) for k in range(n + 1)] == f

    @pytest.mark.parametrize("n, total", [(1, 3), (2, 13), (3, 75), (4, 541)])
    def test_totals(self, n, total):
        assert len(faces(n)) == total

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_euler_relation(self, n):
        assert sum((-1) ** k * c for k, c in enumerate(f_vector(n))) == 1

    def test_facets_match_convex_hull(self):
        V = np.array(vertices(3), dtype=float)
        B = np.linalg.qr(np.vstack([np.ones(4), np.eye(4)[:3]]).T)[0][:, 1:]
        hull = ConvexHull(V @ B)
        normals = {tuple(np.round(eq[:3], 6)) for eq in hull.equations}
        assert len(normals) == f_vector(3)[2]

    def test_faces_are_argmax_sets(self, rng):
        n = 3
        verts = vertices(n)
        fan = weyl_chamber_fan(n)
        for _ in range(200):
            a = list(rng.integers(-3, 4, size=n))
            a.append(-sum(a))
            cone = fan.locate(a)
            assert cone.face_vertices() == argmax_face(a, verts)

    def test_sorted_and_dims(self):
        fs = faces(3)
        assert fs == sorted(fs, key=lambda f: (f.face_dim, f.blocks))
        assert fs[-1].blocks == ((1, 2, 3, 4),)
        assert all(f.face_dim + f.cone_dim == 3 for f in fs)
        for f in fs:
            assert len(f.face_vertices()) == np.prod([factorial(len(b)) for b in f.blocks])

    def test_limit(self):
        with pytest.raises(ValueError):
            faces(FACE_LIMIT + 1)
        with pytest.raises(ValueError):
            ml_degree_indexing_report(REPORT_LIMIT + 1)

    def test_vertex_partition(self):
        p = OrderedSetPartition(((2,), (3,), (1,)))
        assert p.is_vertex() and p.as_vertex() == (3, 1, 2)
        with pytest.raises(ValueError):
            OrderedSetPartition(((1, 2), (2, 3)))
        with pytest.raises(ValueError):
            OrderedSetPartition(((1,), ()))


class TestFan:
    def test_maximal_cones(self):
        for n in (1, 2, 3):
            assert len(weyl_chamber_fan(n).maximal_cones()) == factorial(n + 1)

    def test_complete(self, rng):
        fan = weyl_chamber_fan(2)
        for _ in range(10_000):
            a = list(rng.integers(-20, 21, size=2))
            a.append(-sum(a))
            cones = fan.maximal_cones_containing(a)
            assert cones
            assert all(fan.in_chamber(a, s) for s in cones)

    def test_sorted_point_has_unique_chamber(self):
        fan = weyl_chamber_fan(3)
        a = (-3, -1, 1, 3)
        assert fan.maximal_cones_containing(a) == [Permutation((1, 2, 3, 4))]
        assert fan.locate(a).cone_dim == 3

    def test_ties_share_faces(self):
        fan = weyl_chamber_fan(2)
        assert len(fan.maximal_cones_containing((1, 1, -2))) == 2
        assert len(fan.maximal_cones_containing((0, 0, 0))) == 6

    def test_cone_count(self):
        assert len(weyl_chamber_fan(3).cones()) == 75

    def test_off_hyperplane(self):
        with pytest.raises(ValueError):
            weyl_chamber_fan(2).locate((1, 0, 0))


class TestFixedPoints:
    @pytest.mark.parametrize("n, total", [(1, 3), (2, 12), (3, 66), (4, 450)])
    def test_totals(self, n, total):
        assert fixed_point_strata(n)[1] == total

    def test_n3_rows(self):
        rows, _ = fixed_point_strata(3)
        assert [(J.J, s) for J, s in rows] == [((), 24), ((1,), 12), ((2,), 12), ((3,), 12), ((1, 3), 6)]

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_coset_enumeration(self, n):
        for J, size in fixed_point_strata(n)[0]:
            assert coset_count(J) == size

    def test_rejects_adjacent(self):
        with pytest.raises(ValueError):
            RootSubset(3, (1, 2))


class TestBB:
    def test_n1(self):
        assert bb_cells(1).census == {0: 1, 1: 1}

    def test_n2(self):
        assert bb_cells(2).census == {0: 1, 1: 4, 2: 1}

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_census_is_eulerian(self, n):
        census = bb_cells(n).census
        assert census == {k: eulerian(n + 1, k) for k in range(n + 1)}

    @pytest.mark.parametrize("n", [2, 3])
    def test_weight_invariance(self, rng, n):
        ref = bb_cells(n).census
        for _ in range(10):
            assert bb_cells(n, random_generic_weight(rng, n)).census == ref

    def test_default_weight(self):
        assert default_weight(3) == (-3, -1, 1, 3)

    @pytest.mark.parametrize("w", [(1, 1, -2), (1, 2, 3), (0.5, -0.5, 0), (1, 2)])
    def test_rejects_weight(self, w):
        with pytest.raises(ValueError):
            bb_cells(2, w)


class TestResiduals:
    def test_counts(self):
        assert sum(len(v) for v in frobenius_residual_strata(1).values()) == 2
        s2 = frobenius_residual_strata(2)
        assert {k: len(v) for k, v in s2.items()} == {0: 6, 1: 6}

    def test_total_is_faces_minus_one(self):
        for n in (1, 2, 3):
            assert sum(len(v) for v in frobenius_residual_strata(n).values()) == len(faces(n)) - 1

    def test_cell_centres(self):
        for s in frobenius_residual_strata(2)[1]:
            assert len(s.cell_centers) == 2

    def test_report(self):
        r1 = ml_degree_indexing_report(1)
        assert r1["cardinality"] == 2
        r2 = ml_degree_indexing_report(2)
        assert r2["cardinality"] == 6
        assert all(e["weight"] is None for e in r2["index_set"])
        assert r2["fixed_point_total"] == 12
        placements = {tuple(row["J"]): row["placement"] for row in r2["fixed_point_strata"]}
        assert placements[()] == "diagonal chart"
        assert placements[(1,)].startswith("ambient")
