import math

import numpy as np
import pytest

import flatpath as fp
from flatpath.surface import separation_exceeds

TWO_PI = 2 * math.pi

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
SQUARE_GLUINGS = [((0, 0), (0, 2)), ((0, 1), (0, 3))]

L_POLY = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2), (0, 1)]
L_GLUINGS = [((0, 0), (0, 5)), ((0, 1), (0, 3)), ((0, 2), (0, 7)), ((0, 4), (0, 6))]


def test_square_torus_stratum():
    S = fp.build_surface([SQUARE], SQUARE_GLUINGS)
    assert len(S.cone_classes) == 1
    assert fp.cone_angle(S.cone_classes[0]) == pytest.approx(TWO_PI)
    assert S.cone_classes[0].alpha == 0
    assert S.stratum.kappa == 1
    assert S.total_area == 1.0


def test_l_surface_stratum_and_scaling():
    # union-find joins all eight corners: 90*6 + 180*2 + 270 = 1080 degrees
    S = fp.build_surface([L_POLY], L_GLUINGS)
    assert len(S.cone_classes) == 1
    assert fp.cone_angle(S.cone_classes[0]) == pytest.approx(6 * math.pi)
    assert S.cone_classes[0].alpha == 2
    assert S.stratum.kappa == 3
    # raw area 3 scaled to 1 by 1/sqrt(3)
    assert S.unit_scale == pytest.approx(1 / math.sqrt(3))
    assert sum(p.area for p in S.polygons) == pytest.approx(1.0)


def test_octagon_cone_angle():
    S = fp.regular_octagon()
    assert len(S.cone_classes) == 1
    assert fp.cone_angle(S.cone_classes[0]) == pytest.approx(6 * math.pi)
    assert S.stratum.alphas == (2,)


def test_builtin_gauss_bonnet_consistency():
    for S in (fp.square_torus(), fp.l_surface(), fp.regular_octagon(),
              fp.torus_from_basis((2, 0), (0.3, 0.5))):
        total = sum(c.total_angle for c in S.cone_classes)
        assert total == pytest.approx(TWO_PI * S.stratum.kappa)
    # even exponent sum when no marked points are present
    for S in (fp.l_surface(), fp.regular_octagon()):
        assert sum(S.stratum.alphas) % 2 == 0


def test_non_parallel_edges_rejected():
    # gluing perpendicular sides of the square
    with pytest.raises(fp.NonParallelEdges):
        fp.build_surface([SQUARE], [((0, 0), (0, 1)), ((0, 2), (0, 3))])


def test_self_gluing_and_unpaired_rejected():
    with pytest.raises(fp.UnpairedEdge):
        fp.build_surface([SQUARE], [((0, 0), (0, 0)), ((0, 1), (0, 3))])
    with pytest.raises(fp.UnpairedEdge):
        fp.build_surface([SQUARE], [((0, 0), (0, 2))])


def test_length_mismatch_rejected():
    rect = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]
    # horizontal sides have length 2ate, vertical 1; cross-glue them
    with pytest.raises((fp.LengthMismatch, fp.NonParallelEdges)):
        fp.build_surface([rect], [((0, 0), (0, 3)), ((0, 1), (0, 2))])


def test_same_direction_parallel_rejected():
    # two squares glued so outward normals coincide
    sq2 = [(2.0, 0.0), (3.0, 0.0), (3.0, 1.0), (2.0, 1.0)]
    with pytest.raises(fp.NonParallelEdges):
        fp.build_surface([SQUARE, sq2], [
            ((0, 0), (1, 0)), ((0, 1), (1, 1)), ((0, 2), (1, 2)), ((0, 3), (1, 3))])


def test_build_idempotent():
    S = fp.build_surface([L_POLY], L_GLUINGS)
    S2 = fp.build_surface([p.vertices for p in S.polygons], S.gluings)
    assert [c.members for c in S.cone_classes] == [c.members for c in S2.cone_classes]
    assert [c.alpha for c in S.cone_classes] == [c.alpha for c in S2.cone_classes]
    for p, q in zip(S.polygons, S2.polygons):
        assert np.allclose(p.vertices, q.vertices, atol=1e-15)


def test_apply_matrix_identity_and_composition():
    S = fp.square_torus()
    I = fp.Mat2.identity()
    S_id = fp.apply_matrix(I, S)
    for p, q in zip(S.polygons, S_id.polygons):
        assert np.array_equal(np.asarray(p.vertices), np.asarray(q.vertices))
    rng = np.random.default_rng(1)
    for _ in range(5):
        t1, t2 = rng.normal(size=2) * 0.4
        th1, th2 = rng.uniform(0, TWO_PI, size=2)
        g1 = fp.Mat2.scaling(t1) @ fp.Mat2.rotation(th1)
        g2 = fp.Mat2.rotation(th2) @ fp.Mat2.scaling(t2)
        A = fp.apply_matrix(g2, fp.apply_matrix(g1, S))
        B = fp.apply_matrix(g2 @ g1, S)
        for p, q in zip(A.polygons, B.polygons):
            assert np.allclose(p.vertices, q.vertices, atol=1e-12)


def test_apply_matrix_preserves_area_and_stratum():
    S = fp.l_surface()
    g = fp.Mat2.scaling(math.log(2)) @ fp.Mat2.rotation(0.3)
    T = fp.apply_matrix(g, S)
    assert sum(p.area for p in T.polygons) == pytest.approx(1.0, abs=1e-12)
    assert T.stratum == S.stratum
    assert T.cone_classes == S.cone_classes


def test_apply_matrix_scaling_example():
    # diag(2, 1/2) turns the unit square torus into a 2 x 1/2 rectangle torus
    S = fp.square_torus()
    T = fp.apply_matrix(fp.Mat2.scaling(math.log(2)), S)
    verts = np.asarray(T.polygons[0].vertices)
    assert verts[1] == pytest.approx([2.0, 0.0])
    assert verts[3] == pytest.approx([0.0, 0.5])
    R = fp.apply_matrix(fp.Mat2.rotation(math.pi / 2), S)
    assert R.stratum.kappa == S.stratum.kappa


def test_apply_matrix_rejects_degenerate():
    with pytest.raises(fp.DegenerateMatrix):
        fp.apply_matrix(fp.Mat2(2.0, 0.0, 0.0, 1.0), fp.square_torus())


def test_renormalization_matrix_examples():
    I = fp.renormalization_matrix(0.5, -math.pi / 2)
    assert (I.a, I.b, I.c, I.d) == pytest.approx((1, 0, 0, 1), abs=1e-15)
    D = fp.renormalization_matrix(0.25, -math.pi / 2)
    assert (D.a, D.b, D.c, D.d) == pytest.approx((2, 0, 0, 0.5), abs=1e-15)
    R = fp.renormalization_matrix(0.5, 0.0)
    expect = fp.Mat2.rotation(-math.pi / 2)
    assert (R.a, R.b, R.c, R.d) == pytest.approx(
        (expect.a, expect.b, expect.c, expect.d), abs=1e-15)
    assert fp.renormalization_matrix(0.05, 1.3).det() == pytest.approx(1.0, abs=1e-12)


def test_separation_square_torus_and_l():
    assert fp.shortest_singularity_separation(fp.square_torus(), 2.0) == pytest.approx(1.0)
    # shortest saddle connection of the integer L is 1, scaled by 1/sqrt(3)
    assert fp.shortest_singularity_separation(fp.l_surface(), 2.0) == pytest.approx(
        1 / math.sqrt(3))


def test_separation_not_found_within_bound():
    with pytest.raises(fp.NotFoundWithinBound):
        fp.shortest_singularity_separation(fp.square_torus(), 0.1)


def test_separation_cache_gate():
    S = fp.square_torus()
    assert separation_exceeds(S, 0.2)
    assert separation_exceeds(S, 0.99)
    assert not separation_exceeds(S, 1.0)
    assert not separation_exceeds(S, 1.5)


def test_torus_from_basis_orientation():
    with pytest.raises(fp.SurfaceError):
        fp.torus_from_basis((1, 0), (0.5, -1))
    T = fp.torus_from_basis((1, 0), (0.618, 1))
    assert T.total_area == 1.0


def test_two_chart_torus_stratum_and_separation():
    from conftest import two_chart_square_torus
    S = two_chart_square_torus()
    assert S.stratum.alphas == (0, 0)
    assert S.stratum.kappa == 2
    assert fp.shortest_singularity_separation(S, 2.0) == pytest.approx(0.5)
