import io
import math
from fractions import Fraction as F

import pytest

from brunn.convexify import (
    CapExceeded,
    cloud,
    conv1_sample,
    conv_iter,
    directed_hausdorff,
    dump_cloud,
    growth_check,
    hausdorff,
    load_cloud,
    max_sample_distance,
    n_samples,
    nu_estimate,
    nu_witness,
    snap,
)
from brunn.euclid_hull import euclid_cloud, exact_hull, hull_sample
from brunn.productspace import point
from brunn.subgroups import orbit_ball, subgroup
from brunn.treespace import TreePoint, tree_hull
from oracles import brute_hausdorff, brute_nu, dist_to_set, geo_eval, to_oracle

TRIANGLE = [(0, 0), (1, 0), (0, 1)]


def test_n_samples_is_exact_ceiling():
    assert n_samples(F(4), F(1, 2)) == 4
    assert n_samples(F(2), F(1, 10)) == 15  # sqrt(2)/0.1 = 14.14
    assert n_samples(F(1, 100), F(1)) == 1


def test_conv1_singleton_and_edge():
    p = point("", ())
    assert conv1_sample(cloud([p]), F(1, 2)).points == [p]
    c = conv1_sample(cloud([point("", ()), point("a", ())]), F(1, 2))
    assert [q.tree for q in c.points] == [TreePoint(()), TreePoint((), 1, F(1, 2)), TreePoint((1,))]
    assert c.generation == 1


def test_conv1_of_triangle_is_its_edges():
    c = conv1_sample(euclid_cloud(TRIANGLE), F(1, 10))
    for q in c.points:
        x, y = q.euclid
        assert x == 0 or y == 0 or x + y == 1


def test_conv_iter_basics():
    S = euclid_cloud(TRIANGLE)
    assert conv_iter(S, 0, F(1, 20)) is S
    seg = euclid_cloud([(0, 0), (2, 1)])
    one = conv_iter(seg, 1, F(1, 10))
    assert conv_iter(seg, 5, F(1, 10)).points == one.points
    with pytest.raises(ValueError):
        conv_iter(S, -1, F(1, 10))


def test_conv_iter_fills_triangle():
    eps = F(1, 20)
    c = conv_iter(euclid_cloud(TRIANGLE), 2, eps, cap=10**6)
    target = euclid_cloud(hull_sample(exact_hull(TRIANGLE), eps))
    assert hausdorff(c, target) <= 3 * eps


def test_conv_iter_is_monotone():
    S = euclid_cloud([(0, 0), (3, 1), (1, 2), (2, -1)])
    a = conv_iter(S, 1, F(1, 4))
    b = conv_iter(S, 2, F(1, 4))
    assert a.point_set() <= b.point_set()


def test_cap_exceeded():
    S = euclid_cloud([(0, 0), (5, 0), (0, 5), (5, 5)])
    with pytest.raises(CapExceeded):
        conv_iter(S, 2, F(1, 10), cap=200)


def test_snapped_step_agrees_with_exact():
    eps = F(1, 4)
    S = euclid_cloud([(0, 0), (1, 0), (0, 1), (F(3, 4), F(3, 4))])
    exact = conv_iter(S, 2, eps)
    snapped = conv_iter(S, 2, eps, exact_limit=1)
    assert snapped.snapped and not exact.snapped
    assert snapped.error_budget > 0
    assert hausdorff(exact, snapped) <= snapped.error_budget + 2 * float(eps)


def test_hausdorff_examples():
    A = euclid_cloud(TRIANGLE)
    assert hausdorff(A, A) == 0
    p, q = point("ab", (1,)), point("B", (0,))
    assert hausdorff(cloud([p]), cloud([q])) == pytest.approx(math.sqrt(10))
    with pytest.raises(ValueError):
        hausdorff(cloud([]), A)


def test_hausdorff_matches_brute_force():
    eps = F(1, 20)
    edges = conv1_sample(euclid_cloud(TRIANGLE), eps)
    full = euclid_cloud(hull_sample(exact_hull(TRIANGLE), eps))
    got = hausdorff(edges, full)
    want = brute_hausdorff([to_oracle(p) for p in edges.points], [to_oracle(p) for p in full.points])
    assert got == pytest.approx(want, abs=1e-12)
    # roughly the inradius of the triangle, 1/(2 + sqrt 2)
    assert 0.25 < got < 0.3


def test_tree_hausdorff_matches_brute_force():
    A = conv1_sample(cloud([point("ab", (0,)), point("bA", (1,)), point("", (F(1, 2),))]), F(1, 3))
    B = orbit_ball(subgroup(2, 1, [("a", [1]), ("b", [0])]), None, 2).cloud
    want = brute_hausdorff([to_oracle(p) for p in A.points], [to_oracle(p) for p in B.points])
    assert hausdorff(A, B) == pytest.approx(want, abs=1e-12)
    d, i = directed_hausdorff(A, B)
    assert d == pytest.approx(dist_to_set(to_oracle(A.points[i]), [to_oracle(p) for p in B.points]))


def test_nu_of_sampled_segment_is_small():
    eps = F(1, 4)
    Y = euclid_cloud([(F(k, 4), F(k, 8)) for k in range(11)])
    assert nu_estimate(Y, eps) <= eps
    # a sample coarser than eps is not eps-quasiconvex
    assert nu_estimate(euclid_cloud([(0,), (1,), (F(5, 2),)]), eps) == 0.75


@pytest.mark.parametrize("L", [1, 2])
def test_nu_matches_brute_force(L):
    eps = F(1, 4)
    for gens in ([("a", [0]), ("b", [0])], [("a", [0]), ("b", [1])]):
        Y = orbit_ball(subgroup(2, 1, gens), None, L).cloud
        assert nu_estimate(Y, eps) == pytest.approx(brute_nu([to_oracle(p) for p in Y.points], eps), abs=1e-12)


def test_nu_of_free_orbit_is_half():
    Y = orbit_ball(subgroup(2, 1, [("a", [0]), ("b", [0])]), None, 3).cloud
    assert abs(nu_estimate(Y, F(1, 4)) - 0.5) <= 0.25


def test_nu_witness_recomputes():
    Y = orbit_ball(subgroup(2, 1, [("a", [0]), ("b", [1])]), None, 3).cloud
    w = nu_witness(Y, F(1, 8))
    P, Q = (to_oracle(p) for p in w.pair)
    assert dist_to_set(geo_eval(P, Q, w.fraction), [to_oracle(p) for p in Y.points]) == pytest.approx(w.value)


def test_max_sample_distance_against_snapped_sources():
    eps = F(1, 8)
    S = euclid_cloud([(0, 0), (3, 0), (0, 3)])
    c = snap(S, eps)
    w, err = max_sample_distance(c, S, eps)
    assert err == 0
    # the farthest edge sample from the corners is an edge midpoint
    assert w.value == pytest.approx(math.sqrt(18) / 2, abs=0.1)


def test_growth_check_examples():
    eps = F(1, 20)
    seg = euclid_cloud([(F(k, 20), F(k, 20)) for k in range(21)])
    assert growth_check(seg, 1, 0.0, eps).ok
    tri = euclid_cloud(TRIANGLE)
    nu = nu_estimate(tri, eps)
    rep = growth_check(tri, 2, nu, eps, cap=10**6)
    assert rep.ok and rep.excess <= 0
    convex = euclid_cloud(hull_sample(exact_hull(TRIANGLE), F(1, 5)))
    assert growth_check(convex, 3, float(F(1, 5)), F(1, 5)).ok


def test_tree_conv_matches_tree_hull():
    eps = F(1, 4)
    pts = [point(w, ()) for w in ["ab", "Ab", "bb", ""]]
    c1 = conv_iter(cloud(pts), 1, eps)
    c2 = conv_iter(cloud(pts), 2, eps)
    sample = cloud([point("", ()).__class__(t, ()) for t in tree_hull(p.tree for p in pts).sample(eps)])
    assert hausdorff(c1, sample) <= 2 * eps
    assert hausdorff(c2, c1) <= 2 * eps


def test_cloud_roundtrip():
    eps = F(1, 8)
    for c in (conv1_sample(cloud([point("ab", (1, F(1, 3))), point("B", (0, 0))]), eps), snap(euclid_cloud(TRIANGLE), eps)):
        buf = io.StringIO()
        dump_cloud(c, buf)
        buf.seek(0)
        back = load_cloud(buf)
        assert back.points == c.points and back.n == c.n
