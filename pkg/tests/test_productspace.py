from fractions import Fraction as F

import pytest

from brunn.freegroup import parse_word as W
from brunn.productspace import (
    GroupElement,
    apply,
    basepoint,
    distance,
    distance_sq,
    dumps_point,
    geodesic_eval,
    identity,
    loads_point,
    point,
)
from brunn.treespace import TreePoint


def test_distance_examples():
    assert distance_sq(point("", (0, 0)), point("", (3, 4))) == 25
    assert distance(point("", (0, 0)), point("", (3, 4))) == 5
    assert distance_sq(point("", (0, 0)), point("ab", (0, 0))) == 4
    assert distance_sq(point("", (0, 0)), point("ab", (3, 0))) == 13
    with pytest.raises(ValueError):
        distance_sq(point("", (0,)), point("", (0, 0)))


def test_geodesic_eval_examples():
    p, q = point("", (0, 0)), point("ab", (3, 0))
    assert geodesic_eval(p, q, 0) == p
    assert geodesic_eval(p, q, F(1, 2)) == point("a", (F(3, 2), 0))
    r = geodesic_eval(point("", (0,)), point("a", (1,)), F(1, 4))
    assert r.tree == TreePoint((), 1, F(1, 4)) and r.euclid == (F(1, 4),)


def test_apply_examples():
    g = GroupElement(W("a"), (1, 0))
    assert apply(g, basepoint(2)) == point("a", (1, 0))
    p = point("ab", (F(1, 2), 3))
    assert apply(identity(2), p) == p
    a = GroupElement(W("a"), (0, 0))
    assert apply(a.inverse(), apply(a, p)) == p


def test_apply_preserves_edge_offsets():
    p = geodesic_eval(point("", (0,)), point("b", (0,)), F(1, 3))
    q = apply(GroupElement(W("B"), (2,)), p)
    assert distance_sq(q, apply(GroupElement(W("B"), (2,)), point("", (0,)))) == F(1, 9)


def test_group_element_arithmetic():
    g = GroupElement(W("ab"), (1,))
    assert (g * g.inverse()).is_identity
    assert g**3 == g * g * g
    assert (g**-1) == g.inverse()


def test_point_json_roundtrip():
    p = geodesic_eval(point("aB", (1, F(2, 3))), point("b", (0, 0)), F(2, 7))
    assert loads_point(dumps_point(p)) == p
