import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from brunn.coneplane import (
    APEX,
    ConePoint,
    brunn2_verify,
    broom_check,
    chart,
    cone_cloud,
    cone_conv_step,
    cone_config,
    cone_distance,
    cone_geodesic_eval,
    cone_point,
    parse_theta,
)
from brunn.euclid_hull import exact_hull, hull_sample

PI = math.pi
C52 = cone_config("5/2*pi")


def test_parse_theta():
    assert parse_theta("5/2·π") == F(5, 2)
    assert parse_theta("5/2*pi") == F(5, 2)
    assert parse_theta("3π") == 3
    assert parse_theta(" 2 pi ") == 2
    with pytest.raises(ValueError):
        parse_theta("pi/2")
    with pytest.raises(ValueError):
        cone_config("3/2*pi")


def test_points_normalize():
    assert cone_point(1, 3 * PI, C52).phi == pytest.approx(PI / 2)
    assert ConePoint(0, 1.0) == APEX
    with pytest.raises(ValueError):
        ConePoint(-1, 0)
    assert ConePoint.from_json(ConePoint(2, 1.5).to_json()) == ConePoint(2, 1.5)


def test_distance_examples():
    assert cone_distance(ConePoint(1, 0), ConePoint(1, PI / 2), C52) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert cone_distance(ConePoint(1, 0), ConePoint(1, 5 * PI / 4), C52) == 2
    assert cone_distance(APEX, ConePoint(3, 0.7), C52) == 3


def test_geodesic_eval_examples():
    p, q = ConePoint(1, 0), ConePoint(1, 5 * PI / 4)
    assert cone_geodesic_eval(p, q, 0, C52) == p
    assert cone_geodesic_eval(p, q, 1, C52) == q
    assert cone_geodesic_eval(p, q, 0.5, C52) == APEX
    m = cone_geodesic_eval(p, ConePoint(1, PI / 2), 0.5, C52)
    assert m.r == pytest.approx(math.sqrt(2) / 2) and m.phi == pytest.approx(PI / 4)
    with pytest.raises(ValueError):
        cone_geodesic_eval(p, q, 1.5, C52)


def test_geodesic_crosses_angle_zero():
    p, q = ConePoint(1, 0.2), ConePoint(1, C52.theta - 0.2)
    m = cone_geodesic_eval(p, q, 0.5, C52)
    assert m.phi == pytest.approx(0.0, abs=1e-12) or m.phi == pytest.approx(C52.theta)
    assert m.r == pytest.approx(math.cos(0.2))


def test_broom_examples():
    rep = broom_check(ConePoint(1, 9 * PI / 8), ConePoint(1, 11 * PI / 8), ConePoint(1, 0), 9, C52)
    assert rep.ok and rep.max_error < 1e-9
    a = ConePoint(2, 5 * PI / 4)
    assert broom_check(a, a, ConePoint(1, 0), 9, C52).samples == 1
    with pytest.raises(ValueError):
        broom_check(ConePoint(1, PI / 2), ConePoint(1, 5 * PI / 4), ConePoint(1, 0), 9, C52)


def test_flat_cone_is_the_plane():
    cfg = cone_config("2*pi")
    rng = random.Random(1)
    for _ in range(200):
        p = ConePoint(rng.uniform(0, 5), rng.uniform(0, 2 * PI))
        q = ConePoint(rng.uniform(0, 5), rng.uniform(0, 2 * PI))
        assert abs(cone_distance(p, q, cfg) - math.dist(chart(p), chart(q))) < 1e-12


def test_brunn2_two_points_is_stable():
    rep = brunn2_verify([ConePoint(1, 0), ConePoint(2, 3)], 0.05, C52)
    assert rep.h32 == 0 and rep.h21 == 0


def test_brunn2_through_apex():
    pts = [ConePoint(1, 0), ConePoint(1, 5 * PI / 6), ConePoint(1, 5 * PI / 3)]
    rep = brunn2_verify(pts, 0.05, C52)
    assert rep.ok and rep.h32 <= 0.15


def test_brunn2_in_one_sector_fills_a_triangle():
    # a sector narrower than pi is isometric to a planar wedge
    pts = [ConePoint(1, 0.1), ConePoint(2, 0.4), ConePoint(1.5, 1.2)]
    eps = 0.05
    c2 = cone_conv_step(cone_conv_step(cone_cloud(pts), eps, C52), eps, C52)
    xy = np.array([chart(p) for p in c2.points()])
    corners = [tuple(F(x).limit_denominator(1000) for x in chart(p)) for p in pts]
    sample = np.array([[float(x) for x in v] for v in hull_sample(exact_hull(corners), F(1, 40))])
    d = np.sqrt(((xy[:, None, :] - sample[None, :, :]) ** 2).sum(-1))
    assert max(d.min(0).max(), d.min(1).max()) <= 3 * eps
