import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlexit.domains import (Ball, Box, ConeTest, DimensionError, HalfSpace, Intersection, Interval,
                            LowerRay, Region, Strip2D, BallComplement, classify, domain_from_config,
                            exterior_ball, signed_distance)

from oracles import ball_avoids_q, catalog, cone_vertex_search


def test_classify_examples():
    assert classify(LowerRay(0.0), -0.5) == Region.IN_Q
    assert classify(LowerRay(0.0), 0.0) == Region.ON_BOUNDARY
    assert classify(Strip2D(), [7.0, 1.5]) == Region.IN_CLOSURE_COMPLEMENT
    with pytest.raises(DimensionError):
        classify(Strip2D(), [1.0])


def test_exterior_ball_examples():
    v = exterior_ball(LowerRay(0.0), 0.0)
    assert v.satisfied_everywhere and v.witness.center == (1.0,) and v.witness.radius == 1.0
    v = exterior_ball(Ball([0.0, 0.0], 1.0), [1.0, 0.0])
    assert v.witness.center == (2.0, 0.0) and v.witness.radius == 1.0
    v = exterior_ball(ConeTest(), [0.0, 0.0])
    assert v.satisfied_everywhere is False and v.satisfied_at_point is False
    with pytest.raises(ValueError):
        exterior_ball(LowerRay(0.0), -1.0)


def test_signed_distance_examples():
    assert signed_distance(Ball([0.0, 0.0], 1.0), [0.0, 0.0]) == -1.0
    assert signed_distance(Ball([0.0, 0.0, 0.0], 1.0), [2.0, 0.0, 0.0]) == 1.0
    assert signed_distance(Box([0, 0], [1, 1]), [0.5, 0.5]) == -0.5


@pytest.mark.parametrize("name", sorted(catalog()) + ["cone_test"])
def test_regions_partition_and_sign_agreement(name, rng):
    q = ConeTest() if name == "cone_test" else catalog()[name]
    x = rng.uniform(-3, 3, (100_000, q.dim))
    reg = q.regions(x)
    sd = q.signed_distance(x)
    assert set(np.unique(reg)) <= {0, 1, 2}
    assert np.all((sd < 0) == (reg == Region.IN_Q))
    assert np.all((sd > 0) == (reg == Region.IN_CLOSURE_COMPLEMENT))


@pytest.mark.parametrize("name", sorted(catalog()))
def test_witness_balls_avoid_q(name, rng):
    q = catalog()[name]
    assert q.exterior_ball().satisfied_everywhere is True
    for x in q.sample_boundary(rng, 50):
        v = q.exterior_ball(x, tol=1e-9)
        w = v.witness
        assert np.linalg.norm(np.asarray(w.center) - x) == pytest.approx(w.radius, rel=1e-9, abs=1e-9)
        assert ball_avoids_q(q, w.center, w.radius, rng, 200)


def test_cone_witness_away_from_vertex(rng):
    q = ConeTest()
    for x in q.sample_boundary(rng, 50):
        v = q.exterior_ball(x)
        assert v.satisfied_at_point
        assert ball_avoids_q(q, v.witness.center, v.witness.radius, rng, 200)


def test_cone_vertex_has_no_exterior_ball():
    assert cone_vertex_search(n_dirs=90, radii=np.geomspace(1e-3, 1, 6), n_pts=200) == []


def test_intersection_rules():
    q = Intersection((Ball([0.0, 0.0], 1.0), HalfSpace([0.0, 1.0], 0.5)))
    assert q.exterior_ball().satisfied_everywhere is True
    nonconvex = Intersection((BallComplement([0.0, 0.0], 1.0), HalfSpace([0.0, 1.0], 0.0)))
    assert nonconvex.exterior_ball().satisfied_everywhere is None
    with pytest.raises(DimensionError):
        Intersection((LowerRay(0.0), Strip2D()))
    assert q.signed_distance([0.0, 0.0]) == -0.5


def test_catalog_validation():
    with pytest.raises(ValueError):
        Ball([0.0], 0.0)
    with pytest.raises(ValueError):
        Box([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        Interval(a=1.0, b=0.0)


@pytest.mark.parametrize("name", sorted(catalog()) + ["cone_test"])
def test_config_roundtrip(name):
    q = ConeTest() if name == "cone_test" else catalog()[name]
    back = domain_from_config(q.to_config())
    x = np.random.default_rng(1).uniform(-2, 2, (1000, q.dim))
    assert np.array_equal(back.regions(x), q.regions(x))


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_nested_domains_are_ordered(x, y):
    inner, outer = Ball([0.0, 0.0], 1.0), Ball([0.0, 0.0], 2.0)
    p = np.array([x, y])
    if inner.classify(p) != Region.IN_Q:
        return
    assert outer.classify(p) == Region.IN_Q
