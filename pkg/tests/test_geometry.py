import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tessellation_codes.geometry import (ETA, GeometryError, Isometry, SurfaceKind, SurfacePoint, apply, boost_to,
                                         build_unit_triangle, compose, distance, inverse, isometry_defect,
                                         polar_embedding, project_poincare, rotated_point_distance, rotation_about,
                                         triangle_sides)

KINDS = list(SurfaceKind)
angles = st.floats(-math.pi, math.pi, allow_nan=False)


def point_strategy(kind, dmax=3.0):
    top = min(dmax, math.pi - 1e-3) if kind is SurfaceKind.SPHERE else dmax
    return st.builds(lambda d, p: SurfacePoint.polar(kind, d, p), st.floats(0, top), angles)


def random_point(kind, rng, dmax=3.0):
    top = min(dmax, math.pi - 1e-3) if kind is SurfaceKind.SPHERE else dmax
    return SurfacePoint.polar(kind, rng.uniform(0, top), rng.uniform(-math.pi, math.pi))


def random_isometry(kind, rng):
    return compose(rotation_about(random_point(kind, rng, 2.0), rng.uniform(-math.pi, math.pi)),
                   rotation_about(random_point(kind, rng, 2.0), rng.uniform(-math.pi, math.pi)))


def test_classify():
    assert SurfaceKind.classify(2, 2, 4) is SurfaceKind.SPHERE
    assert SurfaceKind.classify(2, 4, 4) is SurfaceKind.EUCLIDEAN
    assert SurfaceKind.classify(3, 3, 3) is SurfaceKind.EUCLIDEAN
    assert SurfaceKind.classify(4, 3, 5) is SurfaceKind.HYPERBOLIC


def test_distance_formulas_against_closed_forms():
    s = SurfacePoint(SurfaceKind.SPHERE, [1, 0, 0])
    t = SurfacePoint(SurfaceKind.SPHERE, [0, 1, 0])
    assert distance(s, t) == pytest.approx(math.pi / 2, abs=1e-15)
    h = SurfacePoint.polar(SurfaceKind.HYPERBOLIC, 1.3, 0.4)
    assert distance(h, SurfacePoint.origin(SurfaceKind.HYPERBOLIC)) == pytest.approx(1.3, abs=1e-13)
    e = SurfacePoint(SurfaceKind.EUCLIDEAN, [3, 4, 1])
    assert distance(e, SurfacePoint.origin(SurfaceKind.EUCLIDEAN)) == pytest.approx(5.0)


@pytest.mark.parametrize("kind", KINDS)
def test_points_lie_on_surface(kind):
    rng = np.random.default_rng(1)
    for _ in range(50):
        X = random_point(kind, rng).X
        if kind is SurfaceKind.SPHERE:
            assert abs(X @ X - 1) < 1e-12
        elif kind is SurfaceKind.HYPERBOLIC:
            assert abs(X @ ETA @ X + 1) < 1e-10 and X[0] > 0
        else:
            assert X[2] == 1.0


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_isometry_preserves_distance(kind, data):
    a = data.draw(point_strategy(kind))
    b = data.draw(point_strategy(kind))
    c = data.draw(point_strategy(kind, 2.0))
    g = rotation_about(c, data.draw(angles))
    assert isometry_defect(kind, g.M) < 1e-9
    assert abs(distance(apply(g, a), apply(g, b)) - distance(a, b)) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_rotation_composition(kind, data):
    c = data.draw(point_strategy(kind, 2.0))
    a1, a2 = data.draw(angles), data.draw(angles)
    lhs = compose(rotation_about(c, a1), rotation_about(c, a2)).M
    rhs = rotation_about(c, a1 + a2).M
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, np.max(np.abs(rhs)))
    assert np.allclose(apply(rotation_about(c, a1), c).X, c.X, atol=1e-9)


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_rotated_point_distance(kind, data):
    c = data.draw(point_strategy(kind, 2.0))
    p = data.draw(point_strategy(kind, 2.0))
    a = data.draw(angles)
    direct = distance(p, apply(rotation_about(c, a), p))
    assert abs(direct - rotated_point_distance(distance(p, c), a, kind)) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_inverse_and_identity(kind):
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = random_isometry(kind, rng)
        assert np.allclose(compose(g, inverse(g)).M, np.eye(3), atol=1e-9)
    assert np.allclose(rotation_about(random_point(kind, rng), 0.0).M, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_boost_moves_origin(kind):
    target = polar_embedding(kind, 1.1, 0.7)
    M = boost_to(kind, target)
    assert np.allclose(M @ SurfacePoint.origin(kind).X, target, atol=1e-12)


def test_counter_clockwise_convention():
    e = SurfaceKind.EUCLIDEAN
    g = rotation_about(SurfacePoint.origin(e), math.pi / 2)
    assert np.allclose(apply(g, SurfacePoint(e, [1, 0, 1])).X, [0, 1, 1])
    h = SurfaceKind.HYPERBOLIC
    g = rotation_about(SurfacePoint.origin(h), math.pi / 2)
    u, v = project_poincare(apply(g, SurfacePoint.polar(h, 1.0, 0.0)))
    assert u == pytest.approx(0.0, abs=1e-12) and v > 0


@pytest.mark.parametrize("pqr", [(2, 2, 4), (2, 3, 5), (2, 4, 4), (3, 3, 3), (5, 5, 5), (6, 4, 8), (4, 3, 5)])
def test_unit_triangle_angles(pqr):
    tri = build_unit_triangle(*pqr)
    V = tri.vertices
    for name, order in tri.orders.items():
        others = [n for n in V if n != name]
        # rotate one neighbour about the vertex by pi/order twice: must land on
        # the reflection, so the angle between the sides equals pi/order
        d1 = distance(V[name], V[others[0]])
        d2 = distance(V[name], V[others[1]])
        d12 = distance(V[others[0]], V[others[1]])
        ang = _angle(tri.kind, d1, d2, d12)
        assert ang == pytest.approx(math.pi / order, abs=1e-9)


def _angle(kind, b, c, a):
    """Angle opposite side a from the law of cosines on each surface."""
    if kind is SurfaceKind.EUCLIDEAN:
        return math.acos((b * b + c * c - a * a) / (2 * b * c))
    if kind is SurfaceKind.SPHERE:
        return math.acos((math.cos(a) - math.cos(b) * math.cos(c)) / (math.sin(b) * math.sin(c)))
    return math.acos((math.cosh(b) * math.cosh(c) - math.cosh(a)) / (math.sinh(b) * math.sinh(c)))


def test_hyperbolic_side_law_648():
    ca, cb = triangle_sides(6, 4, 8, SurfaceKind.HYPERBOLIC)
    # side between the order-8 and order-6 vertices, opposite the order-4 angle
    expect = math.acosh((math.cos(math.pi / 4) + math.cos(math.pi / 8) * math.cos(math.pi / 6))
                        / (math.sin(math.pi / 8) * math.sin(math.pi / 6)))
    assert ca == pytest.approx(expect, rel=1e-12)


def test_bad_orders_rejected():
    with pytest.raises(GeometryError):
        build_unit_triangle(1, 2, 3)


@pytest.mark.parametrize("kind", KINDS)
def test_randomised_suite_1000(kind):
    """1000 random trials each: distance preservation, composition and the
    rotated-point distance."""
    rng = np.random.default_rng(12345)
    worst = [0.0, 0.0, 0.0]
    for _ in range(1000):
        a, b = random_point(kind, rng), random_point(kind, rng)
        g = random_isometry(kind, rng)
        worst[0] = max(worst[0], abs(distance(apply(g, a), apply(g, b)) - distance(a, b)))
        c = random_point(kind, rng, 2.0)
        t1, t2 = rng.uniform(-math.pi, math.pi, size=2)
        lhs = compose(rotation_about(c, t1), rotation_about(c, t2)).M
        rhs = rotation_about(c, t1 + t2).M
        worst[1] = max(worst[1], float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs)))))
        direct = distance(a, apply(rotation_about(c, t1), a))
        worst[2] = max(worst[2], abs(direct - rotated_point_distance(distance(a, c), t1, kind)))
    assert max(worst) < 1e-9, worst


def test_isometry_type_checks():
    with pytest.raises(ValueError):
        compose(Isometry(SurfaceKind.SPHERE, np.eye(3)), Isometry(SurfaceKind.EUCLIDEAN, np.eye(3)))
