"""Geometry and polynomial primitives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifscert.geometry import (Ball, Cone, DegenerateBasisError, GridOfBalls,
                              GridIndexError, PointC2, QuadrupleBasis,
                              QuasiLine, ZERO, E1, ball_part, center_at,
                              cone_contains, is_quasi_diameter, mat_apply,
                              ray_distance, region_contains)
from ifscert.polynomials import CurvePoly, Poly2C

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False,
                   allow_infinity=False)


def test_point_roundtrips():
    p = PointC2(1.5, -2.0, 0.25, 3.0)
    assert PointC2.from_array(p.as_array()) == p
    z1, z2 = p.as_complex()
    assert PointC2.from_complex(z1, z2) == p
    assert p.norm() == pytest.approx(np.linalg.norm(p.as_array()))
    with pytest.raises(ValueError):
        PointC2(math.nan, 0, 0, 0)


@given(finite, finite, finite, finite, finite)
@settings(max_examples=50, deadline=None)
def test_point_algebra(a, b, c, d, s):
    p = PointC2(a, b, c, d)
    q = PointC2(d, c, b, a)
    assert (p + q - q).as_array() == pytest.approx(p.as_array(), abs=1e-9)
    assert p.scale(s).as_array() == pytest.approx(s * p.as_array())
    # complex scalar multiplication by i rotates both complex coordinates
    r = p.cmul(1j)
    assert r.as_complex()[0] == pytest.approx(1j * complex(a, b))
    assert r.as_complex()[1] == pytest.approx(1j * complex(c, d))


def test_basis_solve_combine_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        vecs = [PointC2.from_array(rng.standard_normal(4)) for _ in range(4)]
        try:
            basis = QuadrupleBasis(*vecs)
        except DegenerateBasisError:
            continue
        coeffs = rng.standard_normal(4)
        back = basis.solve(basis.combine(coeffs))
        assert back == pytest.approx(coeffs, abs=1e-8)


def test_degenerate_basis_rejected():
    with pytest.raises(DegenerateBasisError):
        QuadrupleBasis(E1, E1, PointC2(0, 0, 1, 0), PointC2(0, 0, 0, 1))


def test_ray_invariant_under_positive_scaling():
    basis = QuadrupleBasis.standard(1.0)
    scaled = QuadrupleBasis.standard(7.5)
    assert ray_distance(basis.ray(), scaled.ray()) < 1e-12
    # a genuinely different quadruple has a distinct ray
    other = QuadrupleBasis(E1.scale(2.0), PointC2(0, 1, 0, 0),
                           PointC2(0, 0, 1, 0), PointC2(0, 0, 0, 1))
    assert ray_distance(basis.ray(), other.ray()) > 1e-3


def test_basis_transform_matches_mat_apply():
    M = np.array([[1 + 2j, 0.5j], [0, 2 - 1j]])
    basis = QuadrupleBasis.standard(1.0)
    tr = basis.transformed(M)
    for u, v in zip(basis.vectors(), tr.vectors()):
        assert (mat_apply(M, u) - v).norm() < 1e-12


def test_grid_basics():
    basis = QuadrupleBasis.standard(0.5)
    g = GridOfBalls(u=basis, o=ZERO, N=2, r=0.8)
    assert g.ball_radius == pytest.approx(0.8 * 0.5)
    assert g.size == pytest.approx(2 * 2 * 0.5)
    assert g.ball_count == 5 ** 4
    c = center_at(g, (1, -2, 0, 2))
    assert c.as_array() == pytest.approx([0.5, -1.0, 0.0, 1.0])
    with pytest.raises(GridIndexError):
        center_at(g, (3, 0, 0, 0))
    with pytest.raises(ValueError):
        GridOfBalls(u=basis, o=ZERO, N=0, r=0.8)
    with pytest.raises(ValueError):
        GridOfBalls(u=basis, o=ZERO, N=2, r=1.2)


def test_regions_are_coefficient_boxes():
    basis = QuadrupleBasis.standard(1.0)
    g = GridOfBalls(u=basis, o=ZERO, N=4, r=0.5)
    assert region_contains(g, basis.combine([2, 2, -2, 2]), "middle")
    assert not region_contains(g, basis.combine([2.1, 0, 0, 0]), "middle")
    assert region_contains(g, basis.combine([4, -4, 4, 4]), "hull")
    assert not region_contains(g, basis.combine([4.2, 0, 0, 0]), "hull")
    with pytest.raises(ValueError):
        region_contains(g, ZERO, "core")


def test_ball_parts_and_membership():
    b = Ball(PointC2(1, 0, 0, 0), 2.0)
    assert ball_part(b, 0.5).radius == 1.0
    assert ball_part(b, 0.75).center == b.center
    assert b.contains(PointC2(2.5, 0, 0, 0))
    assert not b.contains(PointC2(3.5, 0, 0, 0))
    with pytest.raises(ValueError):
        Ball(ZERO, 0.0)
    with pytest.raises(ValueError):
        ball_part(b, 0.0)


def test_cone_membership_half_angle():
    c = Cone(axis=E1, opening=math.pi / 6)
    inside = PointC2(math.cos(0.4), math.sin(0.4), 0, 0)
    outside = PointC2(math.cos(0.6), math.sin(0.6), 0, 0)
    assert cone_contains(c, E1.scale(3.0))
    assert cone_contains(c, inside)
    assert not cone_contains(c, outside)
    with pytest.raises(ValueError):
        cone_contains(c, ZERO)


def test_quasiline_straight_distance_is_exact_projection():
    line = QuasiLine(base=ZERO, w=E1, disk_radius=10.0,
                     graph=CurvePoly(()), slope_bound=0.0)
    target = PointC2(3.0, 4.0, 1.0, 0.0)
    dist, t = line.distance_to(target)
    # the Hermitian projection onto the complex line spanned by e1 keeps
    # the full first complex coordinate
    assert t == pytest.approx(complex(3.0, 4.0))
    assert dist == pytest.approx(math.hypot(1.0, 0.0))


def test_quasiline_curved_distance_matches_dense_sampling():
    g = CurvePoly(((0j, 0j), (0j, 0j), (0.05 + 0j, 0.02j)))
    line = QuasiLine(base=ZERO, w=E1, disk_radius=2.0, graph=g,
                     slope_bound=g.derivative_sup_bound(2.0))
    target = PointC2(1.0, 0.3, 0.2, -0.1)
    dist, _ = line.distance_to(target)
    ts = np.linspace(-2, 2, 400)
    dense = min((line.point(complex(a, b)) - target).norm()
                for a in ts for b in np.linspace(-0.5, 0.5, 9)
                if abs(complex(a, b)) <= 2.0)
    assert dist <= dense + 1e-6


def test_quasiline_validation():
    with pytest.raises(ValueError):
        QuasiLine(base=ZERO, w=E1.scale(2.0), disk_radius=1.0,
                  graph=CurvePoly(()), slope_bound=0.0)
    with pytest.raises(ValueError):
        QuasiLine(base=ZERO, w=E1, disk_radius=0.0,
                  graph=CurvePoly(()), slope_bound=0.0)


def test_quasi_diameter():
    line = QuasiLine(base=ZERO, w=E1, disk_radius=10.0,
                     graph=CurvePoly(()), slope_bound=0.0)
    b = Ball(PointC2(2.0, 0, 0, 0), 1.0)
    assert is_quasi_diameter(line, b, theta=0.1, w=E1)
    far = Ball(PointC2(2.0, 0, 5.0, 0), 1.0)
    assert not is_quasi_diameter(line, far, theta=0.1, w=E1)


# -- polynomials -------------------------------------------------------------


def test_curvepoly_eval_and_derivative():
    g = CurvePoly(((1 + 0j, 0j), (0j, 2 + 0j), (3 + 0j, 0j)))
    v1, v2 = g.eval(2.0)
    assert v1 == pytest.approx(1 + 3 * 4)   # 1 + 3 t^2
    assert v2 == pytest.approx(2 * 2)       # 2 t
    d1, d2 = g.derivative().eval(2.0)
    assert d1 == pytest.approx(12.0)
    assert d2 == pytest.approx(2.0)
    assert g.degree == 2


@given(st.floats(min_value=0.1, max_value=3.0))
@settings(max_examples=30, deadline=None)
def test_curvepoly_sup_bound_dominates_samples(radius):
    g = CurvePoly(((0.1 + 0j, 0j), (0j, 0.2j), (0.05 + 0.05j, 0j)))
    bound = g.sup_bound(radius)
    for ang in np.linspace(0, 2 * math.pi, 32):
        t = radius * complex(math.cos(ang), math.sin(ang))
        v1, v2 = g.eval(t)
        assert math.hypot(abs(v1), abs(v2)) <= bound + 1e-12


def test_curvepoly_degree_cap():
    with pytest.raises(ValueError):
        CurvePoly(tuple(((1 + 0j, 0j),) * 10))


def test_poly2c_eval_jacobian_and_batch():
    p = Poly2C((((2, 0), (1 + 0j, 0j)), ((1, 1), (0j, 2 + 0j))))
    w1, w2 = p.eval(1 + 1j, 2.0)
    assert w1 == pytest.approx((1 + 1j) ** 2)
    assert w2 == pytest.approx(2 * (1 + 1j) * 2.0)
    J = p.jacobian(1 + 1j, 2.0)
    eps = 1e-7
    num = (np.array(p.eval(1 + 1j + eps, 2.0)) - np.array(p.eval(1 + 1j, 2.0))) / eps
    assert J[:, 0] == pytest.approx(num, abs=1e-5)
    b1, b2 = p.eval_batch(np.array([1 + 1j, 0.5]), np.array([2.0, -1.0]))
    assert b1[0] == pytest.approx(w1) and b2[0] == pytest.approx(w2)
    assert b1[1] == pytest.approx(p.eval(0.5, -1.0)[0])


def test_poly2c_c2_bound_dominates_numeric_hessian():
    p = Poly2C((((2, 0), (0.3 + 0j, 0j)), ((0, 3), (0j, 0.1 + 0j))))
    bound = p.c2_upper_bound(0.0, 1.0)
    # numeric second derivative along z1 and z2 at a few points
    eps = 1e-5
    for z1, z2 in [(0.5, 0.5), (0.9, 0.1), (0.0, 0.99)]:
        f = lambda a, b: np.array(p.eval(a, b))
        d2 = (f(z1 + eps, z2) - 2 * f(z1, z2) + f(z1 - eps, z2)) / eps ** 2
        assert np.linalg.norm(d2) <= bound + 1e-3
        d2 = (f(z1, z2 + eps) - 2 * f(z1, z2) + f(z1, z2 - eps)) / eps ** 2
        assert np.linalg.norm(d2) <= bound + 1e-3


def test_poly2c_degree_validation():
    with pytest.raises(ValueError):
        Poly2C((((5, 0), (1 + 0j, 0j)),))
    with pytest.raises(ValueError):
        Poly2C((((-1, 1), (1 + 0j, 0j)),))
