"""Geometric vocabulary on C^2 viewed as R^4.

Points and vectors of C^2, real quadruple bases and their rays (quadruples
modulo positive real scaling), grids of balls on an affine lattice, cones,
concentric fractional parts of balls, and quasi-lines (bounded-slope graphs
over a disk in a complex direction).

All values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .polynomials import CurvePoly

#: relative determinant floor below which a quadruple basis is rejected
BASIS_DET_RTOL = 1e-9


class DegenerateBasisError(ValueError):
    """Quadruple basis with |det| below the conditioning floor."""


class GridIndexError(IndexError):
    """Grid ball index outside [-N, N]^4."""


@dataclass(frozen=True)
class PointC2:
    """Point or vector of C^2 stored as four real coordinates."""

    re1: float
    im1: float
    re2: float
    im2: float

    def __post_init__(self):
        for v in (self.re1, self.im1, self.re2, self.im2):
            if not math.isfinite(v):
                raise ValueError("non-finite coordinate in PointC2")

    @staticmethod
    def from_array(a) -> "PointC2":
        return PointC2(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @staticmethod
    def from_complex(z1: complex, z2: complex) -> "PointC2":
        return PointC2(z1.real, z1.imag, z2.real, z2.imag)

    def as_array(self) -> np.ndarray:
        return np.array([self.re1, self.im1, self.re2, self.im2], dtype=float)

    def as_complex(self) -> tuple[complex, complex]:
        return complex(self.re1, self.im1), complex(self.re2, self.im2)

    def norm(self) -> float:
        return math.sqrt(self.re1**2 + self.im1**2 + self.re2**2 + self.im2**2)

    def __add__(self, other: "PointC2") -> "PointC2":
        return PointC2(
            self.re1 + other.re1, self.im1 + other.im1,
            self.re2 + other.re2, self.im2 + other.im2,
        )

    def __sub__(self, other: "PointC2") -> "PointC2":
        return PointC2(
            self.re1 - other.re1, self.im1 - other.im1,
            self.re2 - other.re2, self.im2 - other.im2,
        )

    def scale(self, s: float) -> "PointC2":
        return PointC2(s * self.re1, s * self.im1, s * self.re2, s * self.im2)

    def cmul(self, t: complex) -> "PointC2":
        """Complex scalar multiplication on both C coordinates."""
        z1, z2 = self.as_complex()
        return PointC2.from_complex(t * z1, t * z2)

    def dot(self, other: "PointC2") -> float:
        return float(self.as_array() @ other.as_array())


ZERO = PointC2(0.0, 0.0, 0.0, 0.0)
E1 = PointC2(1.0, 0.0, 0.0, 0.0)
IE1 = PointC2(0.0, 1.0, 0.0, 0.0)
E2 = PointC2(0.0, 0.0, 1.0, 0.0)
IE2 = PointC2(0.0, 0.0, 0.0, 1.0)


def mat_apply(M: np.ndarray, v: PointC2) -> PointC2:
    """Apply a 2x2 complex matrix to a point of C^2."""
    z1, z2 = v.as_complex()
    w1 = M[0, 0] * z1 + M[0, 1] * z2
    w2 = M[1, 0] * z1 + M[1, 1] * z2
    return PointC2.from_complex(w1, w2)


@dataclass(frozen=True)
class QuadrupleBasis:
    """Four R-linearly independent vectors of C^2."""

    u1: PointC2
    u2: PointC2
    u3: PointC2
    u4: PointC2

    def __post_init__(self):
        det = abs(np.linalg.det(self.matrix()))
        floor = BASIS_DET_RTOL * math.prod(v.norm() for v in self.vectors())
        if det < floor:
            raise DegenerateBasisError(f"|det|={det:.3e} below floor {floor:.3e}")

    def vectors(self) -> tuple[PointC2, PointC2, PointC2, PointC2]:
        return (self.u1, self.u2, self.u3, self.u4)

    def matrix(self) -> np.ndarray:
        """4x4 real matrix with the u_i as columns."""
        return np.column_stack([v.as_array() for v in self.vectors()])

    def min_norm(self) -> float:
        return min(v.norm() for v in self.vectors())

    def max_norm(self) -> float:
        return max(v.norm() for v in self.vectors())

    def solve(self, v: PointC2) -> np.ndarray:
        """Coefficients of v in this basis."""
        return np.linalg.solve(self.matrix(), v.as_array())

    def combine(self, coeffs) -> PointC2:
        return PointC2.from_array(self.matrix() @ np.asarray(coeffs, dtype=float))

    def ray(self) -> np.ndarray:
        """The quadruple modulo positive real scaling, as a unit 16-vector."""
        flat = np.concatenate([v.as_array() for v in self.vectors()])
        return flat / np.linalg.norm(flat)

    def transformed(self, M: np.ndarray) -> "QuadrupleBasis":
        """Left-multiply each basis vector by a 2x2 complex matrix."""
        return QuadrupleBasis(*(mat_apply(M, v) for v in self.vectors()))

    @staticmethod
    def standard(scale: float = 1.0) -> "QuadrupleBasis":
        return QuadrupleBasis(E1.scale(scale), IE1.scale(scale),
                              E2.scale(scale), IE2.scale(scale))


def ray_distance(ray_a: np.ndarray, ray_b: np.ndarray) -> float:
    """Distance between two positive-scaling rays (unit 16-vector metric)."""
    return float(np.linalg.norm(ray_a - ray_b))


@dataclass(frozen=True)
class Ball:
    center: PointC2
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def contains(self, p: PointC2, slack: float = 0.0) -> bool:
        return (p - self.center).norm() <= self.radius + slack


def ball_part(b: Ball, fraction: float) -> Ball:
    """Concentric ball with radius scaled by the fraction.

    The fractions actually used downstream are 1/2 (middle part), 3/4 and
    1/10, but any positive fraction is accepted.
    """
    if not fraction > 0:
        raise ValueError("fraction must be positive")
    return Ball(b.center, b.radius * fraction)


@dataclass(frozen=True)
class Cone:
    """Cone of directions around an axis; membership is angle <= opening.

    The opening is interpreted as the one-sided (half) angle, fixed here as
    the project-wide convention.
    """

    axis: PointC2
    opening: float

    def __post_init__(self):
        if self.axis.norm() == 0:
            raise ValueError("cone axis must be nonzero")
        if not 0 < self.opening < math.pi:
            raise ValueError("cone opening must be in (0, pi)")


def cone_contains(c: Cone, v: PointC2) -> bool:
    nv = v.norm()
    if nv == 0:
        raise ValueError("zero vector has no direction")
    cosang = c.axis.dot(v) / (c.axis.norm() * nv)
    cosang = max(-1.0, min(1.0, cosang))
    return math.acos(cosang) <= c.opening


@dataclass(frozen=True)
class GridOfBalls:
    """(2N+1)^4 equal balls centered on an affine lattice of C^2.

    Ball radius is r * min_i ||u_i||; size is 2N * max_i ||u_i||.
    """

    u: QuadrupleBasis
    o: PointC2
    N: int
    r: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 0 < self.r < 1:
            raise ValueError("relative radius r must lie in (0,1)")

    @property
    def ball_radius(self) -> float:
        return self.r * self.u.min_norm()

    @property
    def size(self) -> float:
        return 2 * self.N * self.u.max_norm()

    @property
    def ball_count(self) -> int:
        return (2 * self.N + 1) ** 4

    def ball_at(self, idx) -> Ball:
        return Ball(center_at(self, idx), self.ball_radius)


def center_at(g: GridOfBalls, idx) -> PointC2:
    """Center o + i*u1 + j*u2 + k*u3 + l*u4 of the ball at a 4-index."""
    idx = tuple(int(v) for v in idx)
    if len(idx) != 4 or any(abs(v) > g.N for v in idx):
        raise GridIndexError(f"index {idx} outside [-{g.N},{g.N}]^4")
    return g.o + g.u.combine(idx)


def region_contains(g: GridOfBalls, p: PointC2, region: str,
                    slack: float = 1e-9) -> bool:
    """Membership in the middle part (|coeff| <= N/2) or hull (<= N).

    Coefficients are solved in the real basis; slack absorbs float error in
    the solve so that exact lattice centers classify as inside.
    """
    if region not in ("middle", "hull"):
        raise ValueError(f"unknown region {region!r}")
    bound = g.N / 2 if region == "middle" else float(g.N)
    coeffs = g.u.solve(p - g.o)
    return bool(np.all(np.abs(coeffs) <= bound + slack * max(1.0, g.N)))


@dataclass(frozen=True)
class QuasiLine:
    """Graph of bounded slope over a disk in a complex direction.

    The curve is t -> base + t*w + g(t) for t in the disk of radius
    disk_radius, with w a unit vector of C^2 and g a polynomial transverse
    displacement.  slope_bound is a certified upper bound for sup |g'|.
    """

    base: PointC2
    w: PointC2
    disk_radius: float
    graph: CurvePoly
    slope_bound: float

    def __post_init__(self):
        if abs(self.w.norm() - 1.0) > 1e-9:
            raise ValueError("direction w must be a unit vector")
        if not self.disk_radius > 0:
            raise ValueError("disk radius must be positive")
        if self.slope_bound < 0:
            raise ValueError("slope bound must be nonnegative")

    def point(self, t: complex) -> PointC2:
        g1, g2 = self.graph.eval(t)
        return self.base + self.w.cmul(t) + PointC2.from_complex(g1, g2)

    def certified_slope(self, samples: int = 256) -> float:
        """Max of the coefficient bound and a dense derivative sample."""
        bound = self.graph.derivative_sup_bound(self.disk_radius)
        if not self.graph.coeffs:
            return 0.0
        deriv = self.graph.derivative()
        best = 0.0
        for k in range(samples):
            ang = 2 * math.pi * k / samples
            for rad in (self.disk_radius, 0.5 * self.disk_radius):
                t = rad * complex(math.cos(ang), math.sin(ang))
                d1, d2 = deriv.eval(t)
                best = max(best, math.hypot(abs(d1), abs(d2)))
        return max(best, bound) if bound >= best else bound

    def slope_ok(self) -> bool:
        return self.graph.derivative_sup_bound(self.disk_radius) <= self.slope_bound + 1e-15

    def distance_to(self, target: PointC2, t0: complex | None = None) -> tuple[float, complex]:
        """Min distance from the curve to a point, with the argmin parameter.

        Seeds at the Hermitian projection of (target - base) onto w, then
        refines by local minimization clamped to the disk.
        """
        if t0 is None:
            z1, z2 = (target - self.base).as_complex()
            w1, w2 = self.w.as_complex()
            t0 = z1 * w1.conjugate() + z2 * w2.conjugate()
        t0 = self._clamp(t0)
        if not self.graph.coeffs:
            # straight line: the Hermitian projection is the exact argmin
            return (self.point(t0) - target).norm(), t0

        def f(x):
            return (self.point(complex(x[0], x[1])) - target).norm()

        res = minimize(f, [t0.real, t0.imag], method="Nelder-Mead",
                       options={"xatol": 1e-14, "fatol": 1e-16, "maxiter": 400})
        t = self._clamp(complex(res.x[0], res.x[1]))
        return (self.point(t) - target).norm(), t

    def _clamp(self, t: complex) -> complex:
        m = abs(t)
        if m > self.disk_radius:
            return t * (self.disk_radius / m)
        return t


def is_quasi_diameter(line: QuasiLine, b: Ball, theta: float, w: PointC2) -> bool:
    """Quasi-diameter test: slope <= theta relative to w, and the curve meets
    the concentric 1/10-radius core of the ball."""
    if line.slope_bound > theta:
        return False
    if abs(w.dot(line.w) / w.norm() - 1.0) > math.sin(theta) + 1e-9:
        return False
    core = ball_part(b, 0.1)
    dist, _ = line.distance_to(core.center)
    return dist <= core.radius
