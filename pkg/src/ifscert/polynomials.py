"""Polynomial maps with certifiable derivative bounds.

Two shapes are needed: C^2-valued polynomials in one complex variable
(transverse graphs of quasi-lines) and C^2-valued polynomials in two complex
variables (residual parts of quasi-linear branches).  Both carry explicit
coefficient tables so that sup-norms of first and second derivatives over a
disk or ball can be bounded from the coefficients alone, never only from
sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CURVE_MAX_DEGREE = 8
RESIDUAL_MAX_DEGREE = 4


@dataclass(frozen=True)
class CurvePoly:
    """g(t) = sum_k c_k t^k with t complex and c_k in C^2.

    Coefficients are stored as a tuple of (complex, complex) pairs, index =
    degree.  Degree is capped at CURVE_MAX_DEGREE so derivative bounds stay
    certifiable.
    """

    coeffs: tuple[tuple[complex, complex], ...] = field(default=())

    def __post_init__(self):
        if len(self.coeffs) > CURVE_MAX_DEGREE + 1:
            raise ValueError(f"curve polynomial degree > {CURVE_MAX_DEGREE}")
        object.__setattr__(
            self, "coeffs", tuple((complex(a), complex(b)) for a, b in self.coeffs)
        )

    @property
    def degree(self) -> int:
        return max((k for k, c in enumerate(self.coeffs) if c != (0j, 0j)), default=0)

    def eval(self, t: complex) -> tuple[complex, complex]:
        z1 = 0j
        z2 = 0j
        for k in range(len(self.coeffs) - 1, -1, -1):
            a, b = self.coeffs[k]
            z1 = z1 * t + a
            z2 = z2 * t + b
        return z1, z2

    def derivative(self) -> "CurvePoly":
        return CurvePoly(
            tuple((k * a, k * b) for k, (a, b) in enumerate(self.coeffs) if k >= 1)
        )

    def coeff_norms(self) -> list[float]:
        return [math.hypot(abs(a), abs(b)) for a, b in self.coeffs]

    def sup_bound(self, radius: float) -> float:
        """Upper bound for sup_{|t|<=radius} |g(t)| from the coefficients."""
        return sum(c * radius**k for k, c in enumerate(self.coeff_norms()))

    def derivative_sup_bound(self, radius: float) -> float:
        return self.derivative().sup_bound(radius)

    def scaled(self, factor: complex) -> "CurvePoly":
        return CurvePoly(tuple((factor * a, factor * b) for a, b in self.coeffs))


@dataclass(frozen=True)
class Poly2C:
    """C^2-valued polynomial in (z1, z2), total degree <= RESIDUAL_MAX_DEGREE.

    ``terms`` maps exponent pairs (i, j) to coefficient pairs (c1, c2): the
    map is z -> (sum c1_ij z1^i z2^j, sum c2_ij z1^i z2^j).
    """

    terms: tuple[tuple[tuple[int, int], tuple[complex, complex]], ...] = field(default=())

    def __post_init__(self):
        norm = []
        for (i, j), (c1, c2) in self.terms:
            if i < 0 or j < 0 or i + j > RESIDUAL_MAX_DEGREE:
                raise ValueError(f"bad residual exponent ({i},{j})")
            norm.append(((int(i), int(j)), (complex(c1), complex(c2))))
        norm.sort(key=lambda e: e[0])
        object.__setattr__(self, "terms", tuple(norm))

    @staticmethod
    def zero() -> "Poly2C":
        return Poly2C(())

    def is_zero(self) -> bool:
        return all(c1 == 0 and c2 == 0 for _, (c1, c2) in self.terms)

    def eval(self, z1: complex, z2: complex) -> tuple[complex, complex]:
        w1 = 0j
        w2 = 0j
        for (i, j), (c1, c2) in self.terms:
            m = z1**i * z2**j
            w1 += c1 * m
            w2 += c2 * m
        return w1, w2

    def eval_batch(self, z1: np.ndarray, z2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized evaluation on arrays of points."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        w1 = np.zeros_like(z1)
        w2 = np.zeros_like(z2)
        for (i, j), (c1, c2) in self.terms:
            m = z1**i * z2**j
            w1 += c1 * m
            w2 += c2 * m
        return w1, w2

    def jacobian(self, z1: complex, z2: complex) -> np.ndarray:
        """Complex 2x2 Jacobian (the map is holomorphic)."""
        J = np.zeros((2, 2), dtype=complex)
        for (i, j), (c1, c2) in self.terms:
            if i >= 1:
                m = i * z1 ** (i - 1) * z2**j
                J[0, 0] += c1 * m
                J[1, 0] += c2 * m
            if j >= 1:
                m = j * z1**i * z2 ** (j - 1)
                J[0, 1] += c1 * m
                J[1, 1] += c2 * m
        return J

    def scaled(self, factor: complex) -> "Poly2C":
        return Poly2C(
            tuple(((i, j), (factor * c1, factor * c2)) for (i, j), (c1, c2) in self.terms)
        )

    def c2_upper_bound(self, center_norm: float, radius: float) -> float:
        """Coefficient-derived upper bound for max ||D^2 . || on the ball.

        For each monomial c z1^i z2^j the sum of absolute values of all
        second partials on {||z|| <= s} is at most
        |c| * (i+j) * (i+j-1) * s^(i+j-2), with s = center_norm + radius.
        This over-counts, so the bound is never an under-estimate.
        """
        s = center_norm + radius
        total = 0.0
        for (i, j), (c1, c2) in self.terms:
            d = i + j
            if d < 2:
                continue
            c = math.hypot(abs(c1), abs(c2))
            total += c * d * (d - 1) * (s ** (d - 2) if d > 2 or s != 0 else 1.0)
        return total

    def d1_upper_bound(self, center_norm: float, radius: float) -> float:
        """Coefficient bound for max ||D . || on the ball (used for slack)."""
        s = center_norm + radius
        total = 0.0
        for (i, j), (c1, c2) in self.terms:
            d = i + j
            if d < 1:
                continue
            c = math.hypot(abs(c1), abs(c2))
            total += c * d * s ** (d - 1)
        return total

    def max_coeff(self) -> float:
        return max((math.hypot(abs(c1), abs(c2)) for _, (c1, c2) in self.terms), default=0.0)
