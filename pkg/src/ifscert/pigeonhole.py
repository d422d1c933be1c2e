"""Pigeonhole intersection machinery on grids of balls.

Builds rationally-anchored directions w = w1 + (1/(m b)) e1 + (1/(m^2 b)) i e1
+ (1/(m^3 b)) e2 + (1/(m^4 b)) i e2 (coordinates taken in the grid basis),
verifies the floor-congruence sweep exactly, and walks x_k = x0 + k w to
locate a grid ball whose middle part meets a given line or quasi-line.

Floor computations are exact: every coordinate along the walk is an integer
over the common denominator b m^4, so floors are integer divisions.  The
fast path runs on int64 vectors after an overflow check; a Python-int path
covers the rest.

Hypercube convention: each lattice mesh splits into m^4 hypercubes and the
residue-(0,0,0,0) window is centered at the lattice points (all coordinates
within 1/(2m) of an integer), so no extra translation is recorded; a point
in the window is within 2/m of a ball center in the normalized frame, which
lies in the ball's middle part whenever r >= 2/m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import GridOfBalls, PointC2, QuadrupleBasis, QuasiLine

INT64_GUARD = 2**62


class PreconditionError(ValueError):
    """A stated precondition of the walk does not hold."""


@dataclass(frozen=True)
class PigeonDirection:
    """Direction w with staggered 1/(m^t b) corrections, stored exactly.

    ``w_coords`` are the four exact coordinates of w in the grid basis;
    ``w`` is the ambient vector.  ``strict`` records whether m came from
    the floor(10/r) rule or from a relaxed override.
    """

    w: PointC2
    alphas: tuple[int, int, int, int]
    beta: int
    m: int
    N_min: int
    w_coords: tuple[Fraction, Fraction, Fraction, Fraction]
    basis: QuadrupleBasis
    strict: bool

    @property
    def w1_coords(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(a, self.beta) for a in self.alphas)

    def walk_numerators(self) -> tuple[int, tuple[int, ...]]:
        """(denominator D, numerators n_t) with w_t = n_t / D, D = b m^4."""
        D = self.beta * self.m**4
        nums = tuple(self.alphas[t] * self.m**4 + self.m ** (4 - (t + 1))
                     for t in range(4))
        return D, nums


def build_direction(w0: PointC2, eta: float, r: float,
                    basis: QuadrupleBasis,
                    m_override: int | None = None) -> PigeonDirection:
    """Construct a pigeonhole direction with ||w - w0|| < eta.

    m defaults to floor(10/r); a relaxed override (>= 2) decouples m from r
    for exhaustive small-m testing and marks the direction non-strict.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0,1)")
    y0 = basis.solve(w0)
    beta, alphas = None, None
    for b in range(1, 1_000_000):
        a = tuple(round(c * b) for c in y0)
        w1 = basis.combine([Fraction(ai, b) for ai in a])
        if (w1 - w0).norm() < eta / 2:
            beta, alphas = b, a
            break
    if beta is None:  # unreachable: rationals are dense
        raise RuntimeError("rational approximation failed")

    if m_override is not None:
        if m_override < 2:
            raise ValueError("m override must be >= 2")
        m, strict = m_override, False
    else:
        m, strict = math.floor(10 / r), True
    while True:
        corr = basis.combine([1.0 / (m ** (t + 1) * beta) for t in range(4)])
        if corr.norm() < eta / 2:
            break
        m += 1
    coords = tuple(Fraction(alphas[t], beta) + Fraction(1, m ** (t + 1) * beta)
                   for t in range(4))
    w = basis.combine([float(c) for c in coords])
    return PigeonDirection(w=w, alphas=alphas, beta=beta, m=m,
                           N_min=10 * beta * m**5, w_coords=coords,
                           basis=basis, strict=strict)


def _exact_start(x0, D: int) -> tuple[int, ...]:
    """Start coordinates as integers over D; Fractions are taken exactly,
    floats are snapped to the D-grid (within 1/(2D) per coordinate)."""
    out = []
    for c in x0:
        if isinstance(c, Fraction):
            num = c * D
            if num.denominator != 1:
                raise PreconditionError(
                    f"start coordinate {c} not representable over denominator {D}")
            out.append(int(num))
        else:
            out.append(round(float(c) * D))
    return tuple(out)


def congruence_check(d: PigeonDirection, x0, k_max: int) -> dict:
    """Verify floor(x_{k + b m^t, t}) == floor(x_{k,t}) + 1 (mod m) exactly.

    ``x0`` is a quadruple of Fractions (or floats, snapped to the walk grid)
    in the normalized lattice frame.  Returns a report with the first
    counterexample, if any.
    """
    D, nums = d.walk_numerators()
    start = _exact_start(x0, D)
    m = d.m
    report = {"passed": True, "k_max": int(k_max), "m": m, "beta": d.beta,
              "counterexample": None}
    for t in range(4):
        shift = d.beta * m ** (t + 1)
        a, n = start[t], nums[t]
        hi = abs(a) + (k_max + shift) * abs(n)
        if hi < INT64_GUARD:
            ks = np.arange(0, k_max + shift + 1, dtype=np.int64)
            floors = (a + ks * n) // D
            bad = np.nonzero((floors[shift:shift + k_max + 1]
                              - floors[:k_max + 1] - 1) % m != 0)[0]
            if bad.size:
                k = int(bad[0])
                report["passed"] = False
                report["counterexample"] = {
                    "k": k, "coordinate": t + 1,
                    "floor_k": int(floors[k]),
                    "floor_k_shift": int(floors[k + shift]),
                }
                return report
        else:
            for k in range(k_max + 1):
                f0 = (a + k * n) // D
                f1 = (a + (k + shift) * n) // D
                if (f1 - f0 - 1) % m != 0:
                    report["passed"] = False
                    report["counterexample"] = {
                        "k": k, "coordinate": t + 1,
                        "floor_k": f0, "floor_k_shift": f1,
                    }
                    return report
    return report


@dataclass(frozen=True)
class GridHit:
    index: tuple[int, int, int, int]
    witness: PointC2
    steps_walked: int
    k: int
    direction_sign: int


def _angle(a: PointC2, b: PointC2) -> float:
    """Angle between directions via the chord length (well conditioned at 0,
    unlike acos of the normalized dot product)."""
    u = a.as_array() / a.norm()
    v = b.as_array() / b.norm()
    chord = np.linalg.norm(u - v)
    return 2.0 * math.asin(min(1.0, chord / 2.0))


def find_grid_intersection(G: GridOfBalls, L: QuasiLine, d: PigeonDirection,
                           theta: float, strict: bool = False,
                           max_steps: int | None = None) -> GridHit | None:
    """Walk x_k = x0 + k w and return a grid ball whose middle part the
    curve meets, plus a witness point on the curve.

    The walk runs in the normalized lattice frame with exact integer
    arithmetic; every residue-(0,...,0) candidate is refined against the
    true curve in ambient coordinates (middle part = half the ball radius).
    In strict mode the grid must satisfy N >= N(r) = 10 b m^5 and the walk
    is capped at N(r) steps.
    """
    if _angle(d.w, L.w) > 2 * theta + 1e-12:
        raise PreconditionError("curve direction outside the cone C^{w,2theta}")
    from .geometry import region_contains
    if not region_contains(G, L.base, "middle"):
        raise PreconditionError("curve base outside the middle part of the grid")
    if strict and G.N < d.N_min:
        raise PreconditionError(f"strict mode requires N >= N(r) = {d.N_min}")

    D, nums = d.walk_numerators()
    m = d.m
    limit = max_steps if max_steps is not None else d.N_min
    y0 = G.u.solve(L.base - G.o)
    start = tuple(round(c * D) for c in y0)
    # per coordinate the attainable classes are spaced D/m apart, so the
    # best class is within floor(D/(2m)) of a lattice point (inclusive)
    window = D // (2 * m)
    if window <= 0:
        raise PreconditionError("denominator too small for the residue window")
    half_radius = G.ball_radius / 2

    steps_total = 0
    for sign in (1, -1):
        hit = _scan(G, L, start, nums, D, window, limit, sign, half_radius)
        steps_total += hit[1]
        if hit[0] is not None:
            found = hit[0]
            return GridHit(index=found[0], witness=found[1],
                           steps_walked=steps_total, k=found[2],
                           direction_sign=sign)
    return None


def _scan(G, L, start, nums, D, window, limit, sign, half_radius,
          chunk=1 << 18):
    a = np.array(start, dtype=np.int64)
    n = sign * np.array(nums, dtype=np.int64)
    hi = int(np.max(np.abs(a))) + limit * int(np.max(np.abs(n)))
    use_np = hi < INT64_GUARD
    steps = 0
    k0 = 0
    while k0 <= limit:
        k1 = min(k0 + chunk, limit + 1)
        if use_np:
            ks = np.arange(k0, k1, dtype=np.int64)
            res = (a[:, None] + ks[None, :] * n[:, None]) % D
            near = (res <= window) | (res >= D - window)
            cand = ks[np.all(near, axis=0)]
        else:
            cand = []
            for k in range(k0, k1):
                ok = True
                for t in range(4):
                    r = (int(a[t]) + k * int(n[t])) % D
                    if not (r <= window or r >= D - window):
                        ok = False
                        break
                if ok:
                    cand.append(k)
            cand = np.array(cand, dtype=np.int64)
        steps += k1 - k0
        for k in cand:
            k = int(k)
            yk = (a + k * n) / D
            v = np.rint(yk).astype(np.int64)
            if np.any(np.abs(v) > G.N):
                continue
            center = G.o + G.u.combine(v)
            dist, t = L.distance_to(center)
            if dist <= half_radius:
                return (tuple(int(c) for c in v), L.point(t), k), steps
        k0 = k1
    return None, steps


def empirical_N(basis: QuadrupleBasis, r: float, d: PigeonDirection,
                theta: float, trials: int, seed: int = 0,
                n_cap: int | None = None) -> int:
    """Smallest N such that the walk succeeded on every sampled trial.

    Each trial draws a start point in the middle part and a straight line
    with direction at angle <= theta from w; the per-trial minimal N is
    found by doubling + bisection (success is monotone in N since the hull
    caps the walk), and the result is the max over trials, so it is
    monotone in the number of trials for a fixed seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    cap = n_cap if n_cap is not None else d.N_min

    def trial_ok(N: int, start_coeffs, direction) -> bool:
        G = GridOfBalls(u=basis, o=PointC2(0, 0, 0, 0), N=N, r=r)
        base = G.o + basis.combine(np.asarray(start_coeffs) * (N / 2.0))
        line = QuasiLine(base=base, w=direction, disk_radius=max(4.0 * G.size, 1.0),
                         graph=__import__("ifscert.polynomials", fromlist=["CurvePoly"]).CurvePoly(()),
                         slope_bound=0.0)
        try:
            return find_grid_intersection(G, line, d, theta, strict=False) is not None
        except PreconditionError:
            return False

    result = 1
    for _ in range(trials):
        coeffs = rng.uniform(-1.0, 1.0, size=4)
        direction = _direction_in_cone(d.w, theta, rng)
        lo, hi = None, max(result, 1)
        while hi <= cap:
            if trial_ok(hi, coeffs, direction):
                lo = hi
                break
            hi *= 2
        if lo is None:
            result = cap
            continue
        lo_fail, hi_ok = hi // 2, hi
        while hi_ok - lo_fail > 1:
            mid = (lo_fail + hi_ok) // 2
            if trial_ok(mid, coeffs, direction):
                hi_ok = mid
            else:
                lo_fail = mid
        result = max(result, hi_ok)
    return result


def _direction_in_cone(w: PointC2, theta: float, rng) -> PointC2:
    wa = w.as_array()
    wa = wa / np.linalg.norm(wa)
    if theta <= 0:
        return PointC2.from_array(wa)
    v = rng.standard_normal(4)
    v -= (v @ wa) * wa
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return PointC2.from_array(wa)
    ang = rng.uniform(0, theta)
    out = math.cos(ang) * wa + math.sin(ang) * (v / nv)
    return PointC2.from_array(out / np.linalg.norm(out))


def fit_theta(basis: QuadrupleBasis, r: float, d: PigeonDirection, N: int,
              trials: int = 100, seed: int = 0) -> float:
    """Largest theta (by bisection) with a clean trial run at fixed N.

    Trials place straight lines at angle exactly theta from w through random
    middle-part points; theta_emp is reported in certificates.
    """
    rng0 = np.random.default_rng(seed)
    starts = [rng0.uniform(-1.0, 1.0, size=4) for _ in range(trials)]
    tilts = [rng0.standard_normal(4) for _ in range(trials)]
    G = GridOfBalls(u=basis, o=PointC2(0, 0, 0, 0), N=N, r=r)
    from .polynomials import CurvePoly

    def clean(theta: float) -> bool:
        wa = d.w.as_array() / d.w.norm()
        for coeffs, tilt in zip(starts, tilts):
            t = tilt - (tilt @ wa) * wa
            nt = np.linalg.norm(t)
            if nt < 1e-12 or theta == 0:
                da = wa
            else:
                da = math.cos(theta) * wa + math.sin(theta) * (t / nt)
                da = da / np.linalg.norm(da)
            base = G.o + basis.combine(np.asarray(coeffs) * (N / 2.0))
            line = QuasiLine(base=base, w=PointC2.from_array(da),
                             disk_radius=max(4.0 * G.size, 1.0),
                             graph=CurvePoly(()), slope_bound=0.0)
            try:
                if find_grid_intersection(G, line, d, theta, strict=False) is None:
                    return False
            except PreconditionError:
                return False
        return True

    if not clean(0.0):
        return 0.0
    lo, hi = 0.0, math.pi / 8
    if clean(hi):
        return hi
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        if clean(mid):
            lo = mid
        else:
            hi = mid
    return lo
