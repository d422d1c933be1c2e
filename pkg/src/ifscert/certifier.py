"""Intersection certifier: drive a curve into the limit set of a branch
family and emit an independently re-checkable certificate.

The certifier runs the four-case routing loop.  At every level the curve
meets the middle part of a ball of the current typed grid; the branch behind
that ball is appended to the address, the normalized differential of the
composition is classified against the drift sets, and the type demanded at
the next level is chosen so that accumulated drift is corrected within two
extra levels:

  Case 0  first level, no control on the initial position;
  Case 1  drift still small (InU), keep requesting type 0;
  Case 2  drift has reached the primed shell, request the permuted
          corrector type p';
  Case 3  the previous level used a nonzero type, fall back to type 0
          (the correcting step);

A certificate records, per level, the branch index, the case label, the hit
ball and witness parameter, the classification and its margin, and the grid
radii; verification replays every record from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correction import Classification, CorrectionSystem
from .geometry import GridOfBalls, PointC2, QuasiLine, center_at
from .ifs import (CorrectingIFS, StructureError, composition_differential,
                  compose_points)
from .matrices import mats_close


class CertificationError(RuntimeError):
    """The routing loop could not complete (no hit ball, drift escaped...)."""


@dataclass(frozen=True)
class LevelRecord:
    """One level of the routing loop, enough to replay it independently."""

    level: int
    case: str  # "Case0" | "Case1" | "Case2" | "Case3"
    branch: int
    type_used: int  # p_{j-1}: the type the branch was required to have
    type_next: int  # p_j: the type requested at the next level
    ball_index: tuple[int, int, int, int]
    witness_t: complex
    hit_distance: float
    ball_radius: float
    classification: str
    class_p: int
    class_margin: float
    grid_r: float
    typed_grid_r: float


@dataclass(frozen=True)
class IntersectionCertificate:
    instance_hash: str
    x: float
    depth: int
    records: tuple[LevelRecord, ...]
    address: tuple[int, ...]
    limit_point: PointC2
    final_distance: float
    final_tolerance: float
    passed: bool
    failure: str = ""


@dataclass
class _LevelState:
    """Transported grid data at the current level."""

    grid: GridOfBalls
    typed_grids: list[GridOfBalls]
    depth_scale: float  # |a|^{-(j-1)}, current linear size factor


def _shared_a_and_A(ifs: CorrectingIFS):
    a = ifs.branches[0].a
    A = ifs.branches[0].A
    for f in ifs.branches:
        if abs(f.a - a) > 1e-12 * abs(a) or not mats_close(f.A, A, 1e-10):
            raise StructureError("branches must share the contraction "
                                 "denominator and the group element")
    return a, A


def _find_hits(grid: GridOfBalls, line: QuasiLine) -> list[tuple[tuple, float, complex]]:
    """Balls of the grid whose middle parts the curve meets, closest first.

    Scans ball centers by coarse distance first, then refines the closest
    candidates against the true curve.
    """
    N = grid.N
    rng_idx = np.arange(-N, N + 1)
    ii, jj, kk, ll = np.meshgrid(rng_idx, rng_idx, rng_idx, rng_idx,
                                 indexing="ij")
    coeffs = np.stack([ii.ravel(), jj.ravel(), kk.ravel(), ll.ravel()], axis=1)
    centers = coeffs.astype(float) @ grid.u.matrix().T + grid.o.as_array()
    # coarse screen: distance from each center to the straight chord
    base = line.base.as_array()
    w1, w2 = line.w.as_complex()
    wr = np.array([line.w.re1, line.w.im1, line.w.re2, line.w.im2])
    wi = np.array([-line.w.im1, line.w.re1, -line.w.im2, line.w.re2])
    rel = centers - base
    tr = rel @ wr
    ti = rel @ wi
    proj = base + tr[:, None] * wr[None, :] + ti[:, None] * wi[None, :]
    coarse = np.linalg.norm(centers - proj, axis=1)
    slack = line.graph.sup_bound(line.disk_radius) if line.graph.coeffs else 0.0
    half = grid.ball_radius / 2
    order = np.argsort(coarse)
    hits = []
    for pos in order[: min(64, len(order))]:
        if coarse[pos] > half + slack + 1e-12:
            break
        dist, t = line.distance_to(PointC2.from_array(centers[pos]))
        if dist <= half:
            hits.append((tuple(int(v) for v in coeffs[pos]), dist, t))
    hits.sort(key=lambda h: h[1])
    return hits


def _transport_level(ifs: CorrectingIFS, addr: list[int],
                     shrink_budget_r: float, shrink_budget_s: float) -> _LevelState:
    """Grids at level j+1 = len(addr)+1, transported along the address.

    Origins and bases are exact (orbit of the level-one origins and the
    chain-rule differential); the relative radii use the certified shrink
    r^{j+1} >= r^1 - 2|a| R maxC2 * sum(|a|^-l).
    """
    branches = [ifs.branches[i] for i in addr]
    D = composition_differential(branches, ifs.grid.o)
    o_img = compose_points(branches, ifs.grid.o)[-1]
    u_img = ifs.grid.u.transformed(D)
    grid = GridOfBalls(u=u_img, o=o_img, N=ifs.grid.N,
                       r=max(ifs.grid.r - shrink_budget_r, 1e-12))
    typed = []
    for Gp in ifs.typed_grids:
        Dp = composition_differential(branches, Gp.o)
        op_img = compose_points(branches, Gp.o)[-1]
        typed.append(GridOfBalls(u=Gp.u.transformed(Dp), o=op_img, N=Gp.N,
                                 r=max(Gp.r - shrink_budget_s, 1e-12)))
    a = abs(ifs.branches[0].a)
    return _LevelState(grid=grid, typed_grids=typed,
                       depth_scale=a ** (-len(addr)))


def certify_intersection(ifs: CorrectingIFS, system: CorrectionSystem,
                         line: QuasiLine, depth: int,
                         instance_hash: str = "") -> IntersectionCertificate:
    """Route the curve through ``depth`` levels and certify the intersection.

    Raises CertificationError when no admissible ball is hit at some level
    or the accumulated drift leaves all classification sets.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    a, A = _shared_a_and_A(ifs)
    x = ifs.x
    R = ifs.domain.radius
    cn = ifs.domain.center.norm()
    max_c2 = max(f.c2_norm_bound(cn, R) for f in ifs.branches)

    records: list[LevelRecord] = []
    addr: list[int] = []
    p_prev = 0  # type demanded of the next branch (p_{j-1}); starts at 0
    prev_state = "InU"
    shrink = 0.0

    for j in range(1, depth + 1):
        state = _transport_level(ifs, addr, shrink, shrink)
        grid_j = state.typed_grids[p_prev]
        hits = _find_hits(grid_j, line)
        chosen = None
        for ball_idx, dist, t in hits:
            branch = _branch_for_ball(ifs, p_prev, ball_idx)
            if branch is not None:
                chosen = (ball_idx, dist, t, branch)
                break
        if chosen is None:
            why = (f"no middle-part hit in the type-{p_prev} grid at level {j}"
                   if not hits else
                   f"no hit ball of type {p_prev} owned by a branch at level {j}")
            return _fail(records, addr, ifs, instance_hash, x, depth, why)
        ball_idx, dist, t, branch = chosen

        if j == 1:
            case = "Case0"
        elif p_prev != 0:
            case = "Case3"
        elif prev_state == "InU":
            case = "Case1"
        else:
            case = "Case2"

        addr.append(branch)
        branches = [ifs.branches[i] for i in addr]
        D = composition_differential(branches, ifs.grid.o)
        M = np.linalg.matrix_power(A.conj().T, j) @ (a ** j * D)
        cls = system.classify_drift(M, x)
        if cls.state == "Outside":
            return _fail(records, addr, ifs, instance_hash, x, depth,
                         f"drift escaped all sets at level {j} "
                         f"(norm {cls.drift_norm:.3e})")
        # Only a completed Case-2 level requests a corrector type: when
        # drift first enters the primed shell the next level is the Case-2
        # level and still uses a type-0 branch.
        if case == "Case2" and cls.state != "InU":
            p_next = system.correction_target(A, cls.p)
        else:
            p_next = 0

        shrink += 2 * abs(a) * (R * state.depth_scale) * max_c2
        records.append(LevelRecord(
            level=j, case=case, branch=branch, type_used=p_prev,
            type_next=p_next, ball_index=ball_idx, witness_t=t,
            hit_distance=dist, ball_radius=grid_j.ball_radius,
            classification=cls.state, class_p=cls.p, class_margin=cls.margin,
            grid_r=state.grid.r, typed_grid_r=grid_j.r))
        p_prev = p_next
        prev_state = cls.state

    lp = limit_point(ifs, addr)
    final_tol = 2.0 * R * abs(a) ** (-depth)
    fdist, _ = line.distance_to(lp)
    passed = fdist <= final_tol
    return IntersectionCertificate(
        instance_hash=instance_hash, x=x, depth=depth, records=tuple(records),
        address=tuple(addr), limit_point=lp, final_distance=fdist,
        final_tolerance=final_tol, passed=passed,
        failure="" if passed else "limit point too far from the curve")


def _fail(records, addr, ifs, instance_hash, x, depth, why):
    lp = limit_point(ifs, addr) if addr else ifs.domain.center
    return IntersectionCertificate(
        instance_hash=instance_hash, x=x, depth=depth, records=tuple(records),
        address=tuple(addr), limit_point=lp, final_distance=-1.0,
        final_tolerance=0.0, passed=False, failure=why)


def _branch_for_ball(ifs: CorrectingIFS, p: int, ball_idx: tuple) -> int | None:
    """Branch of type p whose level-one image ball is the given ball of the
    type-p grid.  The map is level-independent (grids transport jointly),
    so it is resolved once on the level-one geometry and cached on the
    instance."""
    cache = getattr(ifs, "_ball_branch_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(ifs, "_ball_branch_cache", cache)
    table = cache.get(p)
    if table is None:
        table = {}
        Gp = ifs.typed_grids[p]
        for j in ifs.typed_branches[p]:
            img = ifs.branches[j].apply(ifs.typed_balls[p].center)
            coeffs = Gp.u.solve(img - Gp.o)
            idx = tuple(int(round(c)) for c in coeffs)
            if all(abs(c - i) < 0.25 for c, i in zip(coeffs, idx)) \
                    and all(abs(v) <= Gp.N for v in idx):
                table.setdefault(idx, j)
        cache[p] = table
    return table.get(tuple(ball_idx))


def limit_point(ifs: CorrectingIFS, address) -> PointC2:
    """Image of the domain center under the composition along the address;
    approximates the limit point to within R |a|^{-len(address)}."""
    branches = [ifs.branches[i] for i in address]
    return compose_points(branches, ifs.domain.center)[-1]


def verify_certificate(ifs: CorrectingIFS, system: CorrectionSystem,
                       line: QuasiLine, cert: IntersectionCertificate) -> dict:
    """Replay a certificate from scratch and report every discrepancy.

    Recomputes the transported grids along the recorded address, re-measures
    every recorded ball hit on the true curve, re-derives each
    classification and case label, and re-checks the limit point.  Uses no
    state from certification except the certificate itself.
    """
    problems: list[str] = []
    if len(cert.records) != cert.depth or len(cert.address) != cert.depth:
        problems.append("record/address length does not match the depth")
    a, A = _shared_a_and_A(ifs)
    R = ifs.domain.radius
    cn = ifs.domain.center.norm()
    max_c2 = max(f.c2_norm_bound(cn, R) for f in ifs.branches)
    shrink = 0.0
    p_prev = 0
    prev_state = "InU"

    for rec in cert.records:
        j = rec.level
        if rec.type_used != p_prev:
            problems.append(f"level {j}: type_used {rec.type_used} != expected {p_prev}")
        expected_case = ("Case0" if j == 1 else
                         "Case3" if p_prev != 0 else
                         "Case1" if prev_state == "InU" else "Case2")
        if rec.case != expected_case:
            problems.append(f"level {j}: case {rec.case} != {expected_case}")

        addr_prefix = list(cert.address[: j - 1])
        state = _transport_level(ifs, addr_prefix, shrink, shrink)
        grid_j = state.typed_grids[p_prev]
        try:
            center = center_at(grid_j, rec.ball_index)
        except Exception:
            problems.append(f"level {j}: ball index {rec.ball_index} invalid")
            break
        dist, _ = line.distance_to(center, t0=rec.witness_t)
        if dist > grid_j.ball_radius / 2 + 1e-9 * grid_j.ball_radius:
            problems.append(f"level {j}: recorded ball not hit "
                            f"(distance {dist:.3e} vs half radius "
                            f"{grid_j.ball_radius / 2:.3e})")
        if _branch_for_ball(ifs, p_prev, rec.ball_index) != rec.branch:
            problems.append(f"level {j}: branch {rec.branch} does not own "
                            f"ball {rec.ball_index}")

        branches = [ifs.branches[i] for i in cert.address[:j]]
        D = composition_differential(branches, ifs.grid.o)
        M = np.linalg.matrix_power(A.conj().T, j) @ (a ** j * D)
        cls = system.classify_drift(M, cert.x, snap=False)
        if cls.state != rec.classification:
            problems.append(f"level {j}: classification {rec.classification} "
                            f"!= recomputed {cls.state}")
        if cls.state != "InU" and cls.p != rec.class_p:
            problems.append(f"level {j}: center index {rec.class_p} "
                            f"!= recomputed {cls.p}")
        if rec.case == "Case2" and cls.state != "InU":
            p_expect = system.correction_target(A, cls.p)
        else:
            p_expect = 0
        if rec.type_next != p_expect:
            problems.append(f"level {j}: type_next {rec.type_next} "
                            f"!= expected {p_expect}")
        shrink += 2 * abs(a) * (R * state.depth_scale) * max_c2
        p_prev = rec.type_next
        prev_state = rec.classification

    lp = limit_point(ifs, cert.address)
    if (lp - cert.limit_point).norm() > 1e-9 * max(1.0, R):
        problems.append("limit point does not match the address")
    fdist, _ = line.distance_to(lp)
    if fdist > cert.final_tolerance * (1 + 1e-9):
        problems.append(f"final distance {fdist:.3e} exceeds the tolerance "
                        f"{cert.final_tolerance:.3e}")
    return {"valid": not problems and cert.passed, "problems": problems,
            "final_distance": fdist}
