"""Synthetic correcting-system instances with a known routing script.

The generator builds a homothety family on the unit ball of C^2: 81 branches
(1/a)((A + H_j) z + a c_j) indexed by the lattice sites c_j of a 3x3x3x3
grid, with a = 3.  The central branch carries a small diagonal drift that
accumulates under composition and forces one full correction cycle (the
drift leaves the inner set after ~0.9/kappa levels, is reclassified in the
primed family, and is cancelled by a corrector branch of the matching type
placed on an axis site).  Because every branch fixes its own site exactly
and the scripted address ends in central branches, the limit point, the
corrector-level ball center and the origin are exactly collinear, so the
straight line through the origin and the limit point hits every level of
the routing loop dead center.

All scripted quantities (exit level, corrector level, expected case labels)
are returned with the instance so tests can assert against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .correction import CorrectionSystem, build_covering
from .geometry import (Ball, GridOfBalls, PointC2, QuadrupleBasis, QuasiLine,
                       ZERO)
from .ifs import CorrectingIFS, QuasiLinearMap
from .matrices import I2, FiniteMatrixGroup, mat, op_norm
from .polynomials import CurvePoly, Poly2C


@dataclass(frozen=True)
class SynthInstance:
    ifs: CorrectingIFS
    system: CorrectionSystem
    line: QuasiLine
    depth: int
    seed: int
    exit_level: int        # first level whose drift leaves the inner set
    corrector_level: int   # level at which the corrector branch is used
    corrector_branch: int
    central_branch: int
    params: dict = field(default_factory=dict)


def _lattice_sites(n_G: int):
    rng_idx = range(-n_G, n_G + 1)
    return [idx for idx in product(rng_idx, rng_idx, rng_idx, rng_idx)]


def inject_drift_and_residual(branches: list[QuasiLinearMap], which: int,
                              H: np.ndarray,
                              residual: Poly2C = None) -> list[QuasiLinearMap]:
    """Replace one branch's drift (and optionally residual), keeping the
    rest of the family untouched."""
    f = branches[which]
    out = list(branches)
    out[which] = QuasiLinearMap(a=f.a, A=f.A, H=H, t=f.t,
                                residual=residual if residual is not None
                                else f.residual)
    return out


def make_homothety_ifs(a: float = 3.0, n_G: int = 1, delta: float = 1.0 / 3.0,
                       A: np.ndarray = None) -> list[QuasiLinearMap]:
    """Zero-drift branch family: site c_j maps to (1/a)(A z) + c_j."""
    A = I2 if A is None else np.asarray(A, dtype=complex)
    branches = []
    for idx in _lattice_sites(n_G):
        c = PointC2(delta * idx[0], delta * idx[1], delta * idx[2], delta * idx[3])
        branches.append(QuasiLinearMap(a=a, A=A, t=c.scale(float(a))))
    return branches


def make_quasi_line(base: PointC2, direction: PointC2, disk_radius: float,
                    graph: CurvePoly = None) -> QuasiLine:
    g = graph if graph is not None else CurvePoly(())
    w = direction.scale(1.0 / direction.norm())
    slope = g.derivative_sup_bound(disk_radius)
    return QuasiLine(base=base, w=w, disk_radius=disk_radius, graph=g,
                     slope_bound=slope)


def make_instance(seed: int = 0, depth: int = 45, x: float = 0.5,
                  r_sphere: float = 0.05, nu: float = 0.43,
                  r1: float = 0.9, s1: float = 0.40,
                  group: FiniteMatrixGroup = None,
                  drift_divisor: float = 41.0) -> SynthInstance:
    """Build a certified-by-construction instance with one correction cycle.

    The drift per central step is kappa = x r_sphere / drift_divisor along
    diag(1, 0); the exit level E satisfies (1+kappa)^E - 1 >= 0.9 x r_sphere
    and the corrector branch is scripted for level E + 2.  ``seed`` only
    randomizes the off-script branches (drifts well inside the type-0
    corrector ball, plus one tiny admissible residual).
    """
    rng = np.random.default_rng(seed)
    if group is None:
        group = FiniteMatrixGroup.order2_diagonal()
    a, n_G, delta = 3.0, 1, 1.0 / 3.0
    R = 1.0

    X_hat = mat(1, 0, 0, 0)  # idempotent direction: drift stays on its ray
    kappa = x * r_sphere / drift_divisor
    H_central = kappa * X_hat
    H_corrector = -x * r_sphere * X_hat

    sites = _lattice_sites(n_G)
    central = sites.index((0, 0, 0, 0))
    corrector = sites.index((1, 0, 0, 0))

    branches = make_homothety_ifs(a=a, n_G=n_G, delta=delta)
    branches = inject_drift_and_residual(branches, central, H_central)
    branches = inject_drift_and_residual(branches, corrector, H_corrector)
    # off-script branches: small type-0 drifts, one with a tiny residual
    v0 = x * r_sphere / 40.0
    decoy = None
    for j in range(len(branches)):
        if j in (central, corrector):
            continue
        G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        H = G * (0.5 * v0 * rng.uniform(0.1, 1.0) / op_norm(G))
        branches = inject_drift_and_residual(branches, j, H)
        if decoy is None:
            hn = op_norm(H)
            c = hn / 1000.0 / 2.0 / 4.0  # 2|c| s^0 terms, stay well below
            res = Poly2C((((2, 0), (c, 0)),))
            branches = inject_drift_and_residual(branches, j, H, res)
            decoy = j

    basis = QuadrupleBasis.standard(delta)
    grid = GridOfBalls(u=basis, o=ZERO, N=n_G, r=r1)
    domain = Ball(ZERO, R)

    system = build_covering(r_sphere, group, mode="lazy")
    system.ensure_center(X_hat)
    n = system.n
    typed_balls = tuple(Ball(ZERO, nu * R) for _ in range(n + 1))
    typed_grids = tuple(GridOfBalls(u=basis, o=ZERO, N=n_G, r=s1)
                        for _ in range(n + 1))
    # type 0 is served by the central branch, the scripted corrector serves
    # the seeded center's type; other group-closure centers get no branch
    # (their grids are still covered by the whole family)
    typed_branch_lists: list[list[int]] = [[] for _ in range(n + 1)]
    p_script = _type_of_center(system, X_hat, x)
    typed_branch_lists[p_script] = [corrector]
    typed_branch_lists[0] = [central]

    ifs = CorrectingIFS(
        branches=tuple(branches), domain=domain, grid=grid,
        branch_ball_index=tuple(sites), typed_balls=typed_balls,
        typed_grids=typed_grids,
        typed_branches=tuple(tuple(t) for t in typed_branch_lists),
        nu=nu, x=x, theta=0.0)

    exit_level = _exit_level(kappa, 0.9 * x * r_sphere)
    corrector_level = exit_level + 2
    if depth <= corrector_level + 1:
        depth = corrector_level + 3

    # scripted address: central until the corrector level, then central again
    address = [central] * (corrector_level - 1) + [corrector] + \
              [central] * (depth - corrector_level)
    from .certifier import limit_point
    z_star = limit_point(ifs, address)
    disk = max(4.0, 4 * z_star.norm())
    line = make_quasi_line(ZERO, z_star, disk)

    return SynthInstance(
        ifs=ifs, system=system, line=line, depth=depth, seed=seed,
        exit_level=exit_level, corrector_level=corrector_level,
        corrector_branch=corrector, central_branch=central,
        params={"a": a, "n_G": n_G, "delta": delta, "x": x,
                "r_sphere": r_sphere, "nu": nu, "r1": r1, "s1": s1,
                "kappa": kappa, "drift_divisor": drift_divisor,
                "decoy_branch": decoy, "n_centers": n})


def _type_of_center(system: CorrectionSystem, X_hat: np.ndarray,
                    x: float) -> int:
    """Index p of the covering center on the X_hat ray."""
    target = X_hat * (system.r_sphere / op_norm(X_hat))
    for p in range(1, system.n + 1):
        if op_norm(system.center(p) - target) <= 1e-9 * system.r_sphere:
            return p
    raise RuntimeError("seeded center not found in the covering")


def _exit_level(kappa: float, threshold: float) -> int:
    """Smallest E with (1+kappa)^E - 1 >= threshold."""
    E = math.ceil(math.log1p(threshold) / math.log1p(kappa))
    while (1 + kappa) ** E - 1 < threshold:
        E += 1
    while E > 1 and (1 + kappa) ** (E - 1) - 1 >= threshold:
        E -= 1
    return E


def make_certified_instance(seed: int = 0, max_tries: int = 8,
                            **kwargs) -> tuple[SynthInstance, "IntersectionCertificate"]:
    """Instance plus a passing certificate; retries nearby seeds if the
    scripted routing is upset by the randomized off-script branches."""
    from .certifier import certify_intersection

    last_failure = ""
    for k in range(max_tries):
        inst = make_instance(seed=seed + k, **kwargs)
        cert = certify_intersection(inst.ifs, inst.system, inst.line,
                                    inst.depth)
        if cert.passed:
            return inst, cert
        last_failure = cert.failure
    raise RuntimeError(f"could not generate a certified instance: {last_failure}")
