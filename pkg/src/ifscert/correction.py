"""Linear drift correction: sphere coverings, scaled sets and classification.

A CorrectionSystem holds covering centers X_1..X_n on the sphere of radius
r_sphere in Mat_2(C) (operator-norm metric), closed under conjugation by a
finite unitary group, together with corrector balls V^0..V^n centered at
0, -X_1, ..., -X_n.  For a scale x in (0,1] the derived sets are

    U_x          = B(I, 9 x r_sphere / 10)
    (U'_x)^p     = B(I + x X_p, x r_sphere / 20)
    (U''_x)^p    = B(I + x X_p, x r_sphere / 10)
    x V^0        = B(0, x r_sphere / 40)
    x V^p        = B(-x X_p, x r_sphere / 40)

Covering centers can be built eagerly as a full net of a low-dimensional
subspace sphere, or grown lazily by snapping realized drift directions onto
the sphere.  Lazy growth is serialized behind a single writer; all queries
are pure.

The literal one-step property "a drift step from U_x lands in U'_x" is
geometrically unsatisfiable with these radii (a step of size r_sphere/40
exits U_x into norms below the 19/20 shell).  The sound invariant, used by
the certifier and checked here, is that one drift step from U_x lands in
U_x or in the U''_x family; the literal variant is still evaluated and
reported for reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matrices import I2, FiniteMatrixGroup, op_norm

#: default smallness threshold for the sphere radius (empirically fitted)
DEFAULT_R_SPHERE = 0.05
#: candidate grid for the r0 fit
R0_CANDIDATES = (0.2, 0.1, 0.05, 0.02, 0.01)
#: corrector ball radius, relative to r_sphere (V^0 and all V^p)
V_RADIUS_REL = 1.0 / 40.0

U_RADIUS_REL = 9.0 / 10.0
UPRIME_RADIUS_REL = 1.0 / 20.0
UDOUBLE_RADIUS_REL = 1.0 / 10.0


class CoveringError(ValueError):
    """Covering construction failed (group closure, subspace size, ...)."""


@dataclass(frozen=True)
class Classification:
    """Result of classifying a normalized drift matrix."""

    state: str  # "InU" | "InUPrime" | "InUDoublePrime" | "Outside"
    p: int = 0  # covering-center index (1-based) for the primed states
    margin: float = 0.0  # distance to the boundary of the matched set
    drift_norm: float = 0.0  # ||M - I||, diagnostic for Outside

    def in_double_family(self) -> bool:
        return self.state in ("InUPrime", "InUDoublePrime")


def _unit_sphere_net(dim: int, cap: float) -> np.ndarray:
    """Deterministic net of the unit sphere of R^dim with covering radius
    at most ``cap`` (Euclidean metric).  dim <= 4."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        k = math.ceil(math.pi / math.asin(cap))
        ang = 2 * math.pi * np.arange(k) / k
        return np.column_stack([np.cos(ang), np.sin(ang)])
    step = cap * 0.9
    pts = []
    if dim == 3:
        n_th = max(2, math.ceil(math.pi / step))
        for i in range(n_th + 1):
            th = math.pi * i / n_th
            ring = max(1, math.ceil(2 * math.pi * math.sin(th) / step))
            for j in range(ring):
                ph = 2 * math.pi * j / ring
                pts.append([math.cos(th),
                            math.sin(th) * math.cos(ph),
                            math.sin(th) * math.sin(ph)])
    elif dim == 4:
        n_ps = max(2, math.ceil(math.pi / step))
        for i in range(n_ps + 1):
            ps = math.pi * i / n_ps
            n_th = max(1, math.ceil(math.pi * math.sin(ps) / step))
            for j in range(n_th + 1):
                th = math.pi * j / n_th if n_th else 0.0
                ring = max(1, math.ceil(2 * math.pi * math.sin(ps) * math.sin(th) / step))
                for k in range(ring):
                    ph = 2 * math.pi * k / ring
                    pts.append([math.cos(ps),
                                math.sin(ps) * math.cos(th),
                                math.sin(ps) * math.sin(th) * math.cos(ph),
                                math.sin(ps) * math.sin(th) * math.sin(ph)])
    else:
        raise CoveringError(f"subspace dimension {dim} > 4")
    arr = np.array(pts)
    # dedup points that coincide at the poles
    _, keep = np.unique(np.round(arr / (0.25 * cap)).astype(np.int64),
                        axis=0, return_index=True)
    return arr[np.sort(keep)]


def _op_norms(Ms: np.ndarray) -> np.ndarray:
    """Operator norms of a batch of 2x2 complex matrices, shape (..., 2, 2).

    Closed form from the eigenvalues of M*M; avoids per-matrix SVD calls in
    sampling loops.
    """
    m00 = Ms[..., 0, 0]
    m01 = Ms[..., 0, 1]
    m10 = Ms[..., 1, 0]
    m11 = Ms[..., 1, 1]
    sq = np.abs(Ms) ** 2
    h11 = sq[..., 0, 0] + sq[..., 1, 0]
    h22 = sq[..., 0, 1] + sq[..., 1, 1]
    h12 = np.conj(m00) * m01 + np.conj(m10) * m11
    mean = 0.5 * (h11 + h22)
    disc = np.hypot(0.5 * (h11 - h22), np.abs(h12))
    return np.sqrt(np.maximum(mean + disc, 0.0))


def _mat_to_vec(M: np.ndarray) -> np.ndarray:
    return np.concatenate([M.real.ravel(), M.imag.ravel()])


def _vec_to_mat(v: np.ndarray) -> np.ndarray:
    return (v[:4] + 1j * v[4:]).reshape(2, 2)


@dataclass
class CorrectionSystem:
    """Covering centers, group permutations and corrector-ball geometry.

    Immutable after build in subspace mode; in lazy mode :meth:`ensure_center`
    may append centers (single-writer contract).
    """

    r_sphere: float
    group: FiniteMatrixGroup
    mode: str = "lazy"
    centers: list[np.ndarray] = field(default_factory=list)
    perm: list[list[int]] = field(default_factory=list)  # [u_idx][p-1] -> p'

    def __post_init__(self):
        if not 0 < self.r_sphere:
            raise ValueError("r_sphere must be positive")
        if self.mode not in ("lazy", "subspace"):
            raise ValueError(f"unknown covering mode {self.mode!r}")

    # -- center bookkeeping -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.centers)

    def center(self, p: int) -> np.ndarray:
        """Covering center X_p, 1-based index."""
        return self.centers[p - 1]

    def _center_stack(self) -> np.ndarray | None:
        """Centers stacked as an (n, 2, 2) array, cached until n changes."""
        stack = getattr(self, "_stack_cache", None)
        if self.n == 0:
            return None
        if stack is None or stack.shape[0] != self.n:
            stack = np.stack(self.centers)
            self._stack_cache = stack
        return stack

    def center_distances(self, delta: np.ndarray, x: float) -> np.ndarray:
        """Operator-norm distances ||delta - x X_p|| for all p, 1-based order."""
        C = self._center_stack()
        if C is None:
            return np.empty(0)
        return _op_norms(delta[None, :, :] - x * C)

    def _find(self, X: np.ndarray, tol: float) -> int:
        C = self._center_stack()
        if C is None:
            return 0
        d = _op_norms(C - X[None, :, :])
        i = int(np.argmin(d))
        return i + 1 if d[i] <= tol else 0

    def _insert_with_conjugates(self, X: np.ndarray) -> int:
        """Insert X and its group conjugates U^-1 X U; returns X's index."""
        tol = 1e-10 * self.r_sphere
        idx = self._find(X, tol)
        if idx == 0:
            self.centers.append(X)
            idx = len(self.centers)
        queue = [X]
        while queue:
            Y = queue.pop()
            for U in self.group.elements:
                Z = U.conj().T @ Y @ U
                Z = Z * (self.r_sphere / op_norm(Z))
                if self._find(Z, tol) == 0:
                    self.centers.append(Z)
                    queue.append(Z)
        self._extend_perm()
        return idx

    def _rebuild_perm(self):
        if self.n == 0:
            self.perm = [[] for _ in self.group.elements]
            return
        # pairwise matching in the Frobenius metric (matches are exact
        # duplicates up to 1e-10 r_sphere, so the metric choice is free)
        tol_f = math.sqrt(2.0) * 1e-10 * self.r_sphere
        C = self._center_stack()
        V = C.reshape(self.n, 4)
        perm = []
        for U in self.group.elements:
            Z = (U.conj().T @ C @ U).reshape(self.n, 4)
            d2 = (np.abs(Z[:, None, :] - V[None, :, :]) ** 2).sum(axis=2)
            q = np.argmin(d2, axis=1)
            if np.any(d2[np.arange(self.n), q] > tol_f * tol_f):
                raise CoveringError("covering not closed under the group")
            perm.append([int(v) + 1 for v in q])
        self.perm = perm

    def _extend_perm(self):
        """Incrementally extend the permutation table with the centers
        appended since the last (re)build; old entries never change."""
        if len(self.perm) != len(self.group.elements):
            self._rebuild_perm()
            return
        old = len(self.perm[0]) if self.perm else 0
        if old == self.n:
            return
        tol = 1e-10 * self.r_sphere
        for row, U in zip(self.perm, self.group.elements):
            for X in self.centers[old:]:
                q = self._find(U.conj().T @ X @ U, tol)
                if q == 0:
                    raise CoveringError("covering not closed under the group")
                row.append(q)

    def ensure_center(self, direction: np.ndarray) -> int:
        """Lazy guarantee: return a center within r_sphere/20 of the snapped
        direction, inserting (with group closure) if none exists."""
        X = direction * (self.r_sphere / op_norm(direction))
        idx = self._find(X, self.r_sphere / 20.0)
        if idx:
            return idx
        if self.mode != "lazy":
            return 0
        return self._insert_with_conjugates(X)

    def correction_target(self, U: np.ndarray, p: int) -> int:
        """Index p' with (U'_1)^p . U = U . (U'_1)^{p'} (same permutation
        serves the double-primed family, which shares the centers)."""
        if not 1 <= p <= self.n:
            raise IndexError(f"covering index {p} out of range")
        u_idx = self.group.index_of(U)
        return self.perm[u_idx][p - 1]

    # -- derived set geometry -----------------------------------------------

    def u_radius(self, x: float) -> float:
        return U_RADIUS_REL * x * self.r_sphere

    def uprime_radius(self, x: float) -> float:
        return UPRIME_RADIUS_REL * x * self.r_sphere

    def udouble_radius(self, x: float) -> float:
        return UDOUBLE_RADIUS_REL * x * self.r_sphere

    def v_radius(self, x: float) -> float:
        return V_RADIUS_REL * x * self.r_sphere

    def primed_center(self, p: int, x: float) -> np.ndarray:
        return I2 + x * self.center(p)

    def v_center(self, p: int, x: float) -> np.ndarray:
        """Center of x . V^p (0 for p = 0, -x X_p otherwise)."""
        if p == 0:
            return np.zeros((2, 2), dtype=complex)
        return -x * self.center(p)

    def in_v_ball(self, h: np.ndarray, p: int, x: float,
                  slack: float = 0.0) -> bool:
        return op_norm(h - self.v_center(p, x)) <= (
            self.v_radius(x) * (1 + 1e-12) + slack)

    # -- classification -----------------------------------------------------

    def classify_drift(self, M: np.ndarray, x: float,
                       snap: bool = True) -> Classification:
        """Classify a normalized drift matrix M against the scaled sets.

        Precedence InU > InUPrime > InUDoublePrime; strict membership with a
        1e-12 relative margin, boundary points classify Outside.  In lazy
        mode, a drift in the sphere shell with no nearby center inserts one.
        """
        delta = M - I2
        d0 = op_norm(delta)
        tol = 1e-12 * x * self.r_sphere
        if d0 < self.u_radius(x) - tol:
            return Classification("InU", 0, self.u_radius(x) - d0, d0)
        best_p, best_d = 0, math.inf
        if self.n:
            dists = self.center_distances(delta, x)
            best_p = int(np.argmin(dists)) + 1
            best_d = float(dists[best_p - 1])
        if best_d < self.uprime_radius(x) - tol:
            return Classification("InUPrime", best_p,
                                  self.uprime_radius(x) - best_d, d0)
        if best_d < self.udouble_radius(x) - tol:
            return Classification("InUDoublePrime", best_p,
                                  self.udouble_radius(x) - best_d, d0)
        if snap and self.mode == "lazy" and d0 < 1.1 * x * self.r_sphere:
            p = self.ensure_center(delta)
            if p:
                d = op_norm(delta - x * self.center(p))
                if d < self.uprime_radius(x) - tol:
                    return Classification("InUPrime", p,
                                          self.uprime_radius(x) - d, d0)
                if d < self.udouble_radius(x) - tol:
                    return Classification("InUDoublePrime", p,
                                          self.udouble_radius(x) - d, d0)
        return Classification("Outside", best_p, best_d, d0)


def classify(system: CorrectionSystem, x: float, D: np.ndarray, j: int,
             A: np.ndarray) -> Classification:
    """Classify the drift of a j-fold composed (contraction-removed)
    differential D: normalize as M = A^-j . D and classify M."""
    if not system.group.contains(A):
        raise ValueError("A must belong to the covering's group")
    Ainv = np.asarray(A, dtype=complex).conj().T  # unitary inverse
    M = np.linalg.matrix_power(Ainv, j) @ D
    return system.classify_drift(M, x)


def correction_target(system: CorrectionSystem, U: np.ndarray, p: int) -> int:
    return system.correction_target(U, p)


def build_covering(r_sphere: float, group: FiniteMatrixGroup,
                   mode: str = "lazy",
                   subspace: list[np.ndarray] | None = None) -> CorrectionSystem:
    """Build a correction system.

    lazy      -- start with no centers; they are grown on demand by snapping
                 realized drift directions onto the sphere.
    subspace  -- full eps-net of the sphere of a real subspace of Mat_2(C)
                 spanned by the given matrices (at most 4 real dimensions).
    """
    system = CorrectionSystem(r_sphere=r_sphere, group=group, mode=mode)
    if mode == "lazy":
        system._rebuild_perm()
        return system
    if not subspace:
        raise CoveringError("subspace mode requires spanning matrices")
    vecs = [_mat_to_vec(np.asarray(M, dtype=complex)) for M in subspace]
    basis = []
    for v in vecs:
        for b in basis:
            v = v - (v @ b) * b
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            basis.append(v / nv)
    dim = len(basis)
    if dim > 4:
        raise CoveringError(f"subspace dimension {dim} > 4")
    # Frobenius-metric net with slack: the operator norm is within a factor
    # sqrt(2) of the Frobenius norm, so aim below cap/sqrt(2).
    cap = UPRIME_RADIUS_REL / math.sqrt(2.0) * 0.95
    net = _unit_sphere_net(dim, cap)
    B = np.array(basis)
    for row in net:
        M = _vec_to_mat(row @ B)
        system.centers.append(M * (r_sphere / op_norm(M)))
    # close under the group action
    tol = 1e-10 * r_sphere
    queue = list(system.centers)
    while queue:
        Y = queue.pop()
        for U in group.elements:
            Z = U.conj().T @ Y @ U
            Z = Z * (r_sphere / op_norm(Z))
            if system._find(Z, tol) == 0:
                system.centers.append(Z)
                queue.append(Z)
    system._rebuild_perm()
    return system


def check_properties(system: CorrectionSystem, x: float, samples: int,
                     seed: int = 0) -> dict:
    """Randomized verification of the drift/correction membership chains.

    Chain A (amended one-step): M in U_x, M0 in x V^0, U in the group --
    U^j M U (I+M0) lands in U^{j+1}.(U_x or the U''_x family).
    Chain B: M in (U'_x)^p steps into (U''_x)^{p'} with p' the permuted index.
    Chain C: a further correcting step with M_{p'} in x V^{p'} returns to U_x.
    The literal statement "chain A lands in U'_x" is counted separately as a
    diagnostic, not a violation.
    """
    rng = np.random.default_rng(seed)
    rs = system.r_sphere

    def rand_ball(radius: float) -> np.ndarray:
        G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        return G * (radius * rng.uniform() ** 0.125 / op_norm(G))

    if system.n == 0 and system.mode == "lazy":
        for _ in range(4):
            system.ensure_center(rand_ball(1.0))

    viol_a = viol_b = viol_c = literal_i_fail = 0
    worst_margin = math.inf
    n_u = len(system.group)
    for _ in range(samples):
        U = system.group.elements[rng.integers(n_u)]
        Uinv = U.conj().T
        # chain A
        M = I2 + rand_ball(system.u_radius(x))
        M0 = rand_ball(system.v_radius(x))
        Mp = (Uinv @ M @ U) @ (I2 + M0)
        cls = system.classify_drift(Mp, x)
        if cls.state == "Outside":
            viol_a += 1
        else:
            worst_margin = min(worst_margin, cls.margin)
        dists = system.center_distances(Mp - I2, x)
        dprime = float(dists.min()) if dists.size else math.inf
        if dprime > system.uprime_radius(x):
            literal_i_fail += 1
        # chain B
        p = int(rng.integers(1, system.n + 1))
        M = system.primed_center(p, x) + rand_ball(system.uprime_radius(x))
        M0 = rand_ball(system.v_radius(x))
        W = (Uinv @ M @ U) @ (I2 + M0)
        p1 = system.correction_target(U, p)
        d = op_norm(W - system.primed_center(p1, x))
        if d > system.udouble_radius(x):
            viol_b += 1
        else:
            worst_margin = min(worst_margin, system.udouble_radius(x) - d)
        # chain C
        U2 = system.group.elements[rng.integers(n_u)]
        p2 = system.correction_target(U2, p1)
        Mcorr = system.v_center(p2, x) + rand_ball(system.v_radius(x))
        W2 = (U2.conj().T @ W @ U2) @ (I2 + Mcorr)
        d2 = op_norm(W2 - I2)
        if d2 > system.u_radius(x):
            viol_c += 1
        else:
            worst_margin = min(worst_margin, system.u_radius(x) - d2)

    return {
        "samples": samples,
        "x": x,
        "r_sphere": rs,
        "violations_chain_a": viol_a,
        "violations_chain_b": viol_b,
        "violations_chain_c": viol_c,
        "violations": viol_a + viol_b + viol_c,
        "literal_property_i_failures": literal_i_fail,
        "worst_margin": worst_margin if worst_margin < math.inf else None,
        "n_centers": system.n,
    }


def check_return_lemma(system: CorrectionSystem, samples: int,
                       seed: int = 0) -> dict:
    """Sampled check of Y in (U''_1)^p  =>  ||Y (I - X_p) - I|| < r_sphere/2."""
    rng = np.random.default_rng(seed)
    rs = system.r_sphere
    if system.n == 0 and system.mode == "lazy":
        G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        system.ensure_center(G)
    ps = rng.integers(1, system.n + 1, size=samples)
    G = (rng.standard_normal((samples, 2, 2))
         + 1j * rng.standard_normal((samples, 2, 2)))
    scale = (system.udouble_radius(1.0) * rng.uniform(size=samples) ** 0.125
             / _op_norms(G))
    delta = G * scale[:, None, None]
    C = system._center_stack()[ps - 1]
    Y = I2[None] + C + delta
    d = _op_norms(Y @ (I2[None] - C) - I2[None])
    viol = int(np.count_nonzero(d >= rs / 2))
    worst = float(np.min(rs / 2 - d))
    return {"samples": samples, "violations": viol, "worst_margin": worst}


def fit_r0(group: FiniteMatrixGroup, samples: int = 100_000,
           seed: int = 0) -> float:
    """Largest candidate sphere radius with zero return-lemma violations."""
    for rs in R0_CANDIDATES:
        system = build_covering(rs, group, mode="lazy")
        rep = check_return_lemma(system, samples, seed)
        if rep["violations"] == 0:
            return rs
    return R0_CANDIDATES[-1]


def fit_x_of_u(system: CorrectionSystem, basis_ray: np.ndarray,
               neighborhood_radius: float, samples: int = 200,
               seed: int = 0) -> float:
    """Largest tested x such that every sampled M in U''_x moves the basis
    ray by less than the neighborhood radius (bisection, monotone in the
    radius)."""
    if neighborhood_radius <= 0:
        raise ValueError("neighborhood radius must be positive")
    from .geometry import QuadrupleBasis, PointC2, ray_distance

    rng = np.random.default_rng(seed)
    if system.n == 0 and system.mode == "lazy":
        for _ in range(4):
            G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            system.ensure_center(G)
    ray = np.asarray(basis_ray, dtype=float)
    ray = ray / np.linalg.norm(ray)
    us = [PointC2.from_array(ray[4 * i: 4 * i + 4]) for i in range(4)]
    basis = QuadrupleBasis(*us)

    def ok(x: float) -> bool:
        for _ in range(samples):
            p = int(rng.integers(1, system.n + 1))
            G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            delta = G * (system.udouble_radius(x) * rng.uniform() ** 0.125 / op_norm(G))
            M = system.primed_center(p, x) + delta
            if ray_distance(basis.transformed(M).ray(), basis.ray()) >= neighborhood_radius:
                return False
        return True

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
