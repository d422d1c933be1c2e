"""Lossless JSON serialization and canonical hashing.

Every serializable object maps to a tagged JSON dict (``"kind"`` field) with
floats emitted via Python's shortest round-trip repr, complex numbers as
[re, im] pairs, and 2x2 complex matrices as nested pairs.  The canonical
body (sorted keys, no whitespace) is stable across runs for identical
inputs, and ``instance_hash`` is the SHA-256 of that body.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .certifier import IntersectionCertificate, LevelRecord
from .correction import CorrectionSystem
from .geometry import Ball, GridOfBalls, PointC2, QuadrupleBasis, QuasiLine
from .ifs import CorrectingIFS, QuasiLinearMap
from .matrices import FiniteMatrixGroup
from .pigeonhole import PigeonDirection
from .polynomials import CurvePoly, Poly2C
from .synth import SynthInstance


class SerializationError(ValueError):
    pass


def _c(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _uc(v) -> complex:
    return complex(v[0], v[1])


def _m(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    return [[_c(M[i, j]) for j in range(M.shape[1])] for i in range(M.shape[0])]


def _um(v) -> np.ndarray:
    return np.array([[_uc(e) for e in row] for row in v], dtype=complex)


def to_jsonable(obj):
    """Tagged JSON-compatible representation of a supported object."""
    if isinstance(obj, PointC2):
        return {"kind": "point", "v": [obj.re1, obj.im1, obj.re2, obj.im2]}
    if isinstance(obj, CurvePoly):
        return {"kind": "curvepoly", "coeffs": [[_c(a), _c(b)] for a, b in obj.coeffs]}
    if isinstance(obj, Poly2C):
        return {"kind": "poly2c",
                "terms": [[[i, j], [_c(c1), _c(c2)]]
                          for (i, j), (c1, c2) in obj.terms]}
    if isinstance(obj, QuadrupleBasis):
        return {"kind": "basis", "vectors": [to_jsonable(v) for v in obj.vectors()]}
    if isinstance(obj, Ball):
        return {"kind": "ball", "center": to_jsonable(obj.center),
                "radius": obj.radius}
    if isinstance(obj, GridOfBalls):
        return {"kind": "grid", "u": to_jsonable(obj.u), "o": to_jsonable(obj.o),
                "N": obj.N, "r": obj.r}
    if isinstance(obj, QuasiLine):
        return {"kind": "quasiline", "base": to_jsonable(obj.base),
                "w": to_jsonable(obj.w), "disk_radius": obj.disk_radius,
                "graph": to_jsonable(obj.graph), "slope_bound": obj.slope_bound}
    if isinstance(obj, FiniteMatrixGroup):
        return {"kind": "group", "elements": [_m(e) for e in obj.elements]}
    if isinstance(obj, CorrectionSystem):
        return {"kind": "correction", "r_sphere": obj.r_sphere,
                "group": to_jsonable(obj.group), "mode": obj.mode,
                "centers": [_m(c) for c in obj.centers]}
    if isinstance(obj, QuasiLinearMap):
        return {"kind": "branch", "a": _c(obj.a), "A": _m(obj.A),
                "H": _m(obj.H), "t": to_jsonable(obj.t),
                "residual": to_jsonable(obj.residual)}
    if isinstance(obj, CorrectingIFS):
        return {"kind": "ifs",
                "branches": [to_jsonable(f) for f in obj.branches],
                "domain": to_jsonable(obj.domain),
                "grid": to_jsonable(obj.grid),
                "branch_ball_index": [list(i) for i in obj.branch_ball_index],
                "typed_balls": [to_jsonable(b) for b in obj.typed_balls],
                "typed_grids": [to_jsonable(g) for g in obj.typed_grids],
                "typed_branches": [list(t) for t in obj.typed_branches],
                "nu": obj.nu, "x": obj.x, "theta": obj.theta}
    if isinstance(obj, PigeonDirection):
        return {"kind": "direction", "w": to_jsonable(obj.w),
                "alphas": list(obj.alphas), "beta": obj.beta, "m": obj.m,
                "N_min": obj.N_min,
                "w_coords": [[c.numerator, c.denominator] for c in obj.w_coords],
                "basis": to_jsonable(obj.basis), "strict": obj.strict}
    if isinstance(obj, LevelRecord):
        return {"kind": "record", "level": obj.level, "case": obj.case,
                "branch": obj.branch, "type_used": obj.type_used,
                "type_next": obj.type_next, "ball_index": list(obj.ball_index),
                "witness_t": _c(obj.witness_t), "hit_distance": obj.hit_distance,
                "ball_radius": obj.ball_radius,
                "classification": obj.classification, "class_p": obj.class_p,
                "class_margin": obj.class_margin, "grid_r": obj.grid_r,
                "typed_grid_r": obj.typed_grid_r}
    if isinstance(obj, IntersectionCertificate):
        return {"kind": "certificate", "instance_hash": obj.instance_hash,
                "x": obj.x, "depth": obj.depth,
                "records": [to_jsonable(r) for r in obj.records],
                "address": list(obj.address),
                "limit_point": to_jsonable(obj.limit_point),
                "final_distance": obj.final_distance,
                "final_tolerance": obj.final_tolerance,
                "passed": obj.passed, "failure": obj.failure}
    if isinstance(obj, SynthInstance):
        return {"kind": "instance", "ifs": to_jsonable(obj.ifs),
                "system": to_jsonable(obj.system),
                "line": to_jsonable(obj.line), "depth": obj.depth,
                "seed": obj.seed, "exit_level": obj.exit_level,
                "corrector_level": obj.corrector_level,
                "corrector_branch": obj.corrector_branch,
                "central_branch": obj.central_branch,
                "params": {k: v for k, v in sorted(obj.params.items())}}
    raise SerializationError(f"cannot serialize {type(obj).__name__}")


def from_jsonable(d):
    """Inverse of :func:`to_jsonable`."""
    kind = d.get("kind")
    if kind == "point":
        return PointC2(*d["v"])
    if kind == "curvepoly":
        return CurvePoly(tuple((_uc(a), _uc(b)) for a, b in d["coeffs"]))
    if kind == "poly2c":
        return Poly2C(tuple(((i, j), (_uc(c1), _uc(c2)))
                            for (i, j), (c1, c2) in d["terms"]))
    if kind == "basis":
        return QuadrupleBasis(*(from_jsonable(v) for v in d["vectors"]))
    if kind == "ball":
        return Ball(from_jsonable(d["center"]), d["radius"])
    if kind == "grid":
        return GridOfBalls(u=from_jsonable(d["u"]), o=from_jsonable(d["o"]),
                           N=d["N"], r=d["r"])
    if kind == "quasiline":
        return QuasiLine(base=from_jsonable(d["base"]), w=from_jsonable(d["w"]),
                         disk_radius=d["disk_radius"],
                         graph=from_jsonable(d["graph"]),
                         slope_bound=d["slope_bound"])
    if kind == "group":
        return FiniteMatrixGroup(tuple(_um(e) for e in d["elements"]))
    if kind == "correction":
        sys_ = CorrectionSystem(r_sphere=d["r_sphere"],
                                group=from_jsonable(d["group"]),
                                mode=d["mode"],
                                centers=[_um(c) for c in d["centers"]])
        sys_._rebuild_perm()
        return sys_
    if kind == "branch":
        return QuasiLinearMap(a=_uc(d["a"]), A=_um(d["A"]), H=_um(d["H"]),
                              t=from_jsonable(d["t"]),
                              residual=from_jsonable(d["residual"]))
    if kind == "ifs":
        return CorrectingIFS(
            branches=tuple(from_jsonable(f) for f in d["branches"]),
            domain=from_jsonable(d["domain"]), grid=from_jsonable(d["grid"]),
            branch_ball_index=tuple(tuple(i) for i in d["branch_ball_index"]),
            typed_balls=tuple(from_jsonable(b) for b in d["typed_balls"]),
            typed_grids=tuple(from_jsonable(g) for g in d["typed_grids"]),
            typed_branches=tuple(tuple(t) for t in d["typed_branches"]),
            nu=d["nu"], x=d["x"], theta=d["theta"])
    if kind == "direction":
        return PigeonDirection(
            w=from_jsonable(d["w"]), alphas=tuple(d["alphas"]),
            beta=d["beta"], m=d["m"], N_min=d["N_min"],
            w_coords=tuple(Fraction(n, dd) for n, dd in d["w_coords"]),
            basis=from_jsonable(d["basis"]), strict=d["strict"])
    if kind == "record":
        return LevelRecord(
            level=d["level"], case=d["case"], branch=d["branch"],
            type_used=d["type_used"], type_next=d["type_next"],
            ball_index=tuple(d["ball_index"]), witness_t=_uc(d["witness_t"]),
            hit_distance=d["hit_distance"], ball_radius=d["ball_radius"],
            classification=d["classification"], class_p=d["class_p"],
            class_margin=d["class_margin"], grid_r=d["grid_r"],
            typed_grid_r=d["typed_grid_r"])
    if kind == "certificate":
        return IntersectionCertificate(
            instance_hash=d["instance_hash"], x=d["x"], depth=d["depth"],
            records=tuple(from_jsonable(r) for r in d["records"]),
            address=tuple(d["address"]),
            limit_point=from_jsonable(d["limit_point"]),
            final_distance=d["final_distance"],
            final_tolerance=d["final_tolerance"], passed=d["passed"],
            failure=d["failure"])
    if kind == "instance":
        return SynthInstance(
            ifs=from_jsonable(d["ifs"]), system=from_jsonable(d["system"]),
            line=from_jsonable(d["line"]), depth=d["depth"], seed=d["seed"],
            exit_level=d["exit_level"], corrector_level=d["corrector_level"],
            corrector_branch=d["corrector_branch"],
            central_branch=d["central_branch"], params=dict(d["params"]))
    raise SerializationError(f"cannot deserialize kind {kind!r}")


def dumps_canonical(obj) -> str:
    """Canonical JSON body: sorted keys, no whitespace, round-trip floats."""
    return json.dumps(to_jsonable(obj), sort_keys=True,
                      separators=(",", ":"), allow_nan=False)


def instance_hash(obj) -> str:
    return hashlib.sha256(dumps_canonical(obj).encode("utf-8")).hexdigest()


def save(obj, path) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), sort_keys=True,
                                     indent=1) + "\n")


def load(path):
    return from_jsonable(json.loads(Path(path).read_text()))
