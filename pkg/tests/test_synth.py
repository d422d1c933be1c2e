"""Synthetic instance generator: scripted drift cycle and typing."""

import math

import numpy as np
import pytest

from ifscert.ifs import compose_points
from ifscert.matrices import op_norm
from ifscert.synth import (_exit_level, make_homothety_ifs, make_instance,
                           make_certified_instance)

I2 = np.eye(2, dtype=complex)


def test_homothety_family_tiles_sites():
    branches = make_homothety_ifs(a=3.0, n_G=1, delta=1.0 / 3.0)
    assert len(branches) == 3 ** 4
    # each branch is z -> z/3 + c with c on the (1/3)-lattice
    from ifscert.geometry import ZERO, PointC2
    imgs = {tuple(np.round(f.apply(ZERO).as_array() * 3).astype(int))
            for f in branches}
    assert len(imgs) == 81
    f = branches[0]
    z = PointC2(0.3, -0.6, 0.9, 0.0)
    assert (f.apply(z) - f.apply(ZERO) - z.scale(1 / 3.0)).norm() < 1e-14


def test_exit_level_is_minimal():
    kappa, threshold = 0.05 * 0.5 / 41.0, 0.9 * 0.5 * 0.05
    E = _exit_level(kappa, threshold)
    assert (1 + kappa) ** E - 1 >= threshold
    assert (1 + kappa) ** (E - 1) - 1 < threshold


def test_instance_script_values():
    inst = make_instance(seed=0)
    # [DERIVED] with x = 0.5, r_sphere = 0.05, divisor 41: exit at level 37
    assert inst.exit_level == 37
    assert inst.corrector_level == 39
    assert inst.depth == 45
    assert inst.ifs.q == 81
    # address: corrector branch exactly once, at the scripted level
    cert_addr_free = [inst.central_branch] * (inst.corrector_level - 1)
    assert inst.corrector_branch != inst.central_branch
    # drift magnitudes as scripted
    x, rs = inst.params["x"], inst.params["r_sphere"]
    kappa = inst.params["kappa"]
    Hc = inst.ifs.branches[inst.central_branch].H
    assert op_norm(Hc) == pytest.approx(kappa)
    Hk = inst.ifs.branches[inst.corrector_branch].H
    assert op_norm(Hk) == pytest.approx(x * rs)
    assert op_norm(Hc / kappa + Hk / (x * rs)) == pytest.approx(0.0, abs=1e-14)


def test_scripted_drift_cycle_returns_to_core():
    """Composing the scripted address through the corrector brings the
    accumulated multiplicative drift back inside the core set."""
    inst = make_instance(seed=0)
    x = inst.params["x"]
    sys_ = inst.system
    drift = I2.copy()
    Hc = inst.ifs.branches[inst.central_branch].H
    Hk = inst.ifs.branches[inst.corrector_branch].H
    for lvl in range(1, inst.depth + 1):
        H = Hk if lvl == inst.corrector_level else Hc
        drift = drift @ (I2 + H)
        cls = sys_.classify_drift(drift, x, snap=False)
        if lvl < inst.exit_level:
            assert cls.state == "InU", f"level {lvl}: {cls.state}"
        if lvl >= inst.corrector_level:
            assert cls.state == "InU", f"level {lvl}: {cls.state}"


def test_typed_branch_lists():
    inst = make_instance(seed=3)
    ifs = inst.ifs
    assert ifs.typed_branches[0] == (inst.central_branch,)
    assert any(inst.corrector_branch in lst for lst in ifs.typed_branches[1:])
    assert ifs.n_types == inst.system.n
    # the typed-branch drifts actually lie in the matching corrector balls
    x = inst.params["x"]
    for p, lst in enumerate(ifs.typed_branches):
        for b in lst:
            assert p in ifs.branches[b].drift_type(inst.system, x)


def test_line_passes_through_limit_point():
    inst = make_instance(seed=1)
    dist, _ = inst.line.distance_to(
        compose_points([inst.ifs.branches[i] for i in
                        [inst.central_branch] * 5], inst.ifs.domain.center)[0])
    # the line runs through the origin toward the scripted limit point
    assert inst.line.base.norm() == 0.0
    assert inst.line.slope_bound == 0.0


def test_seeds_differ_off_script_only():
    a = make_instance(seed=0)
    b = make_instance(seed=1)
    assert np.allclose(a.ifs.branches[a.central_branch].H,
                       b.ifs.branches[b.central_branch].H)
    off = next(j for j in range(a.ifs.q)
               if j not in (a.central_branch, a.corrector_branch))
    assert not np.allclose(a.ifs.branches[off].H, b.ifs.branches[off].H)


def test_make_certified_instance_passes():
    inst, cert = make_certified_instance(seed=12345)
    assert cert.passed
    assert cert.depth == inst.depth
    assert cert.address[inst.corrector_level - 1] == inst.corrector_branch
