"""Lossless serialization, canonical text, and hashing."""

import json

import numpy as np
import pytest

from ifscert.geometry import (Ball, GridOfBalls, PointC2, QuadrupleBasis,
                              ZERO)
from ifscert.matrices import FiniteMatrixGroup, mat
from ifscert.pigeonhole import build_direction
from ifscert.polynomials import CurvePoly, Poly2C
from ifscert.serialize import (SerializationError, dumps_canonical,
                               from_jsonable, instance_hash, load, save,
                               to_jsonable)
from ifscert.synth import make_certified_instance, make_instance


def _roundtrip(obj):
    return from_jsonable(json.loads(dumps_canonical(obj)))


def test_point_and_basis_roundtrip():
    p = PointC2(0.1, -0.2, 1 / 3, 2.0)
    assert _roundtrip(p) == p
    basis = QuadrupleBasis.standard(0.25)
    back = _roundtrip(basis)
    for u, v in zip(basis.vectors(), back.vectors()):
        assert u == v


def test_polynomials_roundtrip():
    g = CurvePoly(((1 + 2j, 0j), (0j, 0.5 - 1j)))
    assert _roundtrip(g).coeffs == g.coeffs
    p = Poly2C((((2, 0), (0.3 + 0j, 0j)), ((1, 1), (0j, 1j))))
    assert _roundtrip(p).terms == p.terms


def test_geometry_roundtrip():
    basis = QuadrupleBasis.standard(1.0)
    g = GridOfBalls(u=basis, o=PointC2(0.1, 0, 0, 0), N=3, r=0.6)
    back = _roundtrip(g)
    assert back.N == g.N and back.r == g.r and back.o == g.o
    b = Ball(ZERO, 0.75)
    assert _roundtrip(b) == b


def test_group_and_direction_roundtrip():
    grp = FiniteMatrixGroup.cyclic4_central()
    back = _roundtrip(grp)
    assert len(back) == len(grp)
    for e in grp.elements:
        assert back.contains(e)
    d = build_direction(QuadrupleBasis.standard(1.0).combine([0.5, 0, 0, 0]),
                        eta=0.4, r=0.7, basis=QuadrupleBasis.standard(1.0))
    back = _roundtrip(d)
    assert back.alphas == d.alphas and back.m == d.m
    assert back.w_coords == d.w_coords  # exact Fractions survive


def test_instance_and_certificate_roundtrip_byte_identical():
    inst, cert = make_certified_instance(seed=777)
    for obj in (inst, cert, inst.ifs, inst.system, inst.line):
        text = dumps_canonical(obj)
        again = dumps_canonical(_roundtrip(obj))
        assert text == again  # byte-identical after a full round trip


def test_canonical_text_is_deterministic():
    a = dumps_canonical(make_instance(seed=4))
    b = dumps_canonical(make_instance(seed=4))
    assert a == b
    assert instance_hash(make_instance(seed=4)) == instance_hash(
        make_instance(seed=4))
    # sorted keys, no whitespace
    assert ": " not in a and ", " not in a


def test_hash_sensitive_to_any_change():
    base = make_instance(seed=4)
    other = make_instance(seed=5)
    assert instance_hash(base) != instance_hash(other)
    import dataclasses
    tweaked = dataclasses.replace(base, depth=base.depth + 1)
    assert instance_hash(tweaked) != instance_hash(base)


def test_save_load_file(tmp_path):
    inst = make_instance(seed=2)
    path = tmp_path / "inst.json"
    save(inst, path)
    back = load(path)
    assert dumps_canonical(back) == dumps_canonical(inst)


def test_unsupported_objects_rejected():
    with pytest.raises(SerializationError):
        to_jsonable(object())
    with pytest.raises(SerializationError):
        from_jsonable({"kind": "no-such-kind"})
