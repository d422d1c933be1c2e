"""Unitary groups and operator norms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifscert.matrices import (FiniteMatrixGroup, GroupClosureError,
                              is_unitary, mat, mats_close, op_norm)

cpx = st.builds(complex,
                st.floats(min_value=-5, max_value=5, allow_nan=False),
                st.floats(min_value=-5, max_value=5, allow_nan=False))


@given(cpx, cpx, cpx, cpx)
@settings(max_examples=100, deadline=None)
def test_op_norm_matches_svd_oracle(a, b, c, d):
    # [DERIVED] oracle: largest singular value via numpy SVD
    M = mat(a, b, c, d)
    oracle = float(np.linalg.svd(M, compute_uv=False)[0])
    assert op_norm(M) == pytest.approx(oracle, rel=1e-10, abs=1e-12)


def test_op_norm_general_shape():
    M = np.diag([3.0, 2.0, 1.0])
    assert op_norm(M) == pytest.approx(3.0)


def test_op_norm_properties():
    M = mat(1 + 1j, 0.5, -2j, 0.25)
    assert op_norm(2.5 * M) == pytest.approx(2.5 * op_norm(M))
    U = mat(0, 1, 1, 0)  # unitary swap
    assert op_norm(U @ M) == pytest.approx(op_norm(M))
    assert op_norm(np.zeros((2, 2))) == 0.0


def test_is_unitary_and_close():
    assert is_unitary(np.eye(2))
    assert is_unitary(mat(0, 1j, 1j, 0))
    assert not is_unitary(mat(2, 0, 0, 1))
    assert mats_close(np.eye(2), np.eye(2) + 1e-14)
    assert not mats_close(np.eye(2), np.eye(2) * 1.001)


def test_trivial_group():
    g = FiniteMatrixGroup.trivial()
    assert len(g) == 1
    assert g.contains(np.eye(2))
    assert g.index_of(np.eye(2)) == 0
    assert g.element_order(np.eye(2)) == 1


def test_cyclic4_group_structure():
    g = FiniteMatrixGroup.cyclic4_central()
    assert len(g) == 4
    J = mat(1j, 0, 0, 1j)
    assert g.contains(J)
    assert g.element_order(J) == 4
    assert g.element_order(J @ J) == 2
    # closed under multiplication and inverse
    for A in g.elements:
        assert g.contains(A.conj().T)
        for B in g.elements:
            assert g.contains(A @ B)


def test_order2_diagonal_group():
    g = FiniteMatrixGroup.order2_diagonal()
    assert len(g) == 2
    D = mat(1, 0, 0, -1)
    assert g.contains(D)
    assert g.element_order(D) == 2


def test_group_rejects_bad_element_lists():
    with pytest.raises(GroupClosureError):
        FiniteMatrixGroup((np.eye(2), mat(2, 0, 0, 0.5)))  # not unitary
    with pytest.raises(GroupClosureError):
        FiniteMatrixGroup((mat(1, 0, 0, -1),))  # missing identity
    with pytest.raises(GroupClosureError):
        FiniteMatrixGroup((np.eye(2), mat(0, 1j, 1j, 0) @ mat(1, 0, 0, -1),
                           mat(1, 0, 0, -1)))  # not closed under product


def test_index_of_unknown_element():
    g = FiniteMatrixGroup.trivial()
    with pytest.raises(ValueError):
        g.index_of(mat(0, 1, 1, 0))
