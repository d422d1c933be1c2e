"""2x2 complex matrices and finite unitary matrix groups.

Matrices are plain numpy 2x2 complex arrays; the distance used everywhere is
the one induced by the operator 2-norm.  Groups are supplied explicitly as
element lists and validated for closure, unitarity and the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GROUP_TOL = 1e-12

I2 = np.eye(2, dtype=complex)


def op_norm(M: np.ndarray) -> float:
    """Operator 2-norm (largest singular value).

    For 2x2 inputs the norm is computed in closed form from the top
    eigenvalue of M*M (the discriminant is a sum of squares, so there is no
    cancellation); other shapes fall back to the generic SVD norm.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape != (2, 2):
        return float(np.linalg.norm(M, ord=2))
    H = M.conj().T @ M
    mean = 0.5 * (H[0, 0].real + H[1, 1].real)
    disc = math.hypot(0.5 * (H[0, 0].real - H[1, 1].real), abs(H[0, 1]))
    return math.sqrt(max(mean + disc, 0.0))


def mat(a, b, c, d) -> np.ndarray:
    return np.array([[a, b], [c, d]], dtype=complex)


def mats_close(A: np.ndarray, B: np.ndarray, tol: float = GROUP_TOL) -> bool:
    return op_norm(A - B) <= tol


def is_unitary(M: np.ndarray, tol: float = GROUP_TOL) -> bool:
    return mats_close(M.conj().T @ M, I2, tol)


class GroupClosureError(ValueError):
    """Element list not closed under product / missing identity."""


@dataclass(frozen=True)
class FiniteMatrixGroup:
    """Finite subgroup of unitary 2x2 complex matrices.

    ``product_table[i][j]`` is the index of elements[i] @ elements[j];
    ``orders[i]`` is the order of elements[i].  Both are derived at
    construction and the closure/unitarity requirements are enforced there.
    """

    elements: tuple[np.ndarray, ...]
    product_table: tuple[tuple[int, ...], ...] = field(default=(), compare=False)
    orders: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        elems = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        object.__setattr__(self, "elements", elems)
        if not any(mats_close(e, I2) for e in elems):
            raise GroupClosureError("group must contain the identity")
        for e in elems:
            if not is_unitary(e):
                raise GroupClosureError("group element is not unitary")
        table = []
        for a in elems:
            row = []
            for b in elems:
                row.append(self._index_of(elems, a @ b))
            table.append(tuple(row))
        object.__setattr__(self, "product_table", tuple(table))
        orders = []
        for e in elems:
            p = e.copy()
            k = 1
            while not mats_close(p, I2):
                p = p @ e
                k += 1
                if k > len(elems) + 1:
                    raise GroupClosureError("element order exceeds group size")
            orders.append(k)
        object.__setattr__(self, "orders", tuple(orders))

    @staticmethod
    def _index_of(elems, M) -> int:
        for i, e in enumerate(elems):
            if mats_close(e, M):
                return i
        raise GroupClosureError("group not closed under product")

    def __len__(self) -> int:
        return len(self.elements)

    def index_of(self, M: np.ndarray) -> int:
        return self._index_of(self.elements, M)

    def contains(self, M: np.ndarray) -> bool:
        return any(mats_close(e, M) for e in self.elements)

    def element_order(self, M: np.ndarray) -> int:
        return self.orders[self.index_of(M)]

    @staticmethod
    def trivial() -> "FiniteMatrixGroup":
        return FiniteMatrixGroup((I2,))

    @staticmethod
    def cyclic4_central() -> "FiniteMatrixGroup":
        """{I, iI, -I, -iI}: central elements, order 4."""
        return FiniteMatrixGroup((I2, 1j * I2, -I2, -1j * I2))

    @staticmethod
    def order2_diagonal() -> "FiniteMatrixGroup":
        """{I, diag(1,-1)}: a non-central involution."""
        return FiniteMatrixGroup((I2, mat(1, 0, 0, -1)))
