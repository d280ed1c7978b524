"""
Constructors - SWAP, symmetrizers and basis-equality predicates on H (x) H.
"""

from typing import Optional

import numpy as np

from ..config.tolerances import TOLERANCES
from ..core.errors import DimensionMismatchError, QWhileError
from ..core.operators import as_matrix, dagger, identity


def swap_operator(d: int) -> np.ndarray:
    """SWAP |i, j> = |j, i> on C^d (x) C^d."""
    if d < 1:
        raise QWhileError(f"SWAP needs a positive dimension, got {d}")
    swap = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    return swap


def symmetrizer(d: int, sign: str = "+") -> np.ndarray:
    """S+ = (I + SWAP)/2 or S- = (I - SWAP)/2."""
    if sign not in ("+", "-"):
        raise QWhileError(f"Symmetrizer sign must be '+' or '-', got {sign!r}")
    factor = 1.0 if sign == "+" else -1.0
    return (identity(d * d) + factor * swap_operator(d)) / 2


def check_orthonormal(basis: np.ndarray, tol: Optional[float] = None):
    tol = TOLERANCES["eq"] if tol is None else tol
    if basis.shape[0] != basis.shape[1]:
        raise DimensionMismatchError(f"Basis matrix must be square, got shape {basis.shape}")
    deviation = float(np.max(np.abs(dagger(basis) @ basis - identity(basis.shape[0]))))
    if deviation > tol:
        raise QWhileError(f"Basis is not orthonormal (max |B^dagger B - I| = {deviation:.3e})")


def maximally_entangled(basis: np.ndarray) -> np.ndarray:
    """(1/sqrt(d)) sum_i |b_i> (x) |b_i>, basis vectors taken from the columns."""
    d = basis.shape[0]
    return sum(np.kron(basis[:, i], basis[:, i]) for i in range(d)) / np.sqrt(d)


def equality_pred(basis: Optional[np.ndarray] = None, d: Optional[int] = None,
                  tol: Optional[float] = None) -> np.ndarray:
    """
    The equality relation =_B: projector onto the maximally entangled state of basis B.

    Args:
        basis: d x d matrix whose columns are the basis vectors (default: computational)
        d: dimension, required when `basis` is omitted
        tol: orthonormality tolerance
    """
    if basis is None:
        if d is None:
            raise QWhileError("equality_pred needs a basis or a dimension")
        basis = identity(d)
    basis = as_matrix(basis)
    check_orthonormal(basis, tol)
    psi = maximally_entangled(basis)
    return np.outer(psi, psi.conj())
