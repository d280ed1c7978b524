"""
Compositions - Composing a relation A on H1 (x) H2 with a relation B on
H2 (x) H3 into an operator on H1 (x) H3.

    circle:   (1/d2) Σ_i <ii| A (x) B |ii>
    bullet:   <Ψ| A (x) B |Ψ>,  Ψ = (1/sqrt(d2)) Σ_i |ii>
    diamond:  tr_{H2 (x) H2}[S_v (A (x) B) S_v]

The contractions act on the H2 factor of A and the H2 factor of B only.
Outputs are not clamped; use relation_bounds to see whether one is a predicate.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..config.tolerances import TOLERANCES
from ..core.errors import DimensionMismatchError, QWhileError
from ..core.operators import as_matrix, dagger, eigenvalue_range, identity, is_hermitian
from .constructors import check_orthonormal, symmetrizer


@dataclass(frozen=True, eq=False)
class RelationPredicate:
    """A predicate on a tensor product of spaces with the given factor dimensions."""
    matrix: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self):
        matrix = as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        if matrix.shape != (int(np.prod(dims)),) * 2:
            raise DimensionMismatchError(f"Relation of shape {matrix.shape} does not live on factors {dims}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims", dims)

    def bounds(self) -> Dict[str, Any]:
        return relation_bounds(self.matrix)


def _split(a: np.ndarray, b: np.ndarray, d2: int) -> Tuple[int, int]:
    """Outer dimensions (d1, d3) for A on d1*d2 and B on d2*d3."""
    if a.shape[0] % d2 or b.shape[0] % d2:
        raise DimensionMismatchError(
            f"Middle dimension {d2} does not divide the relation dimensions {a.shape[0]} and {b.shape[0]}")
    return a.shape[0] // d2, b.shape[0] // d2


def _in_basis(a: np.ndarray, b: np.ndarray, basis: Optional[np.ndarray], d2: int):
    """Rewrite both relations so that the basis of H2 becomes the computational one."""
    if basis is None:
        return a, b
    basis = as_matrix(basis)
    if basis.shape != (d2, d2):
        raise DimensionMismatchError(f"Basis of shape {basis.shape} does not match the middle dimension {d2}")
    check_orthonormal(basis)
    d1, d3 = _split(a, b, d2)
    left = np.kron(identity(d1), basis)
    right = np.kron(basis, identity(d3))
    return dagger(left) @ a @ left, dagger(right) @ b @ right


def _middle(a: np.ndarray, b: np.ndarray, basis: Optional[np.ndarray], d2: Optional[int]) -> int:
    if d2 is None:
        if basis is None:
            raise QWhileError("The middle dimension is needed when no basis is given")
        d2 = as_matrix(basis).shape[0]
    _split(a, b, d2)
    return d2


def circle_comp(a, b, basis: Optional[np.ndarray] = None, d2: Optional[int] = None) -> np.ndarray:
    """
    Circle composition of A on H1 (x) H2 and B on H2 (x) H3.

    Args:
        a, b: the two relations as matrices
        basis: orthonormal basis of H2 as columns (default: computational)
        d2: middle dimension, required when `basis` is omitted
    """
    a, b = as_matrix(a), as_matrix(b)
    d2 = _middle(a, b, basis, d2)
    d1, d3 = _split(a, b, d2)
    a, b = _in_basis(a, b, basis, d2)
    out = np.einsum("aixi,iciy->acxy", a.reshape(d1, d2, d1, d2), b.reshape(d2, d3, d2, d3)) / d2
    return out.reshape(d1 * d3, d1 * d3)


def bullet_comp(a, b, basis: Optional[np.ndarray] = None, d2: Optional[int] = None) -> np.ndarray:
    """Bullet composition <Ψ| A (x) B |Ψ> for the maximally entangled Ψ of `basis`."""
    a, b = as_matrix(a), as_matrix(b)
    d2 = _middle(a, b, basis, d2)
    d1, d3 = _split(a, b, d2)
    a, b = _in_basis(a, b, basis, d2)
    out = np.einsum("aixj,icjy->acxy", a.reshape(d1, d2, d1, d2), b.reshape(d2, d3, d2, d3)) / d2
    return out.reshape(d1 * d3, d1 * d3)


def diamond_comp(a, b, sign: str = "+", d2: Optional[int] = None) -> np.ndarray:
    """
    Diamond composition with the symmetrizer S+ or S- on the two copies of H2.

    Args:
        a, b: the two relations
        sign: "+" or "-"
        d2: middle dimension (default: A and B on spaces of equal dimension d2*d2)
    """
    a, b = as_matrix(a), as_matrix(b)
    if d2 is None:
        d2 = int(round(np.sqrt(a.shape[0])))
        if d2 * d2 != a.shape[0]:
            raise QWhileError(f"Cannot infer the middle dimension from a relation of dimension {a.shape[0]}")
    d1, d3 = _split(a, b, d2)
    sym = np.kron(np.kron(identity(d1), symmetrizer(d2, sign)), identity(d3))
    full = sym @ np.kron(a, b) @ sym
    out = np.einsum("amxbmy->axby", full.reshape(d1, d2 * d2, d3, d1, d2 * d2, d3))
    return out.reshape(d1 * d3, d1 * d3)


def relation_bounds(matrix, tol: Optional[float] = None) -> Dict[str, Any]:
    """Spectrum bounds of a composed relation and whether it is a predicate."""
    tol = TOLERANCES["psd"] if tol is None else tol
    matrix = as_matrix(matrix)
    hermitian = is_hermitian(matrix)
    low, high = eigenvalue_range(matrix)
    return {
        'hermitian': hermitian,
        'min_eig': low,
        'max_eig': high,
        'is_predicate': bool(hermitian and low >= -tol and high <= 1.0 + tol),
    }
