"""
Predicate values - Operators produced while evaluating predicate expressions,
optionally tagged with the variables they act on.

A value without variables is anonymous: it can only be combined with operands
of the same dimension and must finally match the target space exactly. A value
with variables is cylindrically extended as needed.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DimensionMismatchError, QWhileError, UnknownIdentifierError
from ..core.operators import Space, embed


@dataclass(frozen=True, eq=False)
class PredValue:
    matrix: np.ndarray
    vars: Optional[Tuple[str, ...]] = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _lift(value: PredValue, target: Sequence[str], space: Space) -> np.ndarray:
    for v in value.vars:
        if v not in target:
            raise DimensionMismatchError(f"Predicate over {list(value.vars)} does not fit {list(target)}")
    return embed(value.matrix, value.vars, space.subspace(target))


def _ordered_union(a: Sequence[str], b: Sequence[str], order: Space) -> Tuple[str, ...]:
    wanted = set(a) | set(b)
    return tuple(n for n in order.names if n in wanted)


def add_values(left: PredValue, right: PredValue, space: Space, sign: float = 1.0) -> PredValue:
    """left + sign * right, embedding both into the union of their variables."""
    if left.vars is None and right.vars is None:
        if left.dim != right.dim:
            raise DimensionMismatchError(f"Cannot add operators of dimension {left.dim} and {right.dim}")
        return PredValue(left.matrix + sign * right.matrix)
    if left.vars is None or right.vars is None:
        typed, anonymous = (left, right) if right.vars is None else (right, left)
        if anonymous.dim != typed.dim:
            raise DimensionMismatchError(
                f"Cannot add an anonymous operator of dimension {anonymous.dim} to a predicate over "
                f"{list(typed.vars)} (dimension {typed.dim})")
        return PredValue(left.matrix + sign * right.matrix, typed.vars)
    target = _ordered_union(left.vars, right.vars, space)
    return PredValue(_lift(left, target, space) + sign * _lift(right, target, space), target)


def tensor_values(left: PredValue, right: PredValue) -> PredValue:
    matrix = np.kron(left.matrix, right.matrix)
    if left.vars is not None and right.vars is not None:
        overlap = set(left.vars) & set(right.vars)
        if overlap:
            raise QWhileError(f"Tensor factors share variables {sorted(overlap)}")
        return PredValue(matrix, left.vars + right.vars)
    return PredValue(matrix)


def scale_value(scalar: complex, value: PredValue) -> PredValue:
    return PredValue(scalar * value.matrix, value.vars)


def resolve_value(value: PredValue, target: Sequence[str], space: Space) -> np.ndarray:
    """
    Express `value` as an operator on `target` (ordered variable list of `space`).
    """
    target = list(target)
    for v in target:
        if v not in space:
            raise UnknownIdentifierError(f"Unknown variable '{v}'")
    expected = space.subspace(target).dim
    if value.vars is None:
        if value.dim != expected:
            raise DimensionMismatchError(
                f"Operator has dimension {value.dim}, expected {expected} for {target}")
        return value.matrix
    return _lift(value, target, space)


@dataclass(frozen=True)
class KetTerm:
    coefficient: complex
    indices: Tuple[int, ...]
    dims: Tuple[Optional[int], ...]


def ket_vector(terms: List[KetTerm], expected_dims: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    Build the state vector of a ket expression.

    Factor dimensions come from explicit suffixes, then from `expected_dims`
    when the factor count matches, else from the largest index (at least 2).
    """
    if not terms:
        raise QWhileError("Empty ket expression")
    count = len(terms[0].indices)
    for term in terms:
        if len(term.indices) != count:
            raise DimensionMismatchError("Ket terms have different numbers of factors")
    dims: List[int] = []
    for position in range(count):
        explicit = {t.dims[position] for t in terms if t.dims[position] is not None}
        if len(explicit) > 1:
            raise DimensionMismatchError(f"Conflicting dimensions {sorted(explicit)} for ket factor {position}")
        if explicit:
            dims.append(explicit.pop())
        elif expected_dims is not None and len(expected_dims) == count:
            dims.append(int(expected_dims[position]))
        else:
            dims.append(max(2, max(t.indices[position] for t in terms) + 1))
    total = int(np.prod(dims, dtype=np.int64)) if dims else 1
    vector = np.zeros(total, dtype=np.complex128)
    for term in terms:
        index = 0
        for i, d in zip(term.indices, dims):
            if i >= d:
                raise DimensionMismatchError(f"Ket index {i} out of range for dimension {d}")
            index = index * d + i
        vector[index] += term.coefficient
    return vector, tuple(dims)
