"""
Operators - Dense complex-matrix algebra over tensor products of finite-dimensional
Hilbert spaces: predicates, density operators, superoperators, duals and the
Loewner-order decision.

Matrices are plain numpy arrays (complex128, row-major, basis ordered
lexicographically over the variable order of a Space). The wrapper types
QuantumPredicate, DensityOperator and Superoperator validate their invariants
at construction and are immutable afterwards.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.tolerances import TOLERANCES
from .errors import (
    DimensionMismatchError,
    NotHermitianError,
    PredicateBoundsError,
    QWhileError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Space:
    """
    Ordered list of quantum variables with their dimensions.
    """
    names: Tuple[str, ...] = ()
    dims: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.names) != len(self.dims):
            raise DimensionMismatchError(
                f"Space has {len(self.names)} names but {len(self.dims)} dimensions")
        if len(set(self.names)) != len(self.names):
            raise QWhileError(f"Repeated variable in space {list(self.names)}")
        for name, d in zip(self.names, self.dims):
            if d < 1:
                raise DimensionMismatchError(f"Variable '{name}' has non-positive dimension {d}")

    @classmethod
    def of(cls, *pairs: Tuple[str, int]) -> "Space":
        return cls(tuple(n for n, _ in pairs), tuple(d for _, d in pairs))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownIdentifierError(f"Unknown variable '{name}' (space: {list(self.names)})") from None

    def dim_of(self, name: str) -> int:
        return self.dims[self.index(name)]

    def subspace(self, names: Sequence[str]) -> "Space":
        """Space over `names`, in the given order."""
        return Space(tuple(names), tuple(self.dim_of(n) for n in names))

    def restrict(self, names: Iterable[str]) -> "Space":
        """Space over `names`, in this space's order."""
        wanted = set(names)
        for n in wanted:
            self.index(n)
        return Space(tuple(n for n in self.names if n in wanted),
                     tuple(d for n, d in zip(self.names, self.dims) if n in wanted))

    def without(self, names: Iterable[str]) -> "Space":
        dropped = set(names)
        for n in dropped:
            self.index(n)
        return Space(tuple(n for n in self.names if n not in dropped),
                     tuple(d for n, d in zip(self.names, self.dims) if n not in dropped))

    def union(self, other: "Space") -> "Space":
        names = list(self.names)
        dims = list(self.dims)
        for n, d in zip(other.names, other.dims):
            if n in self.names:
                if self.dim_of(n) != d:
                    raise DimensionMismatchError(
                        f"Variable '{n}' has dimension {self.dim_of(n)} and {d}")
                continue
            names.append(n)
            dims.append(d)
        return Space(tuple(names), tuple(dims))

    def to_dict(self):
        return {name: d for name, d in zip(self.names, self.dims)}


MatrixLike = Union[np.ndarray, Sequence, "QuantumPredicate", "DensityOperator"]


def as_matrix(value: MatrixLike) -> np.ndarray:
    """
    Convert a matrix-like value into a square-or-rectangular complex128 array.

    Raises:
        QWhileError: if the value is not 2-dimensional or has non-finite entries
    """
    if isinstance(value, (QuantumPredicate, DensityOperator)):
        return value.matrix
    matrix = np.asarray(value, dtype=np.complex128)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"Expected a matrix, got an array of shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise QWhileError("Matrix has NaN or infinite entries")
    return matrix


def _square(matrix: np.ndarray, what: str = "operator") -> int:
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"{what} must be square, got shape {matrix.shape}")
    return matrix.shape[0]


def _same_dimension(a: np.ndarray, b: np.ndarray, what: str = "operands"):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Dimension mismatch between {what}: {a.shape} vs {b.shape}")


def dagger(matrix: np.ndarray) -> np.ndarray:
    return matrix.conj().T


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + dagger(matrix)) / 2


def is_hermitian(matrix: MatrixLike, tol: Optional[float] = None) -> bool:
    tol = TOLERANCES["herm"] if tol is None else tol
    m = as_matrix(matrix)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def require_hermitian(matrix: np.ndarray, tol: Optional[float] = None, what: str = "operator"):
    tol = TOLERANCES["herm"] if tol is None else tol
    _square(matrix, what)
    deviation = float(np.max(np.abs(matrix - dagger(matrix)), initial=0.0))
    if deviation > tol:
        raise NotHermitianError(f"{what} is not Hermitian (max |A - A^dagger| = {deviation:.3e})")


def eigenvalue_range(matrix: np.ndarray) -> Tuple[float, float]:
    """Smallest and largest eigenvalue of the Hermitian part of `matrix`."""
    if matrix.shape[0] == 0:
        return 0.0, 0.0
    values = np.linalg.eigvalsh(hermitian_part(matrix))
    return float(values[0]), float(values[-1])


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def basis_vector(index: int, dim: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise DimensionMismatchError(f"Basis index {index} out of range for dimension {dim}")
    vector = np.zeros(dim, dtype=np.complex128)
    vector[index] = 1.0
    return vector


def projector(vector: Sequence[complex], normalize: bool = True) -> np.ndarray:
    """|v><v| for a (by default normalized) vector v."""
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    if normalize:
        norm = np.linalg.norm(v)
        if norm == 0:
            raise QWhileError("Cannot build a projector from the zero vector")
        v = v / norm
    return np.outer(v, v.conj())


def project_to_predicate(matrix: np.ndarray) -> np.ndarray:
    """Clamp the eigenvalues of the Hermitian part of `matrix` into [0, 1]."""
    values, vectors = np.linalg.eigh(hermitian_part(as_matrix(matrix)))
    values = np.clip(values, 0.0, 1.0)
    return (vectors * values) @ dagger(vectors)


def check_predicate_bounds(matrix: np.ndarray, herm_tol: Optional[float] = None,
                           psd_tol: Optional[float] = None, what: str = "predicate"):
    """
    Raise unless `matrix` is Hermitian with 0 <= matrix <= I (within tolerance).
    """
    psd_tol = TOLERANCES["psd"] if psd_tol is None else psd_tol
    require_hermitian(matrix, herm_tol, what)
    low, high = eigenvalue_range(matrix)
    if low < -psd_tol or high > 1 + psd_tol:
        raise PredicateBoundsError(
            f"{what} is not within [0, I]: eigenvalues span [{low:.3e}, {high:.6g}]")


def check_density_bounds(matrix: np.ndarray, herm_tol: Optional[float] = None,
                         psd_tol: Optional[float] = None, trace_tol: Optional[float] = None,
                         what: str = "state"):
    """
    Raise unless `matrix` is a partial density operator (positive, trace <= 1).
    """
    psd_tol = TOLERANCES["psd"] if psd_tol is None else psd_tol
    trace_tol = TOLERANCES["trace"] if trace_tol is None else trace_tol
    require_hermitian(matrix, herm_tol, what)
    low, _ = eigenvalue_range(matrix)
    if low < -psd_tol:
        raise PredicateBoundsError(f"{what} is not positive: minimum eigenvalue {low:.3e}")
    tr = np.trace(matrix)
    if abs(tr.imag) > trace_tol or tr.real > 1 + trace_tol or tr.real < -trace_tol:
        raise PredicateBoundsError(f"{what} has trace {tr:.6g}, expected 0 <= tr <= 1")


def _frozen_copy(matrix: np.ndarray) -> np.ndarray:
    copy = np.array(matrix, dtype=np.complex128, copy=True)
    copy.setflags(write=False)
    return copy


def _check_space(matrix: np.ndarray, space: Optional[Space], what: str):
    if space is not None and matrix.shape[0] != space.dim:
        raise DimensionMismatchError(
            f"{what} has dimension {matrix.shape[0]} but its space {list(space.names)} has dimension {space.dim}")


@dataclass(frozen=True, eq=False)
class QuantumPredicate:
    """
    Hermitian operator A with 0 <= A <= I on a space of variables.
    """
    matrix: np.ndarray
    space: Optional[Space] = None

    def __post_init__(self):
        matrix = as_matrix(self.matrix)
        _square(matrix, "predicate")
        _check_space(matrix, self.space, "predicate")
        check_predicate_bounds(matrix)
        object.__setattr__(self, "matrix", _frozen_copy(matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        names = list(self.space.names) if self.space is not None else None
        return f"QuantumPredicate(dim={self.dim}, space={names})"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """
    Positive operator rho with trace <= 1 on a space of variables.
    """
    matrix: np.ndarray
    space: Optional[Space] = None

    def __post_init__(self):
        matrix = as_matrix(self.matrix)
        _square(matrix, "state")
        _check_space(matrix, self.space, "state")
        check_density_bounds(matrix)
        object.__setattr__(self, "matrix", _frozen_copy(matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @classmethod
    def from_ket(cls, vector: Sequence[complex], space: Optional[Space] = None) -> "DensityOperator":
        return cls(projector(vector), space)

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim}, trace={self.trace:.6g})"


@dataclass(frozen=True, eq=False)
class Superoperator:
    """
    Completely positive, trace-non-increasing map given by Kraus operators.

    Attributes:
        kraus: Kraus operators, all d_out x d_in
        space_in, space_out: optional variable spaces of input and output
        residual: truncation residual (nonzero only for truncated loop denotations)
    """
    kraus: Tuple[np.ndarray, ...]
    space_in: Optional[Space] = None
    space_out: Optional[Space] = None
    residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        ops = tuple(_frozen_copy(as_matrix(k)) for k in self.kraus)
        if not ops:
            raise QWhileError("Superoperator needs at least one Kraus operator")
        shape = ops[0].shape
        for k in ops:
            if k.shape != shape:
                raise DimensionMismatchError(f"Kraus operators have mixed shapes {shape} and {k.shape}")
        object.__setattr__(self, "kraus", ops)
        if self.space_in is not None and self.space_in.dim != shape[1]:
            raise DimensionMismatchError("Kraus input dimension does not match space_in")
        if self.space_out is not None and self.space_out.dim != shape[0]:
            raise DimensionMismatchError("Kraus output dimension does not match space_out")
        _, high = eigenvalue_range(self.gram())
        if high > 1 + TOLERANCES["psd"]:
            raise PredicateBoundsError(
                f"Superoperator is not trace-non-increasing: max eigenvalue of sum E^dagger E is {high:.6g}")

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def gram(self) -> np.ndarray:
        """Sum of E_i^dagger E_i."""
        return sum(dagger(k) @ k for k in self.kraus)

    @property
    def trace_preserving(self) -> bool:
        return self.trace_preserving_residual() <= TOLERANCES["eq"]

    def trace_preserving_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - identity(self.d_in)), initial=0.0))

    def __len__(self) -> int:
        return len(self.kraus)

    def __repr__(self) -> str:
        return f"Superoperator(kraus={len(self.kraus)}, shape={self.d_out}x{self.d_in}, residual={self.residual:.3g})"


@dataclass(frozen=True)
class OrderVerdict:
    """
    Outcome of a Loewner-order test A <= B.

    Attributes:
        holds: whether min eig(B - A) >= -tol
        min_eig: smallest eigenvalue of the Hermitian part of B - A
        witness: unit eigenvector of the smallest eigenvalue when the test fails
    """
    holds: bool
    min_eig: float
    witness: Optional[np.ndarray] = None


def loewner_leq(a: MatrixLike, b: MatrixLike, tol: Optional[float] = None,
                herm_tol: Optional[float] = None) -> OrderVerdict:
    """
    Decide A <= B in the Loewner order.

    Args:
        a, b: square Hermitian matrices of the same dimension
        tol: eigenvalue slack (default: TOLERANCES["psd"])
        herm_tol: Hermiticity tolerance for the inputs

    Returns:
        OrderVerdict with the minimum eigenvalue of B - A and, on failure, the
        eigenvector achieving it
    """
    tol = TOLERANCES["psd"] if tol is None else tol
    a = as_matrix(a)
    b = as_matrix(b)
    _square(a, "left operand")
    _same_dimension(a, b, "Loewner operands")
    require_hermitian(a, herm_tol, "left operand")
    require_hermitian(b, herm_tol, "right operand")
    if a.shape[0] == 0:
        return OrderVerdict(True, 0.0)
    values, vectors = np.linalg.eigh(hermitian_part(b - a))
    min_eig = float(values[0])
    if min_eig >= -tol:
        return OrderVerdict(True, min_eig)
    witness = vectors[:, 0]
    # fix the global phase so witnesses are reproducible
    pivot = int(np.argmax(np.abs(witness)))
    witness = witness * (abs(witness[pivot]) / witness[pivot])
    return OrderVerdict(False, min_eig, witness)


def min_eigenvalue(matrix: MatrixLike) -> float:
    return eigenvalue_range(as_matrix(matrix))[0]


def _kraus_of(channel: Union[Superoperator, Sequence[np.ndarray]]) -> Tuple[np.ndarray, ...]:
    if isinstance(channel, Superoperator):
        return channel.kraus
    return tuple(as_matrix(k) for k in channel)


def apply(channel: Union[Superoperator, Sequence[np.ndarray]], rho: MatrixLike) -> np.ndarray:
    """
    Apply a channel in the Schroedinger picture: sum_i E_i rho E_i^dagger.

    Also accepts a stack of matrices of shape (n, d, d).
    """
    kraus = _kraus_of(channel)
    rho = np.asarray(rho.matrix if isinstance(rho, (QuantumPredicate, DensityOperator)) else rho,
                     dtype=np.complex128)
    if rho.shape[-1] != kraus[0].shape[1] or rho.shape[-2] != kraus[0].shape[1]:
        raise DimensionMismatchError(
            f"Channel expects dimension {kraus[0].shape[1]}, state has shape {rho.shape}")
    return sum(k @ rho @ dagger(k) for k in kraus)


def dual_apply(channel: Union[Superoperator, Sequence[np.ndarray]], observable: MatrixLike) -> np.ndarray:
    """
    Apply the Heisenberg-picture dual: sum_i E_i^dagger A E_i.

    Also accepts a stack of matrices of shape (n, d, d).
    """
    kraus = _kraus_of(channel)
    a = np.asarray(observable.matrix if isinstance(observable, (QuantumPredicate, DensityOperator))
                   else observable, dtype=np.complex128)
    if a.shape[-1] != kraus[0].shape[0] or a.shape[-2] != kraus[0].shape[0]:
        raise DimensionMismatchError(
            f"Dual channel expects dimension {kraus[0].shape[0]}, observable has shape {a.shape}")
    return sum(dagger(k) @ a @ k for k in kraus)


def tensor(*operators: MatrixLike) -> np.ndarray:
    """Kronecker product of the operators, left to right."""
    if not operators:
        return np.ones((1, 1), dtype=np.complex128)
    return functools.reduce(np.kron, (as_matrix(op) for op in operators))


def _permutation_to(order: Sequence[str], env: Space) -> List[int]:
    return [list(order).index(name) for name in env.names]


def embed(op: MatrixLike, targets: Sequence[str], env: Space) -> np.ndarray:
    """
    Cylindric extension: act as `op` on `targets` and as identity elsewhere.

    Args:
        op: operator on the tensor product of `targets`, in the given order
        targets: variables of `op`, a subset of `env`
        env: full variable space

    Returns:
        Operator on `env`, indices in env order
    """
    op = as_matrix(op)
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise QWhileError(f"Repeated target variable in {targets}")
    target_dims = [env.dim_of(t) for t in targets]
    expected = int(np.prod(target_dims, dtype=np.int64)) if targets else 1
    if op.shape[0] != expected or op.shape[1] != expected:
        raise DimensionMismatchError(
            f"Operator of shape {op.shape} cannot act on {targets} (dimension {expected})")
    if targets == list(env.names):
        return op.copy()
    rest = [n for n in env.names if n not in targets]
    full = np.kron(op, identity(int(np.prod([env.dim_of(n) for n in rest], dtype=np.int64))))
    order = targets + rest
    dims = target_dims + [env.dim_of(n) for n in rest]
    n = len(order)
    perm = _permutation_to(order, env)
    tensor_form = full.reshape(dims + dims)
    tensor_form = tensor_form.transpose(perm + [p + n for p in perm])
    return tensor_form.reshape(env.dim, env.dim)


def partial_trace(matrix: MatrixLike, traced: Sequence[str], env: Space) -> np.ndarray:
    """
    Trace out `traced` variables; the result lives on env without them (env order).
    """
    a = as_matrix(matrix)
    _square(a)
    if a.shape[0] != env.dim:
        raise DimensionMismatchError(f"Operator dimension {a.shape[0]} does not match space dimension {env.dim}")
    traced = list(traced)
    if not traced:
        return a.copy()
    if len(set(traced)) != len(traced):
        raise QWhileError(f"Repeated traced variable in {traced}")
    positions = sorted((env.index(t) for t in traced), reverse=True)
    dims = list(env.dims)
    tensor_form = a.reshape(dims + dims)
    n = len(dims)
    for pos in positions:
        tensor_form = np.trace(tensor_form, axis1=pos, axis2=pos + n)
        n -= 1
    kept = env.without(traced)
    return tensor_form.reshape(kept.dim, kept.dim)


def normalized_partial_trace(matrix: MatrixLike, traced: Sequence[str], env: Space) -> np.ndarray:
    """tr_W(A) / d_W; maps predicates to predicates."""
    d_traced = int(np.prod([env.dim_of(t) for t in traced], dtype=np.int64)) if traced else 1
    return partial_trace(matrix, traced, env) / d_traced


def expectation(observable: MatrixLike, rho: MatrixLike, tol: Optional[float] = None) -> float:
    """
    tr(A rho) for Hermitian A.

    Raises:
        NotHermitianError: if the trace has a non-negligible imaginary part
    """
    tol = TOLERANCES["eq"] if tol is None else tol
    a = as_matrix(observable)
    r = as_matrix(rho)
    _same_dimension(a, r, "observable and state")
    value = np.trace(a @ r)
    if abs(value.imag) > tol:
        raise NotHermitianError(f"tr(A rho) has imaginary part {value.imag:.3e}; inputs are corrupted")
    return float(value.real)


def compose(first: Superoperator, second: Superoperator,
            drop: Optional[float] = None) -> Superoperator:
    """
    Sequential composition: apply `first`, then `second`.

    Kraus operators with Frobenius norm below `drop` are discarded.
    """
    drop = TOLERANCES["kraus_drop"] if drop is None else drop
    if first.d_out != second.d_in:
        raise DimensionMismatchError(
            f"Cannot compose: first outputs dimension {first.d_out}, second expects {second.d_in}")
    products = [f @ e for e in first.kraus for f in second.kraus]
    kept = [k for k in products if np.linalg.norm(k) >= drop]
    if not kept:
        kept = [np.zeros((second.d_out, first.d_in), dtype=np.complex128)]
    return Superoperator(tuple(kept), first.space_in, second.space_out,
                         residual=first.residual + second.residual)


def channel_sum(channels: Sequence[Superoperator]) -> Superoperator:
    """Sum of channels (concatenated Kraus lists)."""
    if not channels:
        raise QWhileError("channel_sum needs at least one channel")
    kraus = [k for ch in channels for k in ch.kraus]
    return Superoperator(tuple(kraus), channels[0].space_in, channels[0].space_out,
                         residual=sum(ch.residual for ch in channels))


def identity_channel(dim: int, space: Optional[Space] = None) -> Superoperator:
    return Superoperator((identity(dim),), space, space)


def unitary_channel(unitary: MatrixLike, space: Optional[Space] = None) -> Superoperator:
    return Superoperator((as_matrix(unitary),), space, space)


def measurement_branch(operator: MatrixLike, space: Optional[Space] = None) -> Superoperator:
    """The map rho -> M rho M^dagger for one measurement outcome."""
    return Superoperator((as_matrix(operator),), space, space)


def amplitude_damping(gamma: float) -> Superoperator:
    """
    Qubit amplitude damping with decay probability gamma.

    E0 = [[1, 0], [0, sqrt(1 - gamma)]], E1 = [[0, sqrt(gamma)], [0, 0]].
    """
    if not 0.0 <= gamma <= 1.0:
        raise QWhileError(f"Damping probability must be in [0, 1], got {gamma}")
    e0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=np.complex128)
    e1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=np.complex128)
    return Superoperator((e0, e1))


def transfer_matrix(channel: Union[Superoperator, Sequence[np.ndarray]]) -> np.ndarray:
    """
    Natural representation T with vec(E(rho)) = T vec(rho) for row-major vec.
    """
    kraus = _kraus_of(channel)
    return sum(np.kron(k, k.conj()) for k in kraus)


def superoperator_from_transfer(transfer: np.ndarray, d_in: int, d_out: int,
                                drop: Optional[float] = None,
                                space_in: Optional[Space] = None,
                                space_out: Optional[Space] = None,
                                residual: float = 0.0) -> Superoperator:
    """
    Recover a Kraus representation from a transfer matrix via its Choi matrix.
    """
    drop = TOLERANCES["kraus_drop"] if drop is None else drop
    if transfer.shape != (d_out * d_out, d_in * d_in):
        raise DimensionMismatchError(
            f"Transfer matrix shape {transfer.shape} does not match {d_out}x{d_in} channel")
    choi = transfer.reshape(d_out, d_out, d_in, d_in).transpose(0, 2, 1, 3).reshape(d_out * d_in, d_out * d_in)
    values, vectors = np.linalg.eigh(hermitian_part(choi))
    kraus = [np.sqrt(v) * vectors[:, i].reshape(d_out, d_in)
             for i, v in enumerate(values) if v > drop ** 2]
    if not kraus:
        kraus = [np.zeros((d_out, d_in), dtype=np.complex128)]
    # Kraus recovery can overshoot sum E^dagger E <= I by round-off
    gram = sum(dagger(k) @ k for k in kraus)
    high = float(np.linalg.eigvalsh(hermitian_part(gram))[-1])
    if 1.0 < high <= 1.0 + TOLERANCES["psd"]:
        kraus = [k / np.sqrt(high) for k in kraus]
    return Superoperator(tuple(kraus), space_in, space_out, residual=residual)


def kraus_equivalent(first: Superoperator, second: Superoperator, tol: Optional[float] = None) -> bool:
    """True iff both channels act identically on every matrix (compares transfer matrices)."""
    tol = TOLERANCES["eq"] if tol is None else tol
    if (first.d_in, first.d_out) != (second.d_in, second.d_out):
        return False
    return bool(np.max(np.abs(transfer_matrix(first) - transfer_matrix(second))) <= tol)
