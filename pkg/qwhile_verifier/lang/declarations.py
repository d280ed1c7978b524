"""
Declarations - Variables, gates, measurements and named predicates of a program,
with the static checks applied when they are declared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import (
    DimensionLimitError,
    DimensionMismatchError,
    StaticCheckError,
    UnknownIdentifierError,
)
from ..core.operators import (
    Space,
    as_matrix,
    basis_vector,
    check_predicate_bounds,
    dagger,
    embed,
    identity,
)
from .ast import Case, Init, Program, Seq, Skip, Unitary, While

logger = logging.getLogger(__name__)

_SQRT_HALF = 1.0 / np.sqrt(2.0)

BUILTIN_GATES: Dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "H": _SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=np.complex128),
    "S": np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128),
    "CZ": np.diag([1, 1, 1, -1]).astype(np.complex128),
}


@dataclass(frozen=True, eq=False)
class NamedPredicate:
    """A declared predicate on a subset of the variables."""
    matrix: np.ndarray
    vars: Tuple[str, ...]


@dataclass(eq=False)
class Declarations:
    """
    Everything a program refers to by name.

    Variables keep declaration order; that order fixes the basis ordering of
    the full state space.
    """
    variables: Dict[str, int] = field(default_factory=dict)
    gates: Dict[str, np.ndarray] = field(default_factory=dict)
    measurements: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    predicates: Dict[str, NamedPredicate] = field(default_factory=dict)
    settings: Optional[Settings] = field(default=None, repr=False, compare=False)

    # ------------------------------------------------------------------ #
    # declaration with static checks
    # ------------------------------------------------------------------ #

    def add_variable(self, name: str, dim: int):
        if name in self.variables:
            raise StaticCheckError(f"Variable '{name}' declared twice")
        if dim < 1:
            raise StaticCheckError(f"Variable '{name}' must have a positive dimension, got {dim}")
        self.variables[name] = int(dim)
        self.space()  # enforces the dimension cap

    def add_gate(self, name: str, matrix: np.ndarray):
        if name in self.gates:
            raise StaticCheckError(f"Gate '{name}' declared twice")
        matrix = as_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise StaticCheckError(f"Gate '{name}' must be square, got shape {matrix.shape}")
        deviation = float(np.max(np.abs(dagger(matrix) @ matrix - identity(matrix.shape[0]))))
        if deviation > self._tol("eq"):
            raise StaticCheckError(
                f"Gate '{name}' is not unitary (max |U^dagger U - I| = {deviation:.3e})")
        if name in BUILTIN_GATES:
            logger.debug("Gate '%s' shadows the builtin gate of the same name", name)
        self.gates[name] = matrix

    def add_measurement(self, name: str, operators: Dict[str, np.ndarray]):
        if name in self.measurements:
            raise StaticCheckError(f"Measurement '{name}' declared twice")
        if not operators:
            raise StaticCheckError(f"Measurement '{name}' has no outcomes")
        ops = {str(label): as_matrix(m) for label, m in operators.items()}
        shapes = {m.shape for m in ops.values()}
        if len(shapes) != 1:
            raise StaticCheckError(f"Measurement '{name}' mixes operator shapes {sorted(shapes)}")
        dim = next(iter(shapes))[0]
        if next(iter(shapes))[1] != dim:
            raise StaticCheckError(f"Measurement '{name}' operators must be square")
        gram = sum(dagger(m) @ m for m in ops.values())
        deviation = float(np.max(np.abs(gram - identity(dim))))
        if deviation > self._tol("eq"):
            raise StaticCheckError(
                f"Measurement '{name}' is not complete (max |sum M^dagger M - I| = {deviation:.3e})")
        self.measurements[name] = ops

    def add_predicate(self, name: str, matrix: np.ndarray, vars: Sequence[str]):
        if name in self.predicates:
            raise StaticCheckError(f"Predicate '{name}' declared twice")
        vars = tuple(vars)
        self._require_distinct_vars(vars, f"predicate '{name}'")
        matrix = as_matrix(matrix)
        expected = self.space().subspace(vars).dim
        if matrix.shape != (expected, expected):
            raise DimensionMismatchError(
                f"Predicate '{name}' has shape {matrix.shape} but {list(vars)} has dimension {expected}")
        try:
            check_predicate_bounds(matrix, self._tol("herm"), self._tol("psd"), f"predicate '{name}'")
        except ValueError as exc:
            raise StaticCheckError(str(exc)) from exc
        self.predicates[name] = NamedPredicate(matrix, vars)

    # ------------------------------------------------------------------ #
    # lookups
    # ------------------------------------------------------------------ #

    def _tol(self, name: str) -> float:
        return resolve(self.settings).tol(name)

    def space(self) -> Space:
        """Full state space in declaration order."""
        space = Space(tuple(self.variables), tuple(self.variables.values()))
        cap = resolve(self.settings).budget("max_dimension")
        if space.dim > cap:
            raise DimensionLimitError(f"Total dimension {space.dim} exceeds the cap {cap}")
        return space

    def restricted(self, names: Sequence[str]) -> "Declarations":
        """Declarations over a subset of the variables, declaration order kept."""
        wanted = set(names)
        for n in wanted:
            if n not in self.variables:
                raise UnknownIdentifierError(f"Unknown variable '{n}'")
        sub = Declarations(settings=self.settings)
        sub.variables = {n: d for n, d in self.variables.items() if n in wanted}
        sub.gates = dict(self.gates)
        sub.measurements = dict(self.measurements)
        sub.predicates = {k: p for k, p in self.predicates.items() if set(p.vars) <= wanted}
        return sub

    def gate(self, name: str) -> np.ndarray:
        if name in self.gates:
            return self.gates[name]
        if name in BUILTIN_GATES:
            return BUILTIN_GATES[name]
        raise UnknownIdentifierError(f"Unknown gate '{name}'")

    def measurement(self, name: str) -> Dict[str, np.ndarray]:
        if name not in self.measurements:
            raise UnknownIdentifierError(f"Unknown measurement '{name}'")
        return self.measurements[name]

    def predicate(self, name: str) -> NamedPredicate:
        if name not in self.predicates:
            raise UnknownIdentifierError(f"Unknown predicate '{name}'")
        return self.predicates[name]

    def loop_labels(self, meas: str, continue_label: str) -> Tuple[str, str]:
        """(exit label, continue label) of a loop guard."""
        labels = list(self.measurement(meas))
        if len(labels) != 2:
            raise StaticCheckError(
                f"Loop measurement '{meas}' must have exactly 2 outcomes, has {len(labels)}")
        if continue_label not in labels:
            raise StaticCheckError(f"Loop label '{continue_label}' is not an outcome of '{meas}'")
        exit_label = labels[0] if labels[1] == continue_label else labels[1]
        return exit_label, continue_label

    # ------------------------------------------------------------------ #
    # operators embedded in the full space
    # ------------------------------------------------------------------ #

    def gate_operator(self, name: str, targets: Sequence[str], space: Optional[Space] = None) -> np.ndarray:
        space = self.space() if space is None else space
        return embed(self.gate(name), targets, space)

    def measurement_operators(self, name: str, targets: Sequence[str],
                              space: Optional[Space] = None) -> Dict[str, np.ndarray]:
        space = self.space() if space is None else space
        return {label: embed(m, targets, space) for label, m in self.measurement(name).items()}

    def loop_operators(self, loop: While, space: Optional[Space] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(M0, M1): the exit and continue operators of a loop, embedded."""
        exit_label, continue_label = self.loop_labels(loop.meas, loop.continue_label)
        ops = self.measurement_operators(loop.meas, loop.vars, space)
        return ops[exit_label], ops[continue_label]

    def init_kraus(self, var: str, space: Optional[Space] = None) -> List[np.ndarray]:
        """Kraus operators {|0><n|} of q := |0>, embedded."""
        space = self.space() if space is None else space
        d = space.dim_of(var)
        zero = basis_vector(0, d)
        return [embed(np.outer(zero, basis_vector(n, d)), [var], space) for n in range(d)]

    # ------------------------------------------------------------------ #
    # statement checks
    # ------------------------------------------------------------------ #

    def _require_distinct_vars(self, vars: Sequence[str], where: str):
        for v in vars:
            if v not in self.variables:
                raise UnknownIdentifierError(f"Unknown variable '{v}' in {where}")
        if len(set(vars)) != len(vars):
            raise StaticCheckError(f"Repeated variable in {where}: {list(vars)}")

    def _operand_dim(self, vars: Sequence[str]) -> int:
        return int(np.prod([self.variables[v] for v in vars], dtype=np.int64))

    def check_statement(self, program: Program):
        """
        Verify that a single statement (not its children) is well-typed.
        """
        if isinstance(program, Skip) or isinstance(program, Seq):
            return
        if isinstance(program, Init):
            self._require_distinct_vars([program.var], "initialization")
        elif isinstance(program, Unitary):
            matrix = self.gate(program.gate)
            self._require_distinct_vars(program.vars, f"apply {program.gate}")
            if matrix.shape[0] != self._operand_dim(program.vars):
                raise StaticCheckError(
                    f"Gate '{program.gate}' has dimension {matrix.shape[0]} but "
                    f"{list(program.vars)} has dimension {self._operand_dim(program.vars)}")
        elif isinstance(program, (Case, While)):
            ops = self.measurement(program.meas)
            self._require_distinct_vars(program.vars, f"measurement {program.meas}")
            dim = next(iter(ops.values())).shape[0]
            if dim != self._operand_dim(program.vars):
                raise StaticCheckError(
                    f"Measurement '{program.meas}' has dimension {dim} but "
                    f"{list(program.vars)} has dimension {self._operand_dim(program.vars)}")
            if isinstance(program, While):
                self.loop_labels(program.meas, program.continue_label)
            else:
                missing = [label for label in ops if label not in program.labels]
                extra = [label for label in program.labels if label not in ops]
                if missing or extra:
                    raise StaticCheckError(
                        f"Case on '{program.meas}' must cover outcomes {list(ops)}; "
                        f"missing {missing}, unknown {extra}")

    def check_program(self, program: Program):
        """Verify a whole program recursively."""
        self.check_statement(program)
        for _, child in program.children():
            self.check_program(child)
