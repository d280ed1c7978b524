"""
Kernel - Embedded operators for the statements of a program, computed once per
statement and shared by every semantics and transformer.
"""

from typing import Dict, Optional, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.operators import Space
from ..lang.ast import Case, Init, Program, Unitary, While
from ..lang.declarations import Declarations


class ProgramKernel:
    """
    Cache of full-space operators keyed by statement.

    Statements compare structurally, so equal statements share one entry.
    """

    def __init__(self, decls: Declarations, space: Optional[Space] = None,
                 settings: Optional[Settings] = None):
        self.decls = decls
        self.space = decls.space() if space is None else space
        self.settings = resolve(settings if settings is not None else decls.settings)
        self._cache: Dict[Tuple[str, Program], object] = {}

    @property
    def dim(self) -> int:
        return self.space.dim

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128)

    def kraus(self, program: Program) -> Tuple[np.ndarray, ...]:
        """Kraus operators of an Init or Unitary statement."""
        key = ("kraus", program)
        if key not in self._cache:
            if isinstance(program, Init):
                ops = tuple(self.decls.init_kraus(program.var, self.space))
            elif isinstance(program, Unitary):
                ops = (self.decls.gate_operator(program.gate, program.vars, self.space),)
            else:
                raise TypeError(f"{program.kind} statements have no single Kraus list")
            self._cache[key] = ops
        return self._cache[key]

    def branches(self, program: Case) -> Dict[str, np.ndarray]:
        """Embedded measurement operator per case label."""
        key = ("case", program)
        if key not in self._cache:
            self._cache[key] = self.decls.measurement_operators(program.meas, program.vars, self.space)
        return self._cache[key]

    def loop(self, program: While) -> Tuple[np.ndarray, np.ndarray]:
        """(M0, M1) of a loop guard: exit and continue operators."""
        key = ("loop", program)
        if key not in self._cache:
            self._cache[key] = self.decls.loop_operators(program, self.space)
        return self._cache[key]
