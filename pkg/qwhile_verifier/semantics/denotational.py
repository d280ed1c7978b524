"""
Denotational - The semantic function of a program, either applied to one state
or computed as a whole Kraus superoperator.

Loops are unrolled forward. A state-level loop stops once the continue branch
carries less than loop_eps trace or after max_unroll iterations; the trace left
in the continue branch is reported as the truncation residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..config.tolerances import Settings
from ..core.errors import DimensionLimitError
from ..core.operators import Space, Superoperator, as_matrix, dagger, superoperator_from_transfer, transfer_matrix
from ..lang.ast import Case, Init, Program, Seq, Skip, Unitary, While
from ..lang.declarations import Declarations
from .kernel import ProgramKernel

logger = logging.getLogger(__name__)


@dataclass
class LoopStats:
    """
    Truncation bookkeeping accumulated over every loop evaluated.

    Attributes:
        unrollings: total loop iterations performed
        residual: trace (or worst-case trace) left in continue branches
        exhausted: some loop hit max_unroll before its residual fell below loop_eps
    """
    unrollings: int = 0
    residual: float = 0.0
    exhausted: bool = False
    loops: List[dict] = field(default_factory=list)

    def record(self, iterations: int, residual: float, exhausted: bool):
        self.unrollings += iterations
        self.residual += residual
        self.exhausted = self.exhausted or exhausted
        self.loops.append({'iterations': iterations, 'residual': residual, 'exhausted': exhausted})

    def to_dict(self):
        return {
            'unrollings': self.unrollings,
            'residual': self.residual,
            'exhausted': self.exhausted,
        }


class DenotationalSemantics:
    """
    ⟦P⟧ for programs over one set of declarations.
    """

    def __init__(self, decls: Declarations, space: Optional[Space] = None,
                 settings: Optional[Settings] = None):
        self.kernel = ProgramKernel(decls, space, settings)
        self.settings = self.kernel.settings

    @property
    def dim(self) -> int:
        return self.kernel.dim

    # ------------------------------------------------------------------ #
    # state level
    # ------------------------------------------------------------------ #

    def apply(self, program: Program, rho, stats: Optional[LoopStats] = None) -> np.ndarray:
        """
        ⟦program⟧(rho).

        Also accepts a stack of states of shape (n, d, d); loops then run until
        every state's continue branch is below loop_eps.
        """
        stats = LoopStats() if stats is None else stats
        return self._apply(program, np.asarray(rho, dtype=np.complex128), stats)

    def _apply(self, program: Program, rho: np.ndarray, stats: LoopStats) -> np.ndarray:
        if isinstance(program, Skip):
            return rho
        if isinstance(program, (Init, Unitary)):
            return sum(k @ rho @ dagger(k) for k in self.kernel.kraus(program))
        if isinstance(program, Seq):
            return self._apply(program.second, self._apply(program.first, rho, stats), stats)
        if isinstance(program, Case):
            ops = self.kernel.branches(program)
            return sum(self._apply(branch, ops[label] @ rho @ dagger(ops[label]), stats)
                       for label, branch in program.branches)
        if isinstance(program, While):
            return self._apply_loop(program, rho, stats)
        raise TypeError(f"Unknown program node {type(program).__name__}")

    def _apply_loop(self, loop: While, rho: np.ndarray, stats: LoopStats) -> np.ndarray:
        m0, m1 = self.kernel.loop(loop)
        eps = self.settings.tol("loop_eps")
        budget = self.settings.budget("max_unroll")
        result = np.zeros_like(rho)
        current = rho
        iterations = 0
        residual = 0.0
        while True:
            result = result + m0 @ current @ dagger(m0)
            continuing = m1 @ current @ dagger(m1)
            residual = float(np.max(np.real(np.trace(continuing, axis1=-2, axis2=-1)), initial=0.0))
            if residual < eps:
                break
            if iterations >= budget:
                logger.warning("Loop at %s truncated after %d unrollings (residual trace %.3e)",
                               loop.span(), iterations, residual)
                stats.record(iterations, residual, True)
                return result
            current = self._apply(loop.body, continuing, stats)
            iterations += 1
        logger.debug("Loop at %s: %d unrollings, residual %.3e", loop.span(), iterations, residual)
        stats.record(iterations, residual, False)
        return result

    # ------------------------------------------------------------------ #
    # superoperator level
    # ------------------------------------------------------------------ #

    def transfer(self, program: Program, stats: Optional[LoopStats] = None) -> np.ndarray:
        """Natural (transfer-matrix) representation of ⟦program⟧."""
        cap = self.settings.budget("max_superoperator_dimension")
        if self.dim > cap:
            raise DimensionLimitError(
                f"Superoperator denotation needs dimension <= {cap}, program space has {self.dim}")
        stats = LoopStats() if stats is None else stats
        return self._transfer(program, stats)

    def _transfer(self, program: Program, stats: LoopStats) -> np.ndarray:
        d = self.dim
        if isinstance(program, Skip):
            return np.eye(d * d, dtype=np.complex128)
        if isinstance(program, (Init, Unitary)):
            return transfer_matrix(self.kernel.kraus(program))
        if isinstance(program, Seq):
            return self._transfer(program.second, stats) @ self._transfer(program.first, stats)
        if isinstance(program, Case):
            ops = self.kernel.branches(program)
            return sum(self._transfer(branch, stats) @ transfer_matrix([ops[label]])
                       for label, branch in program.branches)
        if isinstance(program, While):
            return self._transfer_loop(program, stats)
        raise TypeError(f"Unknown program node {type(program).__name__}")

    def _transfer_loop(self, loop: While, stats: LoopStats) -> np.ndarray:
        """
        Sum over k of T0 (TB T1)^k, truncated by doubling the number of
        unrollings until the worst-case continue mass drops below loop_eps.
        """
        d = self.dim
        m0, m1 = self.kernel.loop(loop)
        t0 = transfer_matrix([m0])
        step = self._transfer(loop.body, stats) @ transfer_matrix([m1])
        eps = self.settings.tol("loop_eps")
        budget = self.settings.budget("max_unroll")
        vec_identity = np.eye(d, dtype=np.complex128).reshape(-1)
        partial = np.eye(d * d, dtype=np.complex128)   # sum_{k < n} C^k
        power = step                                    # C^n
        unrolled = 1
        while True:
            # worst-case trace still looping: max eig of (C^n)*(I)
            remaining = (dagger(power) @ vec_identity).reshape(d, d)
            residual = float(np.linalg.eigvalsh(0.5 * (remaining + dagger(remaining)))[-1])
            if residual < eps or unrolled >= budget:
                break
            partial = partial + power @ partial
            power = power @ power
            unrolled *= 2
        exhausted = residual >= eps
        if exhausted:
            logger.warning("Loop at %s truncated after %d unrollings (residual %.3e)",
                           loop.span(), unrolled, residual)
        stats.record(unrolled, max(residual, 0.0), exhausted)
        return t0 @ partial

    def denote(self, program: Program) -> Superoperator:
        """
        ⟦program⟧ as a Kraus superoperator on the full space; its residual is the
        summed truncation residual of the loops.
        """
        stats = LoopStats()
        transfer = self.transfer(program, stats)
        return superoperator_from_transfer(transfer, self.dim, self.dim,
                                           drop=self.settings.tol("kraus_drop"),
                                           space_in=self.kernel.space, space_out=self.kernel.space,
                                           residual=stats.residual)


def denote(program: Program, decls: Declarations, settings: Optional[Settings] = None) -> Superoperator:
    return DenotationalSemantics(decls, settings=settings).denote(program)


def denote_apply(program: Program, rho, decls: Declarations,
                 settings: Optional[Settings] = None) -> np.ndarray:
    """⟦program⟧(rho) as a matrix on the full declared space."""
    return DenotationalSemantics(decls, settings=settings).apply(program, as_matrix(rho))


def denote_apply_with_stats(program: Program, rho, decls: Declarations,
                            settings: Optional[Settings] = None):
    """(⟦program⟧(rho), LoopStats)."""
    stats = LoopStats()
    result = DenotationalSemantics(decls, settings=settings).apply(program, as_matrix(rho), stats)
    return result, stats
