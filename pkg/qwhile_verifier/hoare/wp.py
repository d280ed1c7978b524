"""
WP - Weakest-precondition transformer ⟦P⟧* on predicates.

Several postconditions can be transformed together as a stack of shape
(n, d, d); every loop then runs one shared fixed-point iteration, so results
for different postconditions come from the same truncation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..config.tolerances import Settings
from ..core.operators import Space, as_matrix, dagger, eigenvalue_range, hermitian_part, project_to_predicate
from ..lang.ast import Case, Init, Program, Seq, Skip, Unitary, While
from ..lang.declarations import Declarations
from ..semantics.kernel import ProgramKernel

logger = logging.getLogger(__name__)


@dataclass
class WpStats:
    """
    Fixed-point bookkeeping over all loops transformed.

    Attributes:
        converged: every loop reached entrywise change < fix within max_iters
        iterations: total fixed-point iterations
        gap: largest final entrywise change of a loop that did not converge
        monotone: every iteration satisfied X_k <= X_{k+1}
    """
    converged: bool = True
    iterations: int = 0
    gap: float = 0.0
    monotone: bool = True
    loops: List[dict] = field(default_factory=list)

    def record(self, loop: While, iterations: int, change: float, converged: bool, monotone: bool):
        self.iterations += iterations
        self.converged = self.converged and converged
        self.monotone = self.monotone and monotone
        if not converged:
            self.gap = max(self.gap, change)
        self.loops.append({'loop': loop.span(), 'iterations': iterations,
                           'change': change, 'converged': converged, 'monotone': monotone})

    def to_dict(self):
        return {
            'converged': self.converged,
            'iterations': self.iterations,
            'gap': self.gap,
            'monotone': self.monotone,
        }


class WeakestPrecondition:
    """
    ⟦P⟧* for programs over one set of declarations.
    """

    def __init__(self, decls: Declarations, space: Optional[Space] = None,
                 settings: Optional[Settings] = None):
        self.kernel = ProgramKernel(decls, space, settings)
        self.settings = self.kernel.settings

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def transform(self, program: Program, post: np.ndarray, stats: Optional[WpStats] = None) -> np.ndarray:
        """
        Apply ⟦program⟧* to `post` (a matrix or a stack of matrices).
        """
        stats = WpStats() if stats is None else stats
        post = np.asarray(post, dtype=np.complex128)
        if post.shape[-2:] != (self.dim, self.dim):
            raise ValueError(f"Postcondition has shape {post.shape}, expected (..., {self.dim}, {self.dim})")
        return self._wp(program, post, stats)

    def _wp(self, program: Program, post: np.ndarray, stats: WpStats) -> np.ndarray:
        if isinstance(program, Skip):
            return post
        if isinstance(program, (Init, Unitary)):
            return sum(dagger(k) @ post @ k for k in self.kernel.kraus(program))
        if isinstance(program, Seq):
            return self._wp(program.first, self._wp(program.second, post, stats), stats)
        if isinstance(program, Case):
            ops = self.kernel.branches(program)
            return sum(dagger(ops[label]) @ self._wp(branch, post, stats) @ ops[label]
                       for label, branch in program.branches)
        if isinstance(program, While):
            return self._wp_loop(program, post, stats)
        raise TypeError(f"Unknown program node {type(program).__name__}")

    def _wp_loop(self, loop: While, post: np.ndarray, stats: WpStats) -> np.ndarray:
        """
        Least fixed point of X = M0† B M0 + M1† wp(body, X) M1, iterated from 0.
        """
        m0, m1 = self.kernel.loop(loop)
        fix = self.settings.tol("fix")
        psd = self.settings.tol("psd")
        budget = self.settings.budget("max_iters")
        exit_part = dagger(m0) @ post @ m0
        current = np.zeros_like(post)
        monotone = True
        change = float("inf")
        iterations = 0
        while iterations < budget:
            following = exit_part + dagger(m1) @ self._wp(loop.body, current, stats) @ m1
            iterations += 1
            difference = following - current
            change = float(np.max(np.abs(difference), initial=0.0))
            low = float(np.min(np.linalg.eigvalsh(hermitian_part_stack(difference)), initial=0.0))
            if low < -psd:
                if monotone:
                    logger.warning("Loop at %s: fixed-point iterate %d decreased (min eig %.3e)",
                                   loop.span(), iterations, low)
                monotone = False
            current = following
            if change < fix:
                break
        converged = change < fix
        if not converged:
            logger.warning("Loop at %s: wp iteration stopped after %d steps with change %.3e",
                           loop.span(), iterations, change)
        else:
            logger.debug("Loop at %s: wp converged after %d iterations", loop.span(), iterations)
        stats.record(loop, iterations, change, converged, monotone)
        return current


def hermitian_part_stack(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + np.conj(np.swapaxes(matrix, -1, -2)))


def wp_with_stats(program: Program, post, decls: Declarations,
                  settings: Optional[Settings] = None) -> Tuple[np.ndarray, WpStats]:
    stats = WpStats()
    result = WeakestPrecondition(decls, settings=settings).transform(program, np.asarray(post), stats)
    return result, stats


def wp_total(program: Program, post, decls: Declarations, settings: Optional[Settings] = None) -> np.ndarray:
    """
    ⟦program⟧*(post), the weakest precondition for total correctness.

    Args:
        program: Program
        post: postcondition on the full declared space
        decls: Program declarations
        settings: tolerances and budgets

    Returns:
        The precondition matrix (a lower bound with a logged gap when a loop
        did not converge)
    """
    return wp_with_stats(program, as_matrix(post), decls, settings)[0]


def clamp_predicate(matrix: np.ndarray, psd_tol: float) -> np.ndarray:
    """Leave `matrix` alone when it is a predicate within tolerance, else clamp its spectrum to [0, 1]."""
    low, high = eigenvalue_range(matrix)
    if low < -psd_tol or high > 1.0 + psd_tol:
        return project_to_predicate(matrix)
    return matrix


def wp_partial_with_stats(program: Program, post, decls: Declarations,
                          settings: Optional[Settings] = None) -> Tuple[np.ndarray, WpStats]:
    """
    ⟦P⟧*(B) + I − ⟦P⟧*(I), from one stacked run so that both terms share a truncation.
    """
    engine = WeakestPrecondition(decls, settings=settings)
    post = as_matrix(post)
    identity = np.eye(engine.dim, dtype=np.complex128)
    stats = WpStats()
    stacked = engine.transform(program, np.stack([post, identity]), stats)
    raw = stacked[0] + identity - stacked[1]
    return clamp_predicate(hermitian_part(raw), engine.settings.tol("psd")), stats


def wp_partial_bound(program: Program, post, decls: Declarations,
                     settings: Optional[Settings] = None) -> np.ndarray:
    """The partial-correctness bound ⟦P⟧*(B) + (I − ⟦P⟧*(I)), clamped into [0, I]."""
    return wp_partial_with_stats(program, post, decls, settings)[0]


def wp_for_mode(program: Program, post, decls: Declarations, mode: str,
                settings: Optional[Settings] = None) -> Tuple[np.ndarray, WpStats]:
    if mode == "total":
        return wp_with_stats(program, as_matrix(post), decls, settings)
    return wp_partial_with_stats(program, post, decls, settings)
