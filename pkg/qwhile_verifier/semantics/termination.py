"""
Termination - Probability of termination as a function of the number of loop
unrollings.

States are tracked per grade, the total number of continue transitions taken
so far (over every loop, nested loops included). t_k is the trace of the mass
that terminated with grade at most k.
"""

import logging
from typing import Dict, List, Optional

import numpy as np

from ..config.tolerances import Settings
from ..core.operators import Space, as_matrix, dagger
from ..lang.ast import Case, Init, Program, Seq, Skip, Unitary, While
from ..lang.declarations import Declarations
from .kernel import ProgramKernel

logger = logging.getLogger(__name__)

Graded = Dict[int, np.ndarray]


def _add(target: Graded, grade: int, matrix: np.ndarray):
    if grade in target:
        target[grade] = target[grade] + matrix
    else:
        target[grade] = matrix


class GradedEvaluator:
    """Forward evaluation that keeps states separated by unrolling count."""

    def __init__(self, decls: Declarations, space: Optional[Space] = None,
                 settings: Optional[Settings] = None):
        self.kernel = ProgramKernel(decls, space, settings)

    def run(self, program: Program, states: Graded, max_grade: int) -> Graded:
        if not states:
            return {}
        if isinstance(program, Skip):
            return states
        if isinstance(program, (Init, Unitary)):
            kraus = self.kernel.kraus(program)
            return {g: sum(k @ rho @ dagger(k) for k in kraus) for g, rho in states.items()}
        if isinstance(program, Seq):
            return self.run(program.second, self.run(program.first, states, max_grade), max_grade)
        if isinstance(program, Case):
            ops = self.kernel.branches(program)
            result: Graded = {}
            for label, branch in program.branches:
                m = ops[label]
                for g, rho in self.run(branch, {g: m @ r @ dagger(m) for g, r in states.items()},
                                       max_grade).items():
                    _add(result, g, rho)
            return result
        if isinstance(program, While):
            m0, m1 = self.kernel.loop(program)
            result = {}
            current = states
            # every pass raises the smallest live grade, so this ends after max_grade + 1 passes
            while current:
                for g, rho in current.items():
                    _add(result, g, m0 @ rho @ dagger(m0))
                continuing = {g + 1: m1 @ rho @ dagger(m1) for g, rho in current.items() if g + 1 <= max_grade}
                current = self.run(program.body, continuing, max_grade)
            return result
        raise TypeError(f"Unknown program node {type(program).__name__}")


def termination_prob(program: Program, rho, decls: Declarations, max_unrollings: int,
                     settings: Optional[Settings] = None) -> List[float]:
    """
    Termination probabilities t_0, ..., t_N.

    Args:
        program: Program to run
        rho: initial partial density operator on the full space
        decls: Program declarations
        max_unrollings: N, the largest number of continue transitions counted

    Returns:
        Nondecreasing list [t_0, ..., t_N]
    """
    evaluator = GradedEvaluator(decls, settings=settings)
    final = evaluator.run(program, {0: as_matrix(rho)}, max_unrollings)
    per_grade = np.zeros(max_unrollings + 1)
    for g, state in final.items():
        per_grade[g] += float(np.trace(state).real)
    sequence = np.cumsum(per_grade)
    logger.debug("Termination probability after %d unrollings: %.12f", max_unrollings, sequence[-1])
    return [float(t) for t in sequence]
