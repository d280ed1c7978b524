"""
Soundness - Executing a standard outline alongside its program.

Starting from ⟨P, rho⟩, the configuration ensemble is stepped and at every
reached ensemble {⟨P_i, rho_i⟩}:

    1. every live remainder P_i is at(T_i, P) for some subprogram T_i
    2. tr(A rho) <= Σ_i tr(B_i rho_i), with B_i = pre(T_i), or the outline
       postcondition B for terminated members
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.operators import as_matrix, expectation
from ..lang.ast import Path, Program
from ..lang.declarations import Declarations
from ..lang.printer import format_statement
from ..lang.structure import remainder_index
from ..semantics.operational import ConfigurationEnsemble, OperationalSemantics
from .standardize import StandardOutline

logger = logging.getLogger(__name__)


def dump_ensemble(ensemble: ConfigurationEnsemble) -> List[Dict[str, Any]]:
    return [{'remainder': "↓" if c.terminated else format_statement(c.remainder), 'trace': c.trace}
            for c in ensemble.members]


@dataclass
class SoundnessReport:
    """
    Attributes:
        holds: both clauses held at every checked ensemble
        steps: ensemble steps taken
        lhs: tr(A rho)
        margin: min over ensembles of Σ_i tr(B_i rho_i) − tr(A rho)
        clause1: every live remainder matched a subprogram
        exhausted: the step budget ran out before every member terminated
        violation: first violating step, its clause and the ensemble there
    """
    holds: bool = True
    steps: int = 0
    lhs: float = 0.0
    margin: float = np.inf
    clause1: bool = True
    exhausted: bool = False
    violation: Optional[Dict[str, Any]] = None
    sums: List[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holds': self.holds,
            'steps': self.steps,
            'lhs': self.lhs,
            'margin': self.margin,
            'clause1': self.clause1,
            'exhausted': self.exhausted,
            'violation': self.violation,
        }


def _right_side(standard: StandardOutline, ensemble: ConfigurationEnsemble,
                candidates: Dict[Program, List[Path]]) -> Tuple[float, List[int]]:
    """Σ_i tr(B_i rho_i) and the indices of live members matching no subprogram."""
    total = 0.0
    unmatched = []
    for index, member in enumerate(ensemble.members):
        if member.terminated:
            total += expectation(standard.outline.post, member.state)
            continue
        paths = candidates.get(member.remainder)
        if not paths:
            unmatched.append(index)
            continue
        total += max(expectation(standard.pre[p], member.state) for p in paths)
    return total, unmatched


def strong_soundness_trace(standard: StandardOutline, rho, decls: Declarations,
                           max_steps: Optional[int] = None, settings: Optional[Settings] = None,
                           tol: Optional[float] = None) -> SoundnessReport:
    """
    Check both clauses along the ensemble run from ⟨P, rho⟩.

    Args:
        standard: standard outline (its VCs should discharge)
        rho: initial partial density operator
        decls: Program declarations
        max_steps: ensemble step budget (default: max_steps budget)
        settings: tolerances and budgets
        tol: slack of the trace inequality (default: psd tolerance)

    Returns:
        SoundnessReport; on a violation, the step index and ensemble dump
    """
    settings = resolve(settings)
    tol = settings.tol("psd") if tol is None else tol
    max_steps = settings.budget("max_steps") if max_steps is None else max_steps
    semantics = OperationalSemantics(decls, settings=settings)
    candidates = remainder_index(standard.program)
    rho = as_matrix(rho)

    report = SoundnessReport(lhs=expectation(standard.outline.pre, rho))
    ensemble = semantics.initial(standard.program, rho)
    while True:
        total, unmatched = _right_side(standard, ensemble, candidates)
        report.sums.append(total)
        report.margin = min(report.margin, total - report.lhs)
        clause = None
        if unmatched:
            report.clause1 = False
            clause = 1
        elif total < report.lhs - tol:
            clause = 2
        if clause is not None and report.violation is None:
            report.holds = False
            report.violation = {'step': report.steps, 'clause': clause, 'sum': total,
                                'unmatched': unmatched, 'ensemble': dump_ensemble(ensemble)}
            logger.info("Clause %d fails at ensemble step %d", clause, report.steps)
        if not ensemble.live:
            break
        if ensemble.live_trace < settings.tol("loop_eps") and any(c.terminated for c in ensemble.members):
            logger.debug("Soundness trace: live trace below loop_eps after %d steps", report.steps)
            break
        if report.steps >= max_steps:
            report.exhausted = True
            logger.warning("Soundness trace stopped after %d steps with live trace %.3e",
                           report.steps, ensemble.live_trace)
            break
        ensemble = semantics.step_ensemble(ensemble)
        report.steps += 1
    logger.debug("Soundness trace: %d steps, margin %.3e", report.steps, report.margin)
    return report
