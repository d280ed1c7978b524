"""
Discharge - Deciding verification conditions, and the outline checker that
runs the whole pipeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from ..config.tolerances import Settings, resolve
from ..core.base_checker import BaseChecker
from ..core.errors import QWhileError
from ..core.operators import loewner_leq
from ..core.verdict import Verdict
from ..hoare.formulas import check_triple
from ..hoare.ranking import RankingChecker
from ..lang.declarations import Declarations
from .outline import ProofOutline
from .soundness import strong_soundness_trace
from .standardize import standardize
from .vcgen import VerificationCondition, vcgen

logger = logging.getLogger(__name__)


@dataclass
class DischargeReport:
    holds: bool = True
    verdicts: List[Verdict] = field(default_factory=list)

    def failures(self) -> List[Verdict]:
        return [v for v in self.verdicts if not v.holds]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holds': self.holds,
            'count': len(self.verdicts),
            'failed': [v.provenance for v in self.failures()],
        }


def _ranking_verdicts(vc: VerificationCondition, decls: Optional[Declarations],
                      settings: Settings) -> List[Verdict]:
    if vc.ranking is None:
        verdict = Verdict(vc.rule, False, -1.0, provenance=vc.provenance, kind="ranking")
        verdict.add_detail("condition", "a ranking function is supplied for the loop")
        return [verdict]
    if decls is None:
        raise QWhileError(f"{vc.provenance}: ranking obligations need the program declarations")
    checker = RankingChecker(decls, settings)
    checker.run(vc.loop, vc.ranking, target=vc.rhs, provenance=vc.provenance)
    return checker.verdicts


def discharge(vcs: Sequence[VerificationCondition], tol: Optional[float] = None,
              decls: Optional[Declarations] = None, settings: Optional[Settings] = None) -> DischargeReport:
    """
    Decide every obligation: lhs <= rhs by the minimum eigenvalue of rhs − lhs,
    ranking obligations by the two ranking conditions.

    Args:
        vcs: output of vcgen
        tol: eigenvalue slack (default: psd tolerance)
        decls: declarations, needed only for ranking obligations
        settings: tolerances and budgets

    Returns:
        DischargeReport with one verdict per obligation (two per ranking check)
    """
    settings = resolve(settings)
    tol = settings.tol("psd") if tol is None else tol
    report = DischargeReport()
    for vc in vcs:
        if vc.kind == "ranking":
            verdicts = _ranking_verdicts(vc, decls, settings)
        else:
            order = loewner_leq(vc.lhs, vc.rhs, tol, settings.tol("herm"))
            verdict = Verdict(vc.rule, order.holds, order.min_eig, order.witness,
                              provenance=vc.provenance, kind="vc")
            if vc.path is not None:
                verdict.add_detail("path", list(vc.path))
            verdicts = [verdict]
        for verdict in verdicts:
            report.verdicts.append(verdict)
            report.holds = report.holds and verdict.holds
    logger.debug("Discharged %d obligations, %d failed", len(report.verdicts), len(report.failures()))
    return report


class OutlineChecker(BaseChecker):
    """
    standardize -> vcgen -> discharge, then optionally the outer triple and
    the strong-soundness trace from given initial states.
    """

    def __init__(self, decls: Declarations, settings: Optional[Settings] = None):
        super().__init__("Outline Checker")
        self.decls = decls
        self.settings = resolve(settings)
        self.standard = None
        self.conditions: List[VerificationCondition] = []

    def run(self, outline: ProofOutline, tol: Optional[float] = None, outer: bool = False,
            states: Sequence = (), max_steps: Optional[int] = None) -> bool:
        self.standard = standardize(outline, self.decls, self.settings)
        self.conditions = vcgen(self.standard, self.decls, self.settings)
        report = discharge(self.conditions, tol, self.decls, self.settings)
        for verdict in report.verdicts:
            self.add_verdict(verdict)
        self.results['standard'] = self.standard.to_dict()
        self.results['vc_count'] = sum(vc.kind == "vc" for vc in self.conditions)
        self.results['ranking_count'] = sum(vc.kind == "ranking" for vc in self.conditions)

        if outer:
            self.add_verdict(check_triple(outline.formula(), self.decls, tol, self.settings, name="outline.outer"))
        traces = []
        for index, rho in enumerate(states):
            trace = strong_soundness_trace(self.standard, rho, self.decls, max_steps, self.settings)
            verdict = Verdict("strong_soundness", trace.holds, trace.margin,
                              provenance=f"soundness@state{index}", kind="soundness")
            verdict.add_detail("steps", trace.steps)
            verdict.add_detail("clause1", trace.clause1)
            if trace.violation is not None:
                verdict.add_detail("violation", trace.violation)
            self.add_verdict(verdict)
            traces.append(trace.to_dict())
        if traces:
            self.results['soundness'] = traces
        return self.holds
