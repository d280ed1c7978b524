"""
Derivation - Machine-checking a proof tree of rule applications.

Every node is rebuilt from the conclusions of its children; a node whose side
condition fails, or whose application is malformed, is reported (not raised)
and its ancestors are marked as resting on a failed premise. Formula leaves
are hypotheses and are always checked semantically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from ..config.tolerances import Settings, resolve
from ..core.base_checker import BaseChecker
from ..core.errors import QWhileError, SideConditionError
from ..core.verdict import Verdict
from ..lang.declarations import Declarations
from .formulas import CorrectnessFormula, check_triple
from .rules import RuleApplication, apply_rule

logger = logging.getLogger(__name__)

NodePath = Tuple[int, ...]


def node_name(path: NodePath) -> str:
    return "node" + "".join(f"/{i}" for i in path)


@dataclass
class DerivationReport:
    """
    Attributes:
        holds: every node's side conditions (and requested semantic checks) pass
        conclusion: the root conclusion when the whole tree checks
        verdicts: one verdict per node, plus semantic checks when requested
    """
    holds: bool = True
    conclusion: Optional[CorrectnessFormula] = None
    verdicts: List[Verdict] = field(default_factory=list)

    def failures(self) -> List[Verdict]:
        return [v for v in self.verdicts if not v.holds]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holds': self.holds,
            'nodes': len([v for v in self.verdicts if v.kind == "rule"]),
            'verdicts': [v.to_dict() for v in self.verdicts],
        }


class _Walker:
    def __init__(self, decls: Declarations, settings: Settings, semantic: bool, tol: Optional[float]):
        self.decls = decls
        self.settings = settings
        self.semantic = semantic
        self.tol = tol
        self.report = DerivationReport()

    def record(self, verdict: Verdict) -> Verdict:
        self.report.verdicts.append(verdict)
        self.report.holds = self.report.holds and verdict.holds
        return verdict

    def check_semantics(self, formula: CorrectnessFormula, path: NodePath, rule: str) -> bool:
        verdict = check_triple(formula, self.decls, self.tol, self.settings, name=f"{rule}.semantic")
        verdict.provenance = f"{rule}@{node_name(path)}.semantic"
        verdict.kind = "semantic"
        return self.record(verdict).holds

    def visit(self, node: Union[RuleApplication, CorrectnessFormula], path: NodePath) -> Optional[CorrectnessFormula]:
        if isinstance(node, CorrectnessFormula):
            return node if self.check_semantics(node, path, "hypothesis") else None
        if not isinstance(node, RuleApplication):
            raise QWhileError(f"Derivation nodes must be rule applications or formulas, got {type(node).__name__}")

        conclusions = [self.visit(child, path + (i,)) for i, child in enumerate(node.premises)]
        provenance = f"{node.rule}@{node_name(path)}"
        name = node.label or node.rule
        if any(c is None for c in conclusions):
            verdict = Verdict(name, False, -1.0, provenance=provenance, kind="rule")
            verdict.add_detail("condition", "premises are proved")
            self.record(verdict)
            return None

        rebuilt = RuleApplication(node.rule, tuple(conclusions), node.side, node.mode, node.label)
        try:
            conclusion = apply_rule(rebuilt, self.decls, self.settings)
        except SideConditionError as exc:
            margin = exc.margin if exc.margin is not None else -1.0
            verdict = Verdict(name, False, margin, provenance=provenance, kind="rule")
            verdict.add_detail("condition", exc.condition)
            if exc.detail:
                verdict.add_detail("detail", exc.detail)
            logger.info("%s: side condition '%s' fails", provenance, exc.condition)
            self.record(verdict)
            return None
        except QWhileError as exc:
            # malformed application: wrong premise count, missing side data
            verdict = Verdict(name, False, -1.0, provenance=provenance, kind="rule")
            verdict.add_detail("condition", "rule application is well formed")
            verdict.add_detail("detail", str(exc))
            logger.info("%s: malformed application: %s", provenance, exc)
            self.record(verdict)
            return None

        verdict = Verdict(name, True, 0.0, provenance=provenance, kind="rule")
        verdict.add_detail("mode", conclusion.mode)
        claim = node.claim
        if claim is not None and node.mode is None:
            claim = claim.with_mode(conclusion.mode)
        if claim is not None and not conclusion.same_as(claim, self.settings.tol("eq")):
            verdict.holds = False
            verdict.margin = -1.0
            verdict.add_detail("condition", "conclusion matches the claimed formula")
            self.record(verdict)
            return None
        self.record(verdict)
        if self.semantic and not self.check_semantics(conclusion, path, node.rule):
            return None
        return conclusion


def verify_derivation(tree: Union[RuleApplication, CorrectnessFormula], decls: Declarations,
                      settings: Optional[Settings] = None, semantic: bool = False,
                      tol: Optional[float] = None) -> DerivationReport:
    """
    Check a derivation tree.

    Args:
        tree: root rule application
        decls: Program declarations
        settings: tolerances and budgets
        semantic: also run check_triple on every node's conclusion
        tol: Loewner slack of the semantic checks

    Returns:
        DerivationReport; `holds` is true iff every node checks
    """
    walker = _Walker(decls, resolve(settings), semantic, tol)
    conclusion = walker.visit(tree, ())
    walker.report.conclusion = conclusion if walker.report.holds else None
    return walker.report


class DerivationChecker(BaseChecker):
    """
    Records the per-node verdicts of a derivation.
    """

    def __init__(self, decls: Declarations, settings: Optional[Settings] = None):
        super().__init__("Derivation Checker")
        self.decls = decls
        self.settings = resolve(settings)

    def run(self, tree: Union[RuleApplication, CorrectnessFormula], semantic: bool = False,
            tol: Optional[float] = None) -> bool:
        report = verify_derivation(tree, self.decls, self.settings, semantic, tol)
        for verdict in report.verdicts:
            self.add_verdict(verdict)
        self.results['nodes'] = report.to_dict()['nodes']
        self.results['conclusion_mode'] = report.conclusion.mode if report.conclusion else None
        return self.holds
