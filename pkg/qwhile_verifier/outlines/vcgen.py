"""
VC Generation - Verification conditions of a standard proof outline.

Each boundary between adjacent predicates yields one Loewner obligation
lhs <= rhs, named after the formation rule that demands it. Loops of a
total-correctness outline also yield a ranking obligation (kind "ranking")
whose target is M1†BM1 for the body precondition B.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import DimensionMismatchError
from ..core.verdict import encode_matrix
from ..hoare.ranking import RankingSpec
from ..lang.ast import Path, While
from ..lang.declarations import Declarations
from .standardize import OutlineWalker, StandardOutline

logger = logging.getLogger(__name__)

VC_KINDS = ("vc", "ranking")


@dataclass(frozen=True, eq=False)
class VerificationCondition:
    """
    One obligation.

    Attributes:
        lhs, rhs: predicates with lhs <= rhs required (lhs is None for ranking
            obligations, whose rhs is the ranking target)
        rule: formation rule that produced it
        provenance: "rule@line:col"
        path: subprogram path the obligation belongs to (None between adjacent annotations)
        kind: "vc" or "ranking"
        loop: the loop of a ranking obligation
        ranking: its ranking function, when the outline supplies one
    """
    lhs: Optional[np.ndarray]
    rhs: np.ndarray
    rule: str
    provenance: str
    path: Optional[Path] = None
    kind: str = "vc"
    loop: Optional[While] = field(default=None, repr=False)
    ranking: Optional[RankingSpec] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in VC_KINDS:
            raise ValueError(f"Unknown obligation kind '{self.kind}'")
        if self.lhs is not None and np.shape(self.lhs) != np.shape(self.rhs):
            raise DimensionMismatchError(
                f"{self.provenance}: sides have shapes {np.shape(self.lhs)} and {np.shape(self.rhs)}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rule': self.rule,
            'provenance': self.provenance,
            'kind': self.kind,
            'path': None if self.path is None else list(self.path),
            'lhs': encode_matrix(self.lhs),
            'rhs': encode_matrix(self.rhs),
        }


def vcgen(standard: StandardOutline, decls: Declarations,
          settings: Optional[Settings] = None) -> List[VerificationCondition]:
    """
    Generate the verification conditions of a standard outline.

    Args:
        standard: output of standardize
        decls: Program declarations
        settings: tolerances and budgets

    Returns:
        Obligations in generation order; repeated provenances get a "#n" suffix
    """
    outline = standard.outline
    conditions: List[VerificationCondition] = []
    seen: Dict[str, int] = {}

    def emit(rule, lhs, rhs, position, path, kind="vc", loop=None):
        provenance = f"{rule}@{position}" if kind == "vc" else f"ranking@{position}"
        seen[provenance] = seen.get(provenance, 0) + 1
        if seen[provenance] > 1:
            provenance = f"{provenance}#{seen[provenance]}"
        ranking = outline.rankings.get(path) if kind == "ranking" else None
        conditions.append(VerificationCondition(lhs, rhs, rule, provenance, path, kind, loop, ranking))

    OutlineWalker(outline, decls, resolve(settings), infer=False, emit=emit).walk()
    logger.debug("Generated %d verification conditions (%d ranking)", len(conditions),
                 sum(vc.kind == "ranking" for vc in conditions))
    return conditions
