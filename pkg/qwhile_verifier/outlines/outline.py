"""
Outline - Proof outlines {A} P* {B}: an annotated program with a correctness
mode and, for total correctness, a ranking function per loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import InvalidPathError, QWhileError
from ..core.operators import check_predicate_bounds
from ..hoare.formulas import CorrectnessFormula, normalize_mode
from ..hoare.ranking import RankingSpec
from ..lang.ast import AnnotatedProgram, Annotation, Path, Program, While
from ..lang.declarations import Declarations
from ..lang.structure import resolve as resolve_path
from ..lang.structure import subprograms

logger = logging.getLogger(__name__)

# ("pre", statement path, index in chain) or ("post", block path, index in chain)
AnnotationKey = Tuple[str, Path, int]


@dataclass(frozen=True, eq=False)
class ProofOutline:
    """
    A proof outline.

    Attributes:
        annotated: program with annotation chains
        mode: "partial" or "total"
        rankings: loop path -> ranking function (total mode)
    """
    annotated: AnnotatedProgram
    mode: str = "partial"
    rankings: Dict[Path, RankingSpec] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if self.annotated.precondition is None:
            raise QWhileError("A proof outline needs a leading predicate before its first statement")
        if self.annotated.postcondition is None:
            raise QWhileError("A proof outline needs a trailing predicate after its last statement")
        object.__setattr__(self, "rankings", {tuple(k): v for k, v in self.rankings.items()})

    @property
    def program(self) -> Program:
        return self.annotated.program

    @property
    def pre(self) -> np.ndarray:
        return self.annotated.precondition.matrix

    @property
    def post(self) -> np.ndarray:
        return self.annotated.postcondition.matrix

    def formula(self) -> CorrectnessFormula:
        """The outer triple {A} P {B} the outline proves."""
        return CorrectnessFormula(self.pre, self.program, self.post, self.mode)

    def loops(self) -> List[Tuple[Path, While]]:
        return [(path, node) for path, node in subprograms(self.program) if isinstance(node, While)]

    def annotations(self) -> Iterator[Tuple[AnnotationKey, Annotation]]:
        for kind, chains in (("pre", self.annotated.pre), ("post", self.annotated.post)):
            for path, chain in sorted(chains.items(), key=lambda item: [str(s) for s in item[0]]):
                for index, annotation in enumerate(chain):
                    yield (kind, path, index), annotation

    def boundary_keys(self) -> Tuple[AnnotationKey, AnnotationKey]:
        """Keys of the outer precondition and postcondition."""
        post_chain = self.annotated.post.get((), ())
        return ("pre", self.annotated.entry_path(), 0), ("post", (), len(post_chain) - 1)

    def validate(self, decls: Declarations, settings: Optional[Settings] = None):
        """
        Check the outline syntactically: the program is well typed, every
        annotation is a predicate on the full space, annotation paths exist and
        every ranking function is attached to a loop.
        """
        settings = resolve(settings)
        decls.check_program(self.program)
        d = decls.space().dim
        for (kind, path, index), annotation in self.annotations():
            where = f"annotation {kind}{list(path)}[{index}]"
            if annotation.loc is not None:
                where += f" at {annotation.loc}"
            if annotation.matrix.shape != (d, d):
                raise QWhileError(f"{where} has shape {annotation.matrix.shape}, program space has dimension {d}")
            check_predicate_bounds(annotation.matrix, settings.tol("herm"), settings.tol("psd"), where)
            try:
                resolve_path(self.program, path)
            except InvalidPathError:
                raise InvalidPathError(f"{where} does not address a subprogram") from None
        for path in self.rankings:
            if not isinstance(resolve_path(self.program, path), While):
                raise QWhileError(f"Ranking function attached to {list(path)}, which is not a loop")

    def with_annotated(self, annotated: AnnotatedProgram) -> "ProofOutline":
        return ProofOutline(annotated, self.mode, dict(self.rankings))


def delete_annotations(outline: ProofOutline, keys: Iterable[AnnotationKey]) -> ProofOutline:
    """
    Drop annotations from an outline.

    Args:
        outline: the outline
        keys: ("pre" | "post", path, index) of each annotation to delete

    Returns:
        A new outline; the outer pre- and postcondition cannot be deleted
    """
    doomed = set()
    first, last = outline.boundary_keys()
    for key in keys:
        key = (key[0], tuple(key[1]), int(key[2]))
        if key in (first, last):
            raise QWhileError(f"Cannot delete the outer {'precondition' if key == first else 'postcondition'}")
        doomed.add(key)

    def keep(kind: str, chains):
        result = {}
        for path, chain in chains.items():
            kept = tuple(a for i, a in enumerate(chain) if (kind, path, i) not in doomed)
            if kept:
                result[path] = kept
        return result

    annotated = AnnotatedProgram(outline.program, keep("pre", outline.annotated.pre),
                                 keep("post", outline.annotated.post))
    logger.debug("Deleted %d annotations", len(doomed))
    return outline.with_annotated(annotated)


def outline_from(annotated: AnnotatedProgram, mode: str = "partial",
                 rankings: Optional[Dict[Path, RankingSpec]] = None) -> ProofOutline:
    if not isinstance(annotated, AnnotatedProgram):
        raise QWhileError("Program carries no annotations; an outline needs at least {A} and {B}")
    return ProofOutline(annotated, mode, dict(rankings or {}))
