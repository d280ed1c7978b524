"""
Standardize - Completing a proof outline so that every subprogram is preceded
by exactly one predicate pre(Q).

Missing predicates are filled in backwards: a statement without annotation
gets the precondition its formation rule demands of the predicate that
follows it. User annotations are never altered. Loops need a user invariant in
partial correctness (either before the loop or at the start of its body); in
total correctness a missing one is inferred from the weakest precondition of
the loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import QWhileError
from ..core.operators import dagger, hermitian_part
from ..hoare.wp import WeakestPrecondition
from ..lang.ast import (BODY, AnnotatedProgram, Annotation, Case, Init, Path, Program, Seq, Skip,
                        Unitary, While, first_statement_path)
from ..lang.declarations import Declarations
from .outline import ProofOutline

logger = logging.getLogger(__name__)

# formation rule of each statement kind, by correctness mode
FORMATION_RULES = {
    "skip": "Ax.Sk′",
    "init": "Ax.In′",
    "unitary": "Ax.UT′",
    "case": "R.IF′",
    ("while", "partial"): "R.LP′",
    ("while", "total"): "R.LT′",
}
WEAKEN = "R.Or′"


def formation_rule(node: Program, mode: str) -> str:
    if isinstance(node, While):
        return FORMATION_RULES[("while", mode)]
    return FORMATION_RULES[node.kind]


def where(node: Optional[Program], path: Path, annotation: Optional[Annotation] = None) -> str:
    """Source position for provenance strings: annotation, then statement, then path."""
    if annotation is not None and annotation.loc is not None:
        return str(annotation.loc)
    if node is not None and getattr(node, "loc", None) is not None:
        return node.span()
    return "path:" + ("/".join(str(s) for s in path) or "root")


# emit(rule, lhs, rhs, position, path, kind, loop)
Emit = Callable[..., None]


class OutlineWalker:
    """
    Backward pass over an outline.

    With `infer` set, statements without annotation receive the predicate
    their formation rule requires; otherwise such a statement is an error.
    `emit` receives one call per obligation (Loewner pair or ranking).
    """

    def __init__(self, outline: ProofOutline, decls: Declarations, settings: Optional[Settings] = None,
                 infer: bool = True, emit: Optional[Emit] = None):
        self.outline = outline
        self.mode = outline.mode
        self.engine = WeakestPrecondition(decls, settings=resolve(settings))
        self.kernel = self.engine.kernel
        self.infer = infer
        self.emit = emit if emit is not None else (lambda *args, **kwargs: None)
        self.pre_chains: Dict[Path, Tuple[Annotation, ...]] = dict(outline.annotated.pre)
        self.post_chains = outline.annotated.post
        self.pre: Dict[Path, np.ndarray] = {}
        self.inferred: List[Path] = []

    def walk(self):
        root = self.post_chains.get((), ())
        self.weaken_chain(root)
        self.visit(self.outline.program, (), root[0].matrix)

    def weaken_chain(self, chain: Sequence[Annotation]):
        for earlier, later in zip(chain, chain[1:]):
            self.emit(WEAKEN, earlier.matrix, later.matrix, where(None, (), later), None)

    def block_post(self, path: Path, target: np.ndarray) -> np.ndarray:
        """The predicate right after the last statement of the block at `path`."""
        chain = self.post_chains.get(path, ())
        if not chain:
            return target
        self.weaken_chain(chain)
        self.emit(WEAKEN, chain[-1].matrix, target, where(None, path, chain[-1]) + ">", path)
        return chain[0].matrix

    def visit(self, node: Program, path: Path, post: np.ndarray) -> np.ndarray:
        """Process `node` with `post` following it; return the first predicate before it."""
        if isinstance(node, Seq):
            middle = self.visit(node.second, path + (1,), post)
            first = self.visit(node.first, path + (0,), middle)
            self.pre[path] = self.pre[path + (0,)]
            return first

        chain = self.pre_chains.get(path, ())
        if isinstance(node, While):
            required = self.loop(node, path, post, chain)
        else:
            required = self.local(node, path, post)

        if chain:
            self.weaken_chain(chain)
            self.emit(formation_rule(node, self.mode), chain[-1].matrix, required, where(node, path), path)
            self.pre[path] = chain[-1].matrix
            return chain[0].matrix
        if not self.infer:
            raise QWhileError(f"Statement at {where(node, path)} has no preceding predicate; "
                              f"standardize the outline first")
        self.pre_chains[path] = (Annotation(required),)
        self.pre[path] = self.pre_chains[path][0].matrix
        self.inferred.append(path)
        return self.pre[path]

    def local(self, node: Program, path: Path, post: np.ndarray) -> np.ndarray:
        if isinstance(node, Skip):
            return post
        if isinstance(node, (Init, Unitary)):
            return hermitian_part(sum(dagger(k) @ post @ k for k in self.kernel.kraus(node)))
        if isinstance(node, Case):
            ops = self.kernel.branches(node)
            total = np.zeros_like(post)
            for label, branch in node.branches:
                branch_path = path + (label,)
                first = self.visit(branch, branch_path, self.block_post(branch_path, post))
                total = total + dagger(ops[label]) @ first @ ops[label]
            return hermitian_part(total)
        raise TypeError(f"Unknown program node {type(node).__name__}")

    def loop(self, node: While, path: Path, post: np.ndarray, chain: Sequence[Annotation]) -> np.ndarray:
        """
        The loop precondition M0†AM0 + M1†BM1 for the exit predicate A and
        the body precondition B.
        """
        m0, m1 = self.kernel.loop(node)
        body_path = path + (BODY,)
        exit_part = dagger(m0) @ post @ m0
        body_chain = self.pre_chains.get(first_statement_path(node.body, body_path), ())
        if body_chain:
            target = hermitian_part(exit_part + dagger(m1) @ body_chain[0].matrix @ m1)
        elif chain:
            target = chain[-1].matrix
        elif self.mode == "total" and self.infer:
            target = hermitian_part(self.engine.transform(node, post))
            logger.debug("Loop at %s: invariant inferred from the weakest precondition", node.span())
        else:
            raise QWhileError(f"Loop at {node.span()} needs an invariant annotation before it or at the "
                              f"start of its body in partial correctness")
        body_pre = self.visit(node.body, body_path, self.block_post(body_path, target))
        continue_part = hermitian_part(dagger(m1) @ body_pre @ m1)
        if self.mode == "total":
            self.emit(formation_rule(node, self.mode), None, continue_part, where(node, path), path,
                      kind="ranking", loop=node)
        return hermitian_part(exit_part + continue_part)


@dataclass(frozen=True, eq=False)
class StandardOutline:
    """
    An outline in which every subprogram Q has one preceding predicate.

    Attributes:
        outline: the completed outline (inferred annotations inserted)
        pre: subprogram path -> pre(Q)
        inferred: statement paths whose annotation was inserted
    """
    outline: ProofOutline
    pre: Dict[Path, np.ndarray]
    inferred: Tuple[Path, ...] = ()

    @property
    def mode(self) -> str:
        return self.outline.mode

    @property
    def program(self) -> Program:
        return self.outline.program

    def pre_of(self, path: Path) -> np.ndarray:
        try:
            return self.pre[tuple(path)]
        except KeyError:
            raise QWhileError(f"No subprogram at {list(path)}") from None

    def same_as(self, other: "StandardOutline", tol: float = 0.0) -> bool:
        if set(self.pre) != set(other.pre) or self.mode != other.mode:
            return False
        return all(float(np.max(np.abs(self.pre[p] - other.pre[p]), initial=0.0)) <= tol for p in self.pre)

    def to_dict(self):
        return {
            'mode': self.mode,
            'subprograms': len(self.pre),
            'inferred': [list(p) for p in self.inferred],
        }


def standardize(outline: ProofOutline, decls: Declarations, settings: Optional[Settings] = None) -> StandardOutline:
    """
    Insert the missing intermediate predicates of an outline.

    Args:
        outline: the outline; it is validated first
        decls: Program declarations
        settings: tolerances and budgets

    Returns:
        StandardOutline with pre(Q) for every subprogram path

    Raises:
        QWhileError: a loop in a partial-correctness outline has no invariant
    """
    settings = resolve(settings)
    outline.validate(decls, settings)
    walker = OutlineWalker(outline, decls, settings, infer=True)
    walker.walk()
    annotated = AnnotatedProgram(outline.program, walker.pre_chains, dict(outline.annotated.post))
    logger.debug("Standardized outline: %d subprograms, %d inferred annotations",
                 len(walker.pre), len(walker.inferred))
    return StandardOutline(outline.with_annotated(annotated), walker.pre, tuple(walker.inferred))
