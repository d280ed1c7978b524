"""
AST - Immutable syntax tree of quantum while-programs and annotated programs.

Subprograms are addressed by paths: tuples whose steps are 0/1 for the two
halves of a Seq, the outcome label for a Case branch and "body" for the body
of a While.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

Path = Tuple[Union[int, str], ...]
BODY = "body"


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class Program:
    """Base class of all program nodes."""

    kind = "program"

    def children(self) -> Iterator[Tuple[Union[int, str], "Program"]]:
        return iter(())

    def span(self) -> str:
        loc = getattr(self, "loc", None)
        return str(loc) if loc is not None else "?"


@dataclass(frozen=True)
class Skip(Program):
    loc: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    kind = "skip"


@dataclass(frozen=True)
class Init(Program):
    """q := |0>"""
    var: str
    loc: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    kind = "init"


@dataclass(frozen=True)
class Unitary(Program):
    """q1, ..., qn := U[q1, ..., qn]"""
    gate: str
    vars: Tuple[str, ...]
    loc: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    kind = "unitary"


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program
    loc: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    kind = "seq"

    def children(self):
        yield 0, self.first
        yield 1, self.second


@dataclass(frozen=True)
class Case(Program):
    """case M[q] = m -> P_m end; branches in declaration order of the labels."""
    meas: str
    vars: Tuple[str, ...]
    branches: Tuple[Tuple[str, Program], ...]
    loc: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    kind = "case"

    def children(self):
        yield from self.branches

    def branch(self, label: str) -> Program:
        for name, program in self.branches:
            if name == label:
                return program
        raise KeyError(label)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.branches)


@dataclass(frozen=True)
class While(Program):
    """while M[q] == continue_label do body od"""
    meas: str
    vars: Tuple[str, ...]
    continue_label: str
    body: Program
    loc: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    kind = "while"

    def children(self):
        yield BODY, self.body


def seq_of(statements: List[Program], loc: Optional[SourceSpan] = None) -> Program:
    """Left-associated sequence of statements; the empty sequence is skip."""
    if not statements:
        return Skip(loc)
    program = statements[0]
    for statement in statements[1:]:
        program = Seq(program, statement, statement.loc if loc is None else loc)
    return program


def statement_path(count: int, index: int) -> Path:
    """Path of the index-th statement inside a left-associated sequence of `count`."""
    if count == 1:
        return ()
    if index == count - 1:
        return (1,)
    return (0,) + statement_path(count - 1, index)


def flatten_seq(program: Program) -> List[Program]:
    if isinstance(program, Seq):
        return flatten_seq(program.first) + flatten_seq(program.second)
    return [program]


@dataclass(frozen=True, eq=False)
class Annotation:
    """A predicate annotation on the full space, with its source text."""
    matrix: np.ndarray
    text: str = ""
    loc: Optional[SourceSpan] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.complex128, copy=True)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def same_as(self, other: "Annotation") -> bool:
        return self.matrix.shape == other.matrix.shape and bool(np.array_equal(self.matrix, other.matrix))


@dataclass(frozen=True, eq=False)
class AnnotatedProgram:
    """
    A program with annotation chains.

    Attributes:
        program: the underlying Program
        pre: statement path -> chain of annotations preceding that statement
        post: block path -> chain of annotations closing that block
    """
    program: Program
    pre: Dict[Path, Tuple[Annotation, ...]] = field(default_factory=dict)
    post: Dict[Path, Tuple[Annotation, ...]] = field(default_factory=dict)

    def entry_path(self) -> Path:
        return first_statement_path(self.program)

    @property
    def precondition(self) -> Optional[Annotation]:
        chain = self.pre.get(self.entry_path(), ())
        return chain[0] if chain else None

    @property
    def postcondition(self) -> Optional[Annotation]:
        chain = self.post.get((), ())
        return chain[-1] if chain else None

    def annotation_count(self) -> int:
        return sum(len(c) for c in self.pre.values()) + sum(len(c) for c in self.post.values())


def first_statement_path(program: Program, path: Path = ()) -> Path:
    """Path of the first non-Seq statement executed by `program`."""
    while isinstance(program, Seq):
        program = program.first
        path = path + (0,)
    return path
