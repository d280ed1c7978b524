"""
Printer - Render declarations and (annotated) programs back into source text.

Floats are written with repr so that parse(pretty_print(...)) reproduces every
matrix entry bit for bit.
"""

from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .ast import (
    AnnotatedProgram,
    Annotation,
    Case,
    Init,
    Path,
    Program,
    Seq,
    Skip,
    Unitary,
    While,
    BODY,
)
from .declarations import Declarations

INDENT = "    "


def format_scalar(value: complex) -> str:
    value = complex(value)
    re, im = float(value.real), float(value.imag)
    if im == 0:
        return repr(re)
    if re == 0:
        return f"{im!r}i"
    sign = "+" if im >= 0 else "-"
    return f"({re!r}{sign}{abs(im)!r}i)"


def format_matrix(matrix: np.ndarray) -> str:
    rows = ["[" + ", ".join(format_scalar(x) for x in row) + "]" for row in np.asarray(matrix)]
    return "[" + ", ".join(rows) + "]"


def format_declarations(decls: Declarations) -> List[str]:
    lines = [f"var {name} : {dim};" for name, dim in decls.variables.items()]
    for name, matrix in decls.gates.items():
        lines.append(f"gate {name} = {format_matrix(matrix)};")
    for name, ops in decls.measurements.items():
        body = " ".join(f"{label}: {format_matrix(m)};" for label, m in ops.items())
        lines.append(f"meas {name} = {{ {body} }};")
    for name, pred in decls.predicates.items():
        lines.append(f"pred {name} on {', '.join(pred.vars)} = {format_matrix(pred.matrix)};")
    return lines


def _block_items(program: Program, path: Path) -> Iterator[Tuple[Program, Path]]:
    if isinstance(program, Seq):
        yield from _block_items(program.first, path + (0,))
        yield from _block_items(program.second, path + (1,))
    else:
        yield program, path


class _Printer:
    def __init__(self, annotated: Optional[AnnotatedProgram], literal: bool):
        self.annotated = annotated
        self.literal = literal
        self.lines: List[str] = []

    def emit(self, depth: int, text: str):
        self.lines.append(INDENT * depth + text)

    def annotations(self, chain, depth: int):
        for annotation in chain:
            self.emit(depth, f"@{{ {self.annotation_text(annotation)} }}")

    def annotation_text(self, annotation: Annotation) -> str:
        if annotation.text and not self.literal:
            return annotation.text
        return format_matrix(annotation.matrix)

    def pre(self, path: Path):
        return self.annotated.pre.get(path, ()) if self.annotated is not None else ()

    def post(self, path: Path):
        return self.annotated.post.get(path, ()) if self.annotated is not None else ()

    def block(self, program: Program, path: Path, depth: int):
        for statement, statement_path in _block_items(program, path):
            self.annotations(self.pre(statement_path), depth)
            self.statement(statement, statement_path, depth)
        self.annotations(self.post(path), depth)

    def statement(self, program: Program, path: Path, depth: int):
        if isinstance(program, Skip):
            self.emit(depth, "skip;")
        elif isinstance(program, Init):
            self.emit(depth, f"{program.var} := |0>;")
        elif isinstance(program, Unitary):
            self.emit(depth, f"apply {program.gate}({', '.join(program.vars)});")
        elif isinstance(program, Case):
            self.emit(depth, f"case {program.meas}({', '.join(program.vars)}) {{")
            for label, branch in program.branches:
                self.emit(depth + 1, f"{label}: {{")
                self.block(branch, path + (label,), depth + 2)
                self.emit(depth + 1, "}")
            self.emit(depth, "}")
        elif isinstance(program, While):
            self.emit(depth, f"while {program.meas}({', '.join(program.vars)}) == {program.continue_label} {{")
            self.block(program.body, path + (BODY,), depth + 1)
            self.emit(depth, "}")
        else:
            raise TypeError(f"Cannot print {type(program).__name__}")


def pretty_print(decls: Optional[Declarations], program: Union[Program, AnnotatedProgram],
                 literal: bool = False) -> str:
    """
    Render a program file.

    Args:
        decls: Declarations to print first (omitted when None)
        program: Program or AnnotatedProgram
        literal: print annotations as matrix literals even when source text is known

    Returns:
        Source text accepted by parse()
    """
    annotated = program if isinstance(program, AnnotatedProgram) else None
    body = annotated.program if annotated is not None else program
    printer = _Printer(annotated, literal)
    printer.lines.extend(format_declarations(decls) if decls is not None else [])
    printer.emit(0, "prog {")
    printer.block(body, (), 1)
    printer.emit(0, "}")
    return "\n".join(printer.lines) + "\n"


def format_statement(program: Program) -> str:
    """Single-line rendering for reports and proof objects."""
    printer = _Printer(None, literal=True)
    printer.block(program, (), 0)
    return " ".join(line.strip() for line in printer.lines)
