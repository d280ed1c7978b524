"""
Parser - Recursive-descent parser for program files, predicate expressions and
state files.

    file      := decl* "prog" block
    decl      := "var" ID ":" INT ";"
               | "gate" ID "=" matrix ";"
               | "meas" ID "=" "{" (LABEL ":" matrix ";")+ "}" ";"
               | "pred" ID "on" ID ("," ID)* "=" predexpr ";"
    block     := "{" stmt* annot* "}"
    stmt      := annot* core
    core      := "skip" ";" | ID ":=" "|0>" ";" | "apply" ID "(" ids ")" ";"
               | "case" ID "(" ids ")" "{" (LABEL ":" block)+ "}"
               | "while" ID "(" ids ")" "==" LABEL block
    annot     := "@" "{" predexpr "}"
    predexpr  := pterm (("+" | "-") pterm)*
    pterm     := pfactor ("(x)" pfactor)*
    pfactor   := scalar "*" pfactor | "-" pfactor | primary
    primary   := matrix | ID | "proj" "(" ket ")" | "I" "(" INT ")"
               | "swap" "(" INT ")" | "sym" "(" INT "," ("+"|"-") ")" | "eq" "(" INT ")"
               | "(" predexpr ")"
"""

from __future__ import annotations

import cmath
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.tolerances import Settings
from ..core.errors import ParseError, QWhileError
from ..core.operators import (
    DensityOperator,
    Space,
    check_density_bounds,
    check_predicate_bounds,
    identity,
    projector,
)
from ..relations.constructors import equality_pred, swap_operator, symmetrizer
from .ast import (
    BODY,
    AnnotatedProgram,
    Annotation,
    Case,
    Init,
    Path,
    Program,
    Skip,
    SourceSpan,
    Unitary,
    While,
    seq_of,
    statement_path,
)
from .declarations import Declarations
from .lexer import Token, token_list
from .predicates import (
    KetTerm,
    PredValue,
    add_values,
    ket_vector,
    resolve_value,
    scale_value,
    tensor_values,
)

logger = logging.getLogger(__name__)

_SCALAR_WORDS = ("sqrt", "pi", "i", "exp")

# (kind, path, chain) with kind "pre" (statement path) or "post" (block path)
_AnnotationSite = Tuple[str, Path, List[Annotation]]


def _located(exc: QWhileError, token: Token) -> QWhileError:
    if isinstance(exc, ParseError):
        return exc
    located = type(exc)(f"line {token.line}, col {token.col}: {exc}")
    located.__cause__ = exc
    return located


class Parser:
    """
    Parser over one token stream. Each instance parses one text.
    """

    def __init__(self, text: str, decls: Optional[Declarations] = None,
                 settings: Optional[Settings] = None):
        """
        Initialize the parser.

        Args:
            text: Source text
            decls: Declarations to resolve names against (a new, empty set if omitted)
            settings: Tolerances used by static checks
        """
        self.text = text
        self.tokens = token_list(text)
        self.pos = 0
        self.decls = decls if decls is not None else Declarations(settings=settings)

    # ------------------------------------------------------------------ #
    # token helpers
    # ------------------------------------------------------------------ #

    def peek(self, offset: int = 0) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        token = self.peek()
        if token.kind != "EOF":
            self.pos += 1
        return token

    def check(self, kind: str, value: Optional[str] = None, offset: int = 0) -> bool:
        token = self.peek(offset)
        return token.kind == kind and (value is None or token.value == value)

    def check_word(self, word: str, offset: int = 0) -> bool:
        return self.check("IDENT", word, offset)

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        if self.check(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: Optional[str] = None, what: Optional[str] = None) -> Token:
        if self.check(kind, value):
            return self.advance()
        token = self.peek()
        found = token.value if token.value else token.kind
        expected = what or (value if value is not None else kind)
        raise ParseError(f"expected {expected!r}, found {found!r}", token.line, token.col)

    def expect_word(self, word: str) -> Token:
        return self.expect("IDENT", word)

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.peek()
        return ParseError(message, token.line, token.col)

    def span(self, token: Token) -> SourceSpan:
        return SourceSpan(token.line, token.col)

    def parse_int(self, what: str = "integer") -> int:
        token = self.expect("NUMBER", what=what)
        if not token.value.isdigit():
            raise self.error(f"expected {what}, found {token.value!r}", token)
        return int(token.value)

    def parse_label(self) -> str:
        token = self.peek()
        if token.kind == "IDENT" or (token.kind == "NUMBER" and token.value.isdigit()):
            return self.advance().value
        raise self.error(f"expected an outcome label, found {token.value or token.kind!r}")

    def parse_ids(self) -> Tuple[str, ...]:
        names = [self.expect("IDENT", what="variable").value]
        while self.accept(","):
            names.append(self.expect("IDENT", what="variable").value)
        return tuple(names)

    # ------------------------------------------------------------------ #
    # files and declarations
    # ------------------------------------------------------------------ #

    def parse_file(self) -> Tuple[Declarations, Union[Program, AnnotatedProgram]]:
        while not self.check_word("prog"):
            if self.check("EOF"):
                raise self.error("missing 'prog' block")
            self.parse_decl()
        self.expect_word("prog")
        program, sites = self.parse_block(top=True)
        self.expect("EOF", what="end of file")
        if not sites:
            return self.decls, program
        return self.decls, build_annotated(program, sites)

    def parse_decl(self):
        token = self.peek()
        try:
            if self.accept("IDENT", "var"):
                name = self.expect("IDENT", what="variable name").value
                self.expect(":")
                dim = self.parse_int("dimension")
                self.expect(";")
                self.decls.add_variable(name, dim)
            elif self.accept("IDENT", "gate"):
                name = self.expect("IDENT", what="gate name").value
                self.expect("=")
                matrix = self.parse_matrix()
                self.expect(";")
                self.decls.add_gate(name, matrix)
            elif self.accept("IDENT", "meas"):
                name = self.expect("IDENT", what="measurement name").value
                self.expect("=")
                self.expect("{")
                operators = {}
                while not self.check("}"):
                    label_token = self.peek()
                    label = self.parse_label()
                    if label in operators:
                        raise self.error(f"duplicate outcome label '{label}'", label_token)
                    self.expect(":")
                    operators[label] = self.parse_matrix()
                    self.expect(";")
                if not operators:
                    raise self.error(f"measurement '{name}' has no outcomes")
                self.expect("}")
                self.expect(";")
                self.decls.add_measurement(name, operators)
            elif self.accept("IDENT", "pred"):
                name = self.expect("IDENT", what="predicate name").value
                self.expect_word("on")
                vars = self.parse_ids()
                self.expect("=")
                space = self.decls.space()
                value = self.parse_predexpr(expected=[space.dim_of(v) for v in vars])
                self.expect(";")
                self.decls.add_predicate(name, resolve_value(value, vars, space), vars)
            else:
                raise self.error(f"expected a declaration or 'prog', found {token.value or token.kind!r}")
        except QWhileError as exc:
            raise _located(exc, token) from None

    # ------------------------------------------------------------------ #
    # statements
    # ------------------------------------------------------------------ #

    def parse_block(self, top: bool = False) -> Tuple[Program, List[_AnnotationSite]]:
        opening = self.expect("{")
        items = []
        pending: List[Annotation] = []
        while not self.check("}"):
            if self.check("@"):
                pending.append(self.parse_annotation())
                continue
            program, inner = self.parse_core()
            items.append((program, pending, inner))
            pending = []
        self.expect("}")

        sites: List[_AnnotationSite] = []
        if not items:
            if top and len(pending) > 1:
                sites.append(("pre", (), pending[:-1]))
                sites.append(("post", (), pending[-1:]))
            elif top and pending:
                sites.append(("post", (), pending))
            elif pending:
                sites.append(("pre", (), pending))
            return Skip(self.span(opening)), sites

        count = len(items)
        for index, (program, chain, inner) in enumerate(items):
            path = statement_path(count, index)
            if chain:
                sites.append(("pre", path, chain))
            for kind, sub, sub_chain in inner:
                sites.append((kind, path + sub, sub_chain))
        if pending:
            sites.append(("post", (), pending))
        return seq_of([program for program, _, _ in items]), sites

    def parse_core(self) -> Tuple[Program, List[_AnnotationSite]]:
        token = self.peek()
        try:
            program, sites = self._parse_core(token)
            self.decls.check_statement(program)
            return program, sites
        except QWhileError as exc:
            raise _located(exc, token) from None

    def _parse_core(self, token: Token) -> Tuple[Program, List[_AnnotationSite]]:
        loc = self.span(token)
        if self.accept("IDENT", "skip"):
            self.expect(";")
            return Skip(loc), []
        if self.accept("IDENT", "apply"):
            gate = self.expect("IDENT", what="gate name").value
            self.expect("(")
            vars = self.parse_ids()
            self.expect(")")
            self.expect(";")
            return Unitary(gate, vars, loc), []
        if self.accept("IDENT", "case"):
            meas = self.expect("IDENT", what="measurement name").value
            self.expect("(")
            vars = self.parse_ids()
            self.expect(")")
            self.expect("{")
            branches = []
            sites: List[_AnnotationSite] = []
            seen = set()
            while not self.check("}"):
                label_token = self.peek()
                label = self.parse_label()
                if label in seen:
                    raise self.error(f"duplicate case label '{label}'", label_token)
                seen.add(label)
                self.expect(":")
                body, inner = self.parse_block()
                branches.append((label, body))
                sites.extend((kind, (label,) + path, chain) for kind, path, chain in inner)
            self.expect("}")
            if not branches:
                raise self.error("case statement without branches", token)
            return Case(meas, vars, tuple(branches), loc), sites
        if self.accept("IDENT", "while"):
            meas = self.expect("IDENT", what="measurement name").value
            self.expect("(")
            vars = self.parse_ids()
            self.expect(")")
            self.expect("==")
            label = self.parse_label()
            body, inner = self.parse_block()
            sites = [(kind, (BODY,) + path, chain) for kind, path, chain in inner]
            return While(meas, vars, label, body, loc), sites
        if self.check("IDENT") and self.check(":=", offset=1):
            var = self.advance().value
            self.advance()
            ket = self.expect("KET", what="|0>")
            if ket.value != "|0>":
                raise self.error(f"initialization must be to |0>, found {ket.value}", ket)
            self.expect(";")
            return Init(var, loc), []
        raise self.error(f"expected a statement, found {token.value or token.kind!r}", token)

    def parse_annotation(self) -> Annotation:
        start = self.expect("@")
        self.expect("{")
        first = self.pos
        space = self.decls.space()
        try:
            value = self.parse_predexpr(expected=list(space.dims))
            matrix = resolve_value(value, space.names, space)
            check_predicate_bounds(matrix, self.decls._tol("herm"), self.decls._tol("psd"), "annotation")
        except QWhileError as exc:
            raise _located(exc, start) from None
        text = " ".join(t.value for t in self.tokens[first:self.pos])
        self.expect("}")
        return Annotation(matrix, text, self.span(start))

    def parse_statements(self) -> Program:
        """Statement list up to end of input (no braces, no annotations)."""
        statements = []
        while not self.check("EOF"):
            if self.check("@"):
                raise self.error("annotations are not allowed here")
            program, _ = self.parse_core()
            statements.append(program)
        return seq_of(statements)

    # ------------------------------------------------------------------ #
    # predicate expressions
    # ------------------------------------------------------------------ #

    def _at_tensor(self) -> bool:
        return self.check("(") and self.check("IDENT", "x", 1) and self.check(")", offset=2)

    def parse_predexpr(self, expected: Optional[Sequence[int]] = None) -> PredValue:
        space = self.decls.space()
        left = self.parse_pterm(expected)
        while self.check("+") or self.check("-"):
            sign = 1.0 if self.advance().value == "+" else -1.0
            right = self.parse_pterm(expected)
            left = add_values(left, right, space, sign)
        return left

    def parse_pterm(self, expected: Optional[Sequence[int]] = None) -> PredValue:
        start = self.pos
        value = self.parse_pfactor(expected)
        if not self._at_tensor():
            return value
        if expected is not None:
            # dimension hints only apply to a lone factor
            self.pos = start
            value = self.parse_pfactor(None)
        while self._at_tensor():
            self.pos += 3
            value = tensor_values(value, self.parse_pfactor(None))
        return value

    def _starts_scalar(self) -> bool:
        token = self.peek()
        return (token.kind in ("NUMBER", "IMAG", "(", "-", "+")
                or (token.kind == "IDENT" and token.value in _SCALAR_WORDS))

    def parse_pfactor(self, expected: Optional[Sequence[int]] = None) -> PredValue:
        if self._starts_scalar():
            start = self.pos
            try:
                scalar = self.parse_scalar()
                if self.accept("*"):
                    return scale_value(scalar, self.parse_pfactor(expected))
            except ParseError:
                pass
            self.pos = start
            if self.accept("-"):
                return scale_value(-1.0, self.parse_pfactor(expected))
        return self.parse_primary(expected)

    def parse_primary(self, expected: Optional[Sequence[int]] = None) -> PredValue:
        token = self.peek()
        if self.check("["):
            return PredValue(self.parse_matrix())
        if self.accept("("):
            value = self.parse_predexpr(expected)
            self.expect(")")
            return value
        if token.kind != "IDENT":
            raise self.error(f"expected a predicate expression, found {token.value or token.kind!r}")
        word = token.value
        if word in ("proj", "I", "swap", "sym", "eq") and self.check("(", offset=1):
            self.advance()
            self.expect("(")
            if word == "proj":
                terms = self.parse_ket_terms()
                vector, _ = ket_vector(terms, expected)
                value = PredValue(projector(vector))
            elif word == "I":
                value = PredValue(identity(self.parse_int("dimension")))
            elif word == "swap":
                value = PredValue(swap_operator(self.parse_int("dimension")))
            elif word == "eq":
                value = PredValue(equality_pred(d=self.parse_int("dimension")))
            else:
                d = self.parse_int("dimension")
                self.expect(",")
                sign = self.advance()
                if sign.value not in ("+", "-"):
                    raise self.error("expected '+' or '-' in sym(d, sign)", sign)
                value = PredValue(symmetrizer(d, sign.value))
            self.expect(")")
            return value
        self.advance()
        named = self.decls.predicate(word)
        return PredValue(named.matrix, named.vars)

    def parse_ket_terms(self) -> List[KetTerm]:
        terms = []
        first = True
        while True:
            sign = 1.0
            if self.accept("-"):
                sign = -1.0
            elif self.accept("+"):
                pass
            elif not first:
                break
            if self.check("KET"):
                coefficient: complex = 1.0
            else:
                coefficient = self.parse_scalar()
                self.expect("*")
            indices: List[int] = []
            dims: List[Optional[int]] = []
            if not self.check("KET"):
                raise self.error("expected a ket such as |0>")
            while self.check("KET"):
                atom_indices, atom_dim = _split_ket(self.advance().value)
                indices.extend(atom_indices)
                dims.extend([atom_dim] * len(atom_indices))
            terms.append(KetTerm(sign * coefficient, tuple(indices), tuple(dims)))
            first = False
            if not (self.check("+") or self.check("-")):
                break
        return terms

    # ------------------------------------------------------------------ #
    # scalars and matrices
    # ------------------------------------------------------------------ #

    def parse_scalar(self) -> complex:
        value = self._scalar_term()
        while self.check("+") or self.check("-"):
            start = self.pos
            op = self.advance().value
            try:
                rhs = self._scalar_term()
            except ParseError:
                self.pos = start
                break
            value = value + rhs if op == "+" else value - rhs
        return value

    def _scalar_term(self) -> complex:
        value = self._scalar_factor()
        while self.check("*") or self.check("/"):
            start = self.pos
            op = self.advance()
            try:
                rhs = self._scalar_factor()
            except ParseError:
                self.pos = start
                break
            if op.value == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise self.error("division by zero", op)
                value = value / rhs
        return value

    def _scalar_factor(self) -> complex:
        if self.accept("-"):
            return -self._scalar_factor()
        if self.accept("+"):
            return self._scalar_factor()
        base = self._scalar_atom()
        if self.accept("^"):
            return base ** self._scalar_factor()
        return base

    def _scalar_atom(self) -> complex:
        token = self.peek()
        if token.kind == "NUMBER":
            self.advance()
            return float(token.value)
        if token.kind == "IMAG":
            self.advance()
            return complex(0.0, float(token.value[:-1]))
        if self.accept("("):
            value = self.parse_scalar()
            self.expect(")")
            return value
        if token.kind == "IDENT":
            if token.value == "i":
                self.advance()
                return 1j
            if token.value == "pi":
                self.advance()
                return float(np.pi)
            if token.value in ("sqrt", "exp") and self.check("(", offset=1):
                self.advance()
                self.expect("(")
                argument = self.parse_scalar()
                self.expect(")")
                if token.value == "exp":
                    return _simplify(cmath.exp(argument))
                if complex(argument).imag == 0 and complex(argument).real >= 0:
                    return float(np.sqrt(complex(argument).real))
                return cmath.sqrt(argument)
        raise self.error(f"expected a number, found {token.value or token.kind!r}", token)

    def parse_matrix(self) -> np.ndarray:
        start = self.expect("[")
        rows = [self._parse_row()]
        while self.accept(","):
            rows.append(self._parse_row())
        self.expect("]")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise self.error("matrix rows have different lengths", start)
        return np.array(rows, dtype=np.complex128)

    def _parse_row(self) -> List[complex]:
        self.expect("[")
        row = [self.parse_scalar()]
        while self.accept(","):
            row.append(self.parse_scalar())
        self.expect("]")
        return row


def _simplify(value: complex) -> complex:
    return value.real if value.imag == 0 else value


def _split_ket(text: str) -> Tuple[List[int], Optional[int]]:
    body, _, suffix = text[1:].partition(">")
    dim = int(suffix[1:]) if suffix.startswith("_") else None
    if "," in body:
        indices = [int(part) for part in body.split(",")]
    else:
        indices = [int(ch) for ch in body]
    return indices, dim


def build_annotated(program: Program, sites: List[_AnnotationSite]) -> AnnotatedProgram:
    pre = {}
    post = {}
    for kind, path, chain in sites:
        target = pre if kind == "pre" else post
        target[path] = tuple(target.get(path, ())) + tuple(chain)
    return AnnotatedProgram(program, pre, post)


# ---------------------------------------------------------------------- #
# entry points
# ---------------------------------------------------------------------- #

def parse(text: str, settings: Optional[Settings] = None) -> Tuple[Declarations, Union[Program, AnnotatedProgram]]:
    """
    Parse a program file.

    Args:
        text: Source text in the program grammar
        settings: Tolerances used by the static checks

    Returns:
        (Declarations, Program) or (Declarations, AnnotatedProgram) when the
        file carries annotations
    """
    return Parser(text, settings=settings).parse_file()


def parse_file(path: str, settings: Optional[Settings] = None):
    with open(path, "r", encoding="utf-8") as f:
        return parse(f.read(), settings)


def parse_program(text: str, settings: Optional[Settings] = None) -> Tuple[Declarations, Program]:
    """Parse a file and drop any annotations."""
    decls, result = parse(text, settings)
    return decls, result.program if isinstance(result, AnnotatedProgram) else result


def parse_statements(text: str, decls: Declarations) -> Program:
    """Parse a statement list (without braces) against existing declarations."""
    return Parser(text, decls).parse_statements()


def parse_predicate(text: str, decls: Optional[Declarations] = None,
                    target: Optional[Sequence[str]] = None, check: bool = True) -> np.ndarray:
    """
    Evaluate a predicate expression.

    Args:
        text: predexpr source
        decls: declarations for named predicates and variable dimensions
        target: variables the result acts on (default: every declared variable;
            anonymous expressions are returned as-is when nothing is declared)
        check: verify 0 <= A <= I

    Returns:
        The operator as a matrix
    """
    parser = Parser(text, decls)
    space = parser.decls.space()
    target = list(space.names) if target is None else list(target)
    try:
        hint = [space.dim_of(v) for v in target] if target else None
        value = parser.parse_predexpr(expected=hint)
        parser.expect("EOF", what="end of predicate")
        if not target and value.vars is None:
            matrix = value.matrix
        else:
            matrix = resolve_value(value, target, space)
        if check:
            check_predicate_bounds(matrix, what="predicate")
    except ParseError:
        raise
    except QWhileError as exc:
        raise _located(exc, parser.peek()) from None
    return matrix


def parse_state(text: str, space: Optional[Space] = None,
                decls: Optional[Declarations] = None) -> DensityOperator:
    """
    Parse a state file: a ket expression (normalized) or any predicate-style
    matrix expression that is a partial density operator.
    """
    parser = Parser(text, decls)
    hint = list(space.dims) if space is not None else None
    try:
        terms = parser.parse_ket_terms()
        parser.expect("EOF")
        vector, _ = ket_vector(terms, hint)
        matrix = projector(vector)
    except ParseError:
        parser = Parser(text, decls)
        value = parser.parse_predexpr(expected=hint)
        parser.expect("EOF", what="end of state")
        if space is not None and value.vars is not None:
            matrix = resolve_value(value, space.names, space)
        else:
            matrix = value.matrix
    check_density_bounds(matrix, what="state")
    return DensityOperator(matrix, space if space is not None and space.dim == matrix.shape[0] else None)
