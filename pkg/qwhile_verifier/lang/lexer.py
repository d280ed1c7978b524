"""
Lexer - Regex tokenizer for program, predicate and state files.
"""

import re
from dataclasses import dataclass
from typing import Iterator, List

from ..core.errors import ParseError


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


_NUMBER = r"(?:\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)"

TOKEN_SPEC = [
    ("COMMENT", r"//[^\n]*|\#[^\n]*"),
    ("NEWLINE", r"\n"),
    ("SPACE", r"[ \t\r]+"),
    ("KET", r"\|\d+(?:,\d+)*>(?:_\d+)?"),
    ("IMAG", _NUMBER + r"i(?![A-Za-z0-9_])"),
    ("NUMBER", _NUMBER),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_']*"),
    ("ASSIGN", r":="),
    ("EQEQ", r"=="),
    ("OP", r"[{}()\[\];,:=@+\-*/^]"),
]

_MASTER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))


def tokenize(text: str) -> Iterator[Token]:
    """
    Split source text into tokens, dropping whitespace and comments.

    Raises:
        ParseError: on a character no token matches
    """
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _MASTER.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        col = pos - line_start + 1
        if kind == "NEWLINE":
            line += 1
            line_start = match.end()
        elif kind in ("SPACE", "COMMENT"):
            pass
        elif kind == "OP" or kind in ("ASSIGN", "EQEQ"):
            yield Token(value, value, line, col)
        else:
            yield Token(kind, value, line, col)
        pos = match.end()
    yield Token("EOF", "", line, pos - line_start + 1)


def token_list(text: str) -> List[Token]:
    return list(tokenize(text))
