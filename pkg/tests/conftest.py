"""
Pytest configuration and fixtures for qwhile_verifier tests.
"""

import os
import re

import numpy as np
import pytest

from qwhile_verifier.config.tolerances import Settings
from qwhile_verifier.lang.parser import parse, parse_file, parse_predicate

CORPUS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                          "qwhile_verifier", "data", "corpus")

# (alpha, beta) grid for the teleportation outline
TELEPORT_GRID = [
    (1.0, 0.0),
    (0.0, 1.0),
    (1 / np.sqrt(2), 1 / np.sqrt(2)),
    (1 / np.sqrt(2), 1j / np.sqrt(2)),
]


def corpus_path(name: str) -> str:
    return os.path.join(CORPUS_DIR, name)


def read_corpus(name: str) -> str:
    with open(corpus_path(name), "r", encoding="utf-8") as f:
        return f.read()


def scalar_text(value: complex) -> str:
    value = complex(value)
    return f"({value.real!r} + {value.imag!r}*i)"


def teleport_source(alpha: complex = 0.6, beta: complex = 0.8) -> str:
    """The teleportation outline with the input state alpha|0> + beta|1>."""
    a, b = scalar_text(alpha), scalar_text(beta)
    states = {
        "In": (a, b),
        "Psi": (a, b),
        "Psi1": (a, scalar_text(-beta)),
        "Psi2": (b, a),
        "Psi3": (scalar_text(-beta), a),
    }
    text = read_corpus("qtel_outline.qw")
    for name, (c0, c1) in states.items():
        pattern = re.compile(rf"^pred {name}\s+on (\w) = .*;$", re.MULTILINE)
        text = pattern.sub(lambda m, c0=c0, c1=c1, name=name:
                           f"pred {name} on {m.group(1)} = proj({c0}*|0> + {c1}*|1>);", text)
    return text


@pytest.fixture
def settings():
    """Default settings."""
    return Settings()


@pytest.fixture
def rng():
    """Seeded generator, fresh per test."""
    return np.random.default_rng(2024)


@pytest.fixture
def qflip():
    """(decls, program) of the three-qubit flip."""
    return parse_file(corpus_path("qflip.qw"))


@pytest.fixture
def qflip_triple(qflip):
    """(decls, program, phi, ghz)."""
    decls, program = qflip
    phi = parse_predicate(read_corpus("phi.pred").strip(), decls)
    ghz = parse_predicate(read_corpus("ghz.pred").strip(), decls)
    return decls, program, phi, ghz


@pytest.fixture
def qw2():
    return parse_file(corpus_path("qw2.qw"))


@pytest.fixture
def qw4():
    return parse_file(corpus_path("qw4.qw"))


@pytest.fixture
def teleport():
    """(decls, annotated) of the teleportation outline at (alpha, beta) = (0.6, 0.8)."""
    return parse(teleport_source())


@pytest.fixture
def coin_loop():
    """A one-qubit loop: measure, and on outcome 1 apply H and try again."""
    source = """
    var q : 2;
    meas M = { 0: [[1, 0], [0, 0]]; 1: [[0, 0], [0, 1]]; };
    prog {
      while M(q) == 1 {
        apply H(q);
      }
    }
    """
    return parse(source)


@pytest.fixture
def temp_dir(tmp_path):
    """Temporary directory for reports and figures."""
    return str(tmp_path)
