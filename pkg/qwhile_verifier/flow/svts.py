"""
SVTS - Super-operator-valued transition systems of structured programs.

Locations are the entry points of subprograms plus one exit location. A basic
statement is one transition labeled with its channel, a case statement one
transition per outcome labeled rho -> M_m rho M_m†, and a loop an exit (M0)
and a continue (M1) transition out of its head; the body leads back to the head.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import QWhileError
from ..core.operators import (Superoperator, as_matrix, identity, identity_channel, measurement_branch,
                              transfer_matrix)
from ..lang.ast import BODY, Case, Init, Path, Program, Seq, Skip, Unitary, While
from ..lang.declarations import Declarations
from ..lang.printer import format_statement
from ..semantics.kernel import ProgramKernel

logger = logging.getLogger(__name__)

TRANSITION_KINDS = ("step", "branch", "exit", "continue")


@dataclass(frozen=True)
class Location:
    index: int
    path: Optional[Path]
    label: str

    def __str__(self) -> str:
        return f"l{self.index}"


@dataclass(frozen=True, eq=False)
class Transition:
    source: int
    target: int
    channel: Superoperator
    kind: str = "step"
    label: str = ""


@dataclass(eq=False)
class SVTS:
    """
    Attributes:
        dim: dimension of the state space
        locations: locations by index; index 0 is the initial location
        transitions: all transitions
        initial_predicate: Θ
        exit: index of the exit location
    """
    dim: int
    locations: List[Location]
    transitions: List[Transition]
    initial_predicate: np.ndarray
    exit: int
    _outgoing: Dict[int, List[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._outgoing = {loc.index: [] for loc in self.locations}
        for i, t in enumerate(self.transitions):
            self._outgoing[t.source].append(i)

    @property
    def initial(self) -> int:
        return 0

    def outgoing(self, location: int) -> List[int]:
        return self._outgoing[location]

    def location(self, key) -> int:
        """Resolve a location given by index, "l<k>", label or subprogram path."""
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < len(self.locations):
                raise QWhileError(f"No location l{key}")
            return int(key)
        if isinstance(key, str):
            if key.startswith("l") and key[1:].isdigit():
                return self.location(int(key[1:]))
            for loc in self.locations:
                if loc.label == key:
                    return loc.index
        if isinstance(key, tuple):
            for loc in self.locations:
                if loc.path == key:
                    return loc.index
        raise QWhileError(f"No location {key!r}")

    def location_residuals(self) -> Dict[int, float]:
        """max |Σ E†E − I| over the transitions leaving each non-final location."""
        residuals = {}
        for loc in self.locations:
            out = self.outgoing(loc.index)
            if not out:
                continue
            gram = sum(self.transitions[i].channel.gram() for i in out)
            residuals[loc.index] = float(np.max(np.abs(gram - identity(self.dim))))
        return residuals

    def check_trace_preserving(self, tol: float):
        for index, residual in self.location_residuals().items():
            if residual > tol:
                raise QWhileError(f"Transitions out of l{index} are not trace-preserving (residual {residual:.3e})")

    def to_text(self) -> str:
        lines = [f"svts dim={self.dim} locations={len(self.locations)} "
                 f"transitions={len(self.transitions)} initial=l0 exit=l{self.exit}"]
        for loc in self.locations:
            lines.append(f"  l{loc.index}: {loc.label}")
        for t in self.transitions:
            residual = t.channel.trace_preserving_residual()
            lines.append(f"l{t.source} -> l{t.target} : kraus_count={len(t.channel)}, "
                         f"trace_preserving_residual={residual:.3e}")
        return "\n".join(lines)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dim': self.dim,
            'initial': 0,
            'exit': self.exit,
            'locations': [{'index': loc.index, 'label': loc.label,
                           'path': None if loc.path is None else list(loc.path)} for loc in self.locations],
            'transitions': [{'source': t.source, 'target': t.target, 'kind': t.kind, 'label': t.label,
                             'kraus_count': len(t.channel),
                             'trace_preserving_residual': t.channel.trace_preserving_residual()}
                            for t in self.transitions],
            'location_residuals': {f"l{k}": v for k, v in self.location_residuals().items()},
        }

    def transfer(self, index: int) -> np.ndarray:
        return transfer_matrix(self.transitions[index].channel)


class _Builder:
    def __init__(self, decls: Declarations, settings: Settings):
        self.kernel = ProgramKernel(decls, settings=settings)
        self.locations: List[Location] = []
        self.transitions: List[Transition] = []

    def new_location(self, path: Optional[Path], label: str) -> int:
        self.locations.append(Location(len(self.locations), path, label))
        return len(self.locations) - 1

    def add(self, source: int, target: int, kraus, kind: str, label: str):
        self.transitions.append(Transition(source, target, Superoperator(tuple(kraus)), kind, label))

    def build(self, node: Program, path: Path, entry: int, exit: int):
        if isinstance(node, Seq):
            middle = self.new_location(path + (1,), f"before {format_statement(node.second)}")
            self.build(node.first, path + (0,), entry, middle)
            self.build(node.second, path + (1,), middle, exit)
        elif isinstance(node, Skip):
            self.add(entry, exit, identity_channel(self.kernel.dim).kraus, "step", "skip")
        elif isinstance(node, (Init, Unitary)):
            self.add(entry, exit, self.kernel.kraus(node), "step", format_statement(node))
        elif isinstance(node, Case):
            ops = self.kernel.branches(node)
            for label, branch in node.branches:
                start = self.new_location(path + (label,), f"{node.meas} = {label}")
                self.add(entry, start, measurement_branch(ops[label]).kraus, "branch", f"{node.meas}={label}")
                self.build(branch, path + (label,), start, exit)
        elif isinstance(node, While):
            m0, m1 = self.kernel.loop(node)
            body = self.new_location(path + (BODY,), f"body of loop at {node.span()}")
            self.add(entry, exit, (m0,), "exit", f"{node.meas} exit")
            self.add(entry, body, (m1,), "continue", f"{node.meas}={node.continue_label}")
            self.build(node.body, path + (BODY,), body, entry)
        else:
            raise TypeError(f"Unknown program node {type(node).__name__}")


def build_svts(program: Program, decls: Declarations, theta=None,
               settings: Optional[Settings] = None) -> SVTS:
    """
    Control-flow SVTS of a program.

    Args:
        program: well-typed program
        decls: Program declarations
        theta: initial predicate Θ (default: identity)
        settings: tolerances and budgets

    Returns:
        SVTS whose location l0 is the program entry; trace preservation at
        every location is verified
    """
    settings = resolve(settings)
    builder = _Builder(decls, settings)
    entry = builder.new_location((), "entry")
    exit = builder.new_location(None, "exit")
    builder.build(program, (), entry, exit)
    dim = builder.kernel.dim
    theta = identity(dim) if theta is None else as_matrix(theta)
    if theta.shape != (dim, dim):
        raise QWhileError(f"Initial predicate has shape {theta.shape}, program space has dimension {dim}")
    svts = SVTS(dim, builder.locations, builder.transitions, theta, exit)
    svts.check_trace_preserving(settings.tol("eq") * max(1, dim))
    logger.debug("SVTS with %d locations and %d transitions", len(svts.locations), len(svts.transitions))
    return svts
