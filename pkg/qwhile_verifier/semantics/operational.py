"""
Operational - Small-step transition relation over configurations and
configuration ensembles.

A configuration pairs a remainder program (or the terminated marker) with a
partial density operator on the full space. Measurements branch: a Case or
While step yields one successor per outcome, and an ensemble step replaces the
selected member by all of its successors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from ..config.tolerances import Settings
from ..core.errors import QWhileError
from ..core.operators import Space, as_matrix, dagger
from ..lang.ast import Case, Init, Program, Seq, Skip, Unitary, While
from ..lang.declarations import Declarations
from .kernel import ProgramKernel

logger = logging.getLogger(__name__)


class _Terminated:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TERMINATED"

    def __reduce__(self):
        return (_Terminated, ())


TERMINATED = _Terminated()
Remainder = Union[Program, _Terminated]

SELECTIONS = ("leftmost", "rightmost")


@dataclass(frozen=True, eq=False)
class Configuration:
    """
    ⟨remainder, state⟩.

    Attributes:
        remainder: program still to execute, or TERMINATED
        state: partial density operator on the full space
        zero_trace: the state carries (numerically) no probability mass
    """
    remainder: Remainder
    state: np.ndarray
    zero_trace: bool = False

    @property
    def terminated(self) -> bool:
        return self.remainder is TERMINATED

    @property
    def trace(self) -> float:
        return float(np.trace(self.state).real)


@dataclass(frozen=True)
class ConfigurationEnsemble:
    """Multiset of configurations, kept in a fixed order for reproducible selection."""
    members: Tuple[Configuration, ...] = ()

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def live(self) -> List[Configuration]:
        return [c for c in self.members if not c.terminated]

    @property
    def terminated(self) -> List[Configuration]:
        return [c for c in self.members if c.terminated]

    @property
    def total_trace(self) -> float:
        return sum(c.trace for c in self.members)

    @property
    def live_trace(self) -> float:
        return sum(c.trace for c in self.live)

    def terminated_sum(self, dim: int) -> np.ndarray:
        total = np.zeros((dim, dim), dtype=np.complex128)
        for c in self.terminated:
            total = total + c.state
        return total


@dataclass
class EnsembleRun:
    """
    Outcome of running an ensemble to completion (or to the step budget).

    Attributes:
        terminated: terminated configurations, in the order they were produced
        residual: live configurations left when the run stopped
        steps: number of ensemble steps taken
        stopped_by: "completed", "residual" (live trace below loop_eps) or "budget"
        pruned_trace: trace of live members dropped for carrying negligible mass
    """
    terminated: List[Configuration]
    residual: List[Configuration]
    steps: int
    stopped_by: str
    initial_trace: float
    pruned_trace: float = 0.0
    dim: int = field(default=0, repr=False)

    @property
    def exhausted(self) -> bool:
        return self.stopped_by == "budget"

    @property
    def terminated_trace(self) -> float:
        return sum(c.trace for c in self.terminated)

    @property
    def residual_trace(self) -> float:
        return sum(c.trace for c in self.residual) + self.pruned_trace

    def terminated_sum(self) -> np.ndarray:
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for c in self.terminated:
            total = total + c.state
        return total

    def to_dict(self):
        return {
            'steps': self.steps,
            'stopped_by': self.stopped_by,
            'initial_trace': self.initial_trace,
            'terminated_trace': self.terminated_trace,
            'residual_trace': self.residual_trace,
            'terminated_members': len(self.terminated),
            'residual_members': len(self.residual),
        }


class OperationalSemantics:
    """
    Transition relation for one set of declarations.
    """

    def __init__(self, decls: Declarations, space: Optional[Space] = None,
                 settings: Optional[Settings] = None, selection: str = "leftmost"):
        """
        Initialize the semantics.

        Args:
            decls: Program declarations
            space: Full state space (default: every declared variable)
            settings: Tolerances and budgets
            selection: which live member an ensemble step rewrites ("leftmost" or "rightmost")
        """
        if selection not in SELECTIONS:
            raise QWhileError(f"Unknown selection order '{selection}', expected one of {SELECTIONS}")
        self.kernel = ProgramKernel(decls, space, settings)
        self.settings = self.kernel.settings
        self.selection = selection

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def _configuration(self, remainder: Remainder, state: np.ndarray) -> Configuration:
        trace = float(np.trace(state).real)
        return Configuration(remainder, state, zero_trace=trace <= self.settings.tol("trace"))

    def _successors(self, program: Program, rho: np.ndarray) -> List[Tuple[Remainder, np.ndarray]]:
        if isinstance(program, Skip):
            return [(TERMINATED, rho)]
        if isinstance(program, (Init, Unitary)):
            return [(TERMINATED, sum(k @ rho @ dagger(k) for k in self.kernel.kraus(program)))]
        if isinstance(program, Seq):
            result = []
            for remainder, state in self._successors(program.first, rho):
                nxt = program.second if remainder is TERMINATED else Seq(remainder, program.second, program.loc)
                result.append((nxt, state))
            return result
        if isinstance(program, Case):
            ops = self.kernel.branches(program)
            return [(branch, ops[label] @ rho @ dagger(ops[label])) for label, branch in program.branches]
        if isinstance(program, While):
            m0, m1 = self.kernel.loop(program)
            return [
                (TERMINATED, m0 @ rho @ dagger(m0)),
                (Seq(program.body, program, program.loc), m1 @ rho @ dagger(m1)),
            ]
        raise TypeError(f"Unknown program node {type(program).__name__}")

    def step(self, config: Configuration) -> List[Configuration]:
        """
        All successors of a live configuration, one per measurement outcome.
        Zero-trace successors are kept and flagged.
        """
        if config.terminated:
            raise QWhileError("A terminated configuration has no successors")
        return [self._configuration(r, s) for r, s in self._successors(config.remainder, config.state)]

    def initial(self, program: Program, rho) -> ConfigurationEnsemble:
        state = as_matrix(rho)
        if state.shape != (self.dim, self.dim):
            raise QWhileError(f"State has shape {state.shape}, expected {(self.dim, self.dim)}")
        return ConfigurationEnsemble((self._configuration(program, state),))

    def select(self, ensemble: ConfigurationEnsemble) -> int:
        live = [i for i, c in enumerate(ensemble.members) if not c.terminated]
        if not live:
            raise QWhileError("Ensemble has no live member to step")
        return live[0] if self.selection == "leftmost" else live[-1]

    def step_ensemble(self, ensemble: ConfigurationEnsemble) -> ConfigurationEnsemble:
        """
        Replace the selected live member by all of its successors.
        Terminated successors with zero trace are dropped.
        """
        index = self.select(ensemble)
        successors = [c for c in self.step(ensemble.members[index])
                      if not (c.terminated and c.zero_trace)]
        members = ensemble.members[:index] + tuple(successors) + ensemble.members[index + 1:]
        return ConfigurationEnsemble(members)

    def run_ensemble(self, program: Program, rho, max_steps: Optional[int] = None) -> EnsembleRun:
        """
        Step the ensemble ⟨program, rho⟩ until no live mass is left.

        Live members whose trace falls below loop_eps are pruned (their mass is
        counted as residual). The run also stops once the total live trace is
        below loop_eps, or when the step budget is spent.
        """
        max_steps = self.settings.budget("max_steps") if max_steps is None else max_steps
        eps = self.settings.tol("loop_eps")
        ensemble = self.initial(program, rho)
        initial_trace = ensemble.total_trace
        terminated: List[Configuration] = []
        live = list(ensemble.members)
        pruned = 0.0
        steps = 0
        stopped_by = "completed"
        while live:
            if sum(c.trace for c in live) < eps:
                stopped_by = "residual"
                break
            if steps >= max_steps:
                stopped_by = "budget"
                logger.warning("Operational run stopped after %d steps with live trace %.3e",
                               steps, sum(c.trace for c in live))
                break
            index = 0 if self.selection == "leftmost" else len(live) - 1
            current = live.pop(index)
            fresh = []
            for successor in self.step(current):
                if successor.terminated:
                    if not successor.zero_trace:
                        terminated.append(successor)
                elif successor.trace < eps:
                    pruned += max(successor.trace, 0.0)
                else:
                    fresh.append(successor)
            live[index:index] = fresh
            steps += 1
        logger.debug("Operational run: %d steps, %d terminated members, stopped by %s",
                     steps, len(terminated), stopped_by)
        return EnsembleRun(terminated, live, steps, stopped_by, initial_trace, pruned, self.dim)


def step(config: Configuration, decls: Declarations, settings: Optional[Settings] = None) -> List[Configuration]:
    return OperationalSemantics(decls, settings=settings).step(config)


def step_ensemble(ensemble: ConfigurationEnsemble, decls: Declarations,
                  settings: Optional[Settings] = None, selection: str = "leftmost") -> ConfigurationEnsemble:
    return OperationalSemantics(decls, settings=settings, selection=selection).step_ensemble(ensemble)


def run_ensemble(program: Program, rho, decls: Declarations, max_steps: Optional[int] = None,
                 settings: Optional[Settings] = None, selection: str = "leftmost") -> EnsembleRun:
    """Run ⟨program, rho⟩ operationally; see OperationalSemantics.run_ensemble."""
    semantics = OperationalSemantics(decls, settings=settings, selection=selection)
    return semantics.run_ensemble(program, rho, max_steps)
