"""
Ranking - Checking (A, ε)-ranking functions of quantum loops.

For a loop `while M[q] == 1 do S od`, a function t from states to naturals is an
(A, ε)-ranking function when for every state rho

    1. t(⟦S⟧(M1 rho M1†)) <= t(rho)
    2. tr(A rho) >= ε implies t(⟦S⟧(M1 rho M1†)) < t(rho)

Two families of t are supported: the parametric t(rho) = ceil(tr(N rho)/scale)
for a positive observable N, and an explicit table of (state, value) pairs.
Conditions are checked over the supplied states and everything they reach
within k loop iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.base_checker import BaseChecker
from ..core.errors import QWhileError
from ..core.operators import as_matrix, basis_vector, dagger, expectation, min_eigenvalue, projector, require_hermitian
from ..core.verdict import Verdict, encode_matrix
from ..lang.ast import While
from ..lang.declarations import Declarations
from ..semantics.denotational import DenotationalSemantics
from ..utils.random_states import make_rng, random_density

logger = logging.getLogger(__name__)


def _frozen(matrix) -> np.ndarray:
    copy = np.array(as_matrix(matrix), dtype=np.complex128, copy=True)
    copy.setflags(write=False)
    return copy


@dataclass(frozen=True, eq=False)
class RankingSpec:
    """
    A candidate ranking function with the predicate and threshold it is checked against.

    Attributes:
        observable: N, Hermitian and positive (parametric mode)
        scale: ε_rank in t(rho) = ceil(tr(N rho)/ε_rank)
        target: the predicate A of condition 2 (None: supplied by the caller,
            e.g. M1†BM1 for a loop rule)
        epsilon: the threshold ε of condition 2
        table: (state, value) pairs (table mode)
        match_tol: entrywise distance at which a state matches a table entry
            (default: the eq tolerance)
    """
    observable: Optional[np.ndarray] = None
    scale: float = 1.0
    target: Optional[np.ndarray] = None
    epsilon: float = 0.1
    table: Tuple[Tuple[np.ndarray, int], ...] = ()
    match_tol: Optional[float] = None

    def __post_init__(self):
        if self.observable is None and not self.table:
            raise QWhileError("A ranking spec needs an observable or a table")
        if self.observable is not None and self.table:
            raise QWhileError("A ranking spec takes an observable or a table, not both")
        if self.scale <= 0:
            raise QWhileError(f"Ranking scale must be positive, got {self.scale}")
        if self.epsilon <= 0:
            raise QWhileError(f"Ranking threshold ε must be positive, got {self.epsilon}")
        if self.observable is not None:
            observable = _frozen(self.observable)
            require_hermitian(observable, what="ranking observable")
            low = min_eigenvalue(observable)
            if low < -resolve(None).tol("psd"):
                raise QWhileError(f"Ranking observable must be positive, minimum eigenvalue {low:.3e}")
            object.__setattr__(self, "observable", observable)
        if self.target is not None:
            object.__setattr__(self, "target", _frozen(self.target))
        entries = []
        for state, value in self.table:
            if int(value) < 0:
                raise QWhileError(f"Ranking table values must be natural numbers, got {value}")
            entries.append((_frozen(state), int(value)))
        object.__setattr__(self, "table", tuple(entries))

    @property
    def mode(self) -> str:
        return "table" if self.table else "param"

    def with_target(self, target) -> "RankingSpec":
        return RankingSpec(self.observable, self.scale, target, self.epsilon, self.table, self.match_tol)

    def value(self, rho: np.ndarray, settings: Optional[Settings] = None) -> Optional[int]:
        """t(rho), or None when a table has no entry for rho."""
        settings = resolve(settings)
        if self.observable is not None:
            raw = expectation(self.observable, rho) / self.scale
            return max(0, int(np.ceil(raw - settings.tol("rank_slack"))))
        tol = settings.tol("eq") if self.match_tol is None else self.match_tol
        best, best_distance = None, np.inf
        for state, value in self.table:
            if state.shape != rho.shape:
                continue
            distance = float(np.max(np.abs(state - rho), initial=0.0))
            if distance < best_distance:
                best, best_distance = value, distance
        return best if best_distance <= tol else None


@dataclass
class RankingReport:
    """
    Outcome of a ranking check.

    Attributes:
        holds: both conditions hold on every checked state
        checked: number of states checked
        nonincrease_margin: min over states of t(rho) - t(next)
        decrease_margin: min over states with tr(A rho) >= ε of t(rho) - t(next) - 1
        applicable: number of states where condition 2 applies
        violation: first violation found, if any
    """
    holds: bool = True
    checked: int = 0
    nonincrease_margin: float = 0.0
    decrease_margin: float = 0.0
    applicable: int = 0
    violation: Optional[Dict[str, Any]] = None
    violating_state: Optional[np.ndarray] = field(default=None, repr=False)

    def _fail(self, condition: str, **info):
        if self.violation is None:
            self.violation = {'condition': condition, **info}
        self.holds = False

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'holds': self.holds,
            'checked': self.checked,
            'nonincrease_margin': self.nonincrease_margin,
            'decrease_margin': self.decrease_margin,
            'applicable': self.applicable,
            'violation': self.violation,
        }
        if self.violating_state is not None:
            data['violating_state'] = encode_matrix(self.violating_state)
        return data


def default_ranking_states(dim: int, settings: Optional[Settings] = None,
                           extra: Sequence[np.ndarray] = ()) -> List[np.ndarray]:
    """
    Basis states, the eigenvectors of each `extra` operator and `sample_count`
    random density operators drawn from the settings seed.
    """
    settings = resolve(settings)
    states = [projector(basis_vector(i, dim)) for i in range(dim)]
    for operator in extra:
        _, vectors = np.linalg.eigh(0.5 * (operator + dagger(operator)))
        states.extend(projector(vectors[:, i]) for i in range(dim))
    rng = make_rng(settings.seed)
    states.extend(random_density(dim, rng) for _ in range(settings.budget("sample_count")))
    return states


def ranking_check(loop: While, spec: RankingSpec, states: Sequence, decls: Declarations,
                  settings: Optional[Settings] = None, iterations: Optional[int] = None,
                  target=None) -> RankingReport:
    """
    Check both ranking conditions over `states` and their iterates.

    Args:
        loop: the While statement
        spec: candidate ranking function
        states: partial density operators on the declared space
        decls: Program declarations
        settings: tolerances and budgets
        iterations: k, the number of loop iterations followed from each state
            (default: the rank_iterations budget)
        target: predicate A, overriding spec.target

    Returns:
        RankingReport with worst margins and the first violation
    """
    if not isinstance(loop, While):
        raise QWhileError(f"Ranking functions apply to while loops, got {loop.kind}")
    settings = resolve(settings)
    k = settings.budget("rank_iterations") if iterations is None else iterations
    semantics = DenotationalSemantics(decls, settings=settings)
    m0, m1 = semantics.kernel.loop(loop)
    dim = semantics.dim
    target = spec.target if target is None else as_matrix(target)
    if target is None:
        raise QWhileError("Ranking check needs a target predicate A")
    if target.shape != (dim, dim):
        raise QWhileError(f"Ranking target has shape {target.shape}, loop space has dimension {dim}")
    eps = settings.tol("loop_eps")

    report = RankingReport(nonincrease_margin=np.inf, decrease_margin=np.inf)
    for index, rho in enumerate(states):
        current = as_matrix(rho)
        for depth in range(k + 1):
            if float(np.trace(current).real) < eps:
                break
            following = semantics.apply(loop.body, m1 @ current @ dagger(m1))
            before = spec.value(current, settings)
            after = spec.value(following, settings)
            report.checked += 1
            where = {'state': index, 'iteration': depth}
            if before is None or after is None:
                report._fail("unranked", **where)
                report.violating_state = current if before is None else following
                break
            report.nonincrease_margin = min(report.nonincrease_margin, before - after)
            if after > before:
                report._fail("nonincrease", t_before=before, t_after=after, **where)
                if report.violating_state is None:
                    report.violating_state = current
            weight = expectation(target, current)
            if weight >= spec.epsilon:
                report.applicable += 1
                report.decrease_margin = min(report.decrease_margin, before - after - 1)
                if after >= before:
                    report._fail("decrease", t_before=before, t_after=after, weight=weight, **where)
                    if report.violating_state is None:
                        report.violating_state = current
            current = following
    if not np.isfinite(report.nonincrease_margin):
        report.nonincrease_margin = 0.0
    if not np.isfinite(report.decrease_margin):
        report.decrease_margin = 0.0
    logger.debug("Ranking check at %s: %d states, holds=%s", loop.span(), report.checked, report.holds)
    return report


def _leading_vector(state: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if state is None:
        return None
    _, vectors = np.linalg.eigh(0.5 * (state + dagger(state)))
    return vectors[:, -1]


class RankingChecker(BaseChecker):
    """
    Records the two ranking conditions of one loop as verdicts.
    """

    def __init__(self, decls: Declarations, settings: Optional[Settings] = None):
        super().__init__("Ranking Checker")
        self.decls = decls
        self.settings = resolve(settings)

    def run(self, loop: While, spec: RankingSpec, states: Optional[Sequence] = None,
            iterations: Optional[int] = None, target=None, provenance: Optional[str] = None) -> bool:
        target = spec.target if target is None else target
        if states is None:
            dim = self.decls.space().dim
            states = default_ranking_states(dim, self.settings, [] if target is None else [as_matrix(target)])
        report = ranking_check(loop, spec, states, self.decls, self.settings, iterations, target)
        where = provenance or f"ranking@{loop.span()}"
        violation = report.violation or {}
        unranked = violation.get('condition') == "unranked"
        first = Verdict("ranking.nonincrease", report.nonincrease_margin >= 0 and not unranked,
                        report.nonincrease_margin,
                        _leading_vector(report.violating_state) if violation.get('condition') in ("nonincrease", "unranked") else None,
                        provenance=f"{where}.nonincrease", kind="ranking")
        second = Verdict("ranking.decrease", report.decrease_margin >= 0 and not unranked,
                         report.decrease_margin,
                         _leading_vector(report.violating_state) if violation.get('condition') == "decrease" else None,
                         provenance=f"{where}.decrease", kind="ranking")
        for verdict in (first, second):
            verdict.add_detail("mode", spec.mode)
            verdict.add_detail("checked", report.checked)
        second.add_detail("applicable", report.applicable)
        if report.violation is not None:
            first.add_detail("violation", report.violation)
            second.add_detail("violation", report.violation)
        self.add_verdict(first)
        self.add_verdict(second)
        self.results['report'] = report.to_dict()
        return self.holds
