"""
Invariants - Bounded checking of quantum invariants at SVTS locations.

O is an invariant at l when for every prime set Π of paths to l and every
density operator rho

    tr(Θ rho) <= 1 − tr(E_Π(rho)) + tr(O E_Π(rho))

Only finitely many Π can be checked: the first-reach set cut at every length
up to max_len, every single path up to max_len, and `subset_budget` random
prime subsets. A passing report is a bounded claim, never an unbounded one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.base_checker import BaseChecker
from ..core.errors import DimensionMismatchError
from ..core.operators import as_matrix, dagger, expectation, projector
from ..core.verdict import Verdict, encode_matrix
from ..utils.random_states import make_rng, random_density
from .paths import SvtsPath, all_paths, make_prime, prime_paths
from .svts import SVTS

logger = logging.getLogger(__name__)


@dataclass
class InvariantReport:
    """
    Attributes:
        status: "bounded-pass" (held on every checked set up to the cutoff)
            or "violated"
        cutoff: max_len of the check
        worst_margin: min over sets and states of rhs − lhs
        sets_checked: number of path sets checked
        witness_state: state achieving the worst margin when violated
        witness_set: which set it was ("first-reach<=N", "single <path>", "random #k")
    """
    status: str = "bounded-pass"
    cutoff: int = 0
    location: int = 0
    worst_margin: float = np.inf
    sets_checked: int = 0
    states_checked: int = 0
    truncated: bool = False
    witness_state: Optional[np.ndarray] = field(default=None, repr=False)
    witness_set: Optional[str] = None

    @property
    def holds(self) -> bool:
        return self.status == "bounded-pass"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'status': self.status,
            'bounded': True,
            'cutoff': self.cutoff,
            'location': f"l{self.location}",
            'worst_margin': self.worst_margin,
            'sets_checked': self.sets_checked,
            'states_checked': self.states_checked,
            'truncated': self.truncated,
            'witness_state': encode_matrix(self.witness_state),
            'witness_set': self.witness_set,
        }


def invariant_states(theta: np.ndarray, sample_count: int, rng) -> List[np.ndarray]:
    """Projectors on the eigenvectors of Θ followed by random density operators."""
    _, vectors = np.linalg.eigh(0.5 * (theta + dagger(theta)))
    states = [projector(vectors[:, i]) for i in range(theta.shape[0])]
    states.extend(random_density(theta.shape[0], rng) for _ in range(sample_count))
    return states


def _margin(reached: np.ndarray, observable: np.ndarray, lhs: float) -> float:
    mass = float(np.trace(reached).real)
    return 1.0 - mass + expectation(observable, reached) - lhs


def check_invariant(svts: SVTS, location, observable, max_len: Optional[int] = None,
                    subset_budget: Optional[int] = None, sample_count: Optional[int] = None,
                    settings: Optional[Settings] = None, tol: Optional[float] = None) -> InvariantReport:
    """
    Check O as an invariant at a location, up to a path-length cutoff.

    Args:
        svts: transition system (carries Θ)
        location: index, "l<k>", label or subprogram path
        observable: the candidate invariant O
        max_len, subset_budget, sample_count: default to the budgets
        settings: tolerances, budgets and seed
        tol: slack of the inequality (default: psd tolerance)

    Returns:
        InvariantReport with the worst margin over every set and state checked
    """
    settings = resolve(settings)
    max_len = settings.budget("max_len") if max_len is None else max_len
    subset_budget = settings.budget("subset_budget") if subset_budget is None else subset_budget
    sample_count = settings.budget("sample_count") if sample_count is None else sample_count
    tol = settings.tol("psd") if tol is None else tol
    observable = as_matrix(observable)
    if observable.shape != (svts.dim, svts.dim):
        raise DimensionMismatchError(f"Invariant has shape {observable.shape}, SVTS has dimension {svts.dim}")

    rng = make_rng(settings.seed)
    first = prime_paths(svts, location, max_len, settings=settings)
    singles = all_paths(svts, location, max_len, settings=settings)
    states = invariant_states(svts.initial_predicate, sample_count, rng)
    report = InvariantReport(cutoff=max_len, location=first.target, truncated=first.truncated,
                             states_checked=len(states))

    # each path's image is computed once per state and reused by every set
    images = {}
    for i, rho in enumerate(states):
        for path in set(singles) | set(first.paths):
            images[(i, path.transitions)] = path.apply(svts, rho)

    def check(paths: Sequence[SvtsPath], name: str):
        report.sets_checked += 1
        for i, rho in enumerate(states):
            reached = sum((images[(i, p.transitions)] for p in paths), np.zeros_like(rho))
            margin = _margin(reached, observable, expectation(svts.initial_predicate, rho))
            if margin < report.worst_margin:
                report.worst_margin = margin
                if margin < -tol:
                    report.witness_state = rho
                    report.witness_set = name

    lengths = sorted({len(p) for p in first.paths})
    for length in lengths:
        check(first.up_to(length).paths, f"first-reach<={length}")
    for path in singles:
        check([path], f"single {path.describe()}")
    for k in range(subset_budget if singles else 0):
        chosen = [p for p in singles if rng.random() < 0.5]
        check(make_prime(chosen), f"random #{k}")

    if not np.isfinite(report.worst_margin):
        report.worst_margin = 0.0
    if report.worst_margin < -tol:
        report.status = "violated"
    logger.debug("Invariant at l%d: %s over %d sets (worst margin %.3e)",
                 report.location, report.status, report.sets_checked, report.worst_margin)
    return report


class InvariantChecker(BaseChecker):
    """
    Records a bounded invariant check as a verdict.
    """

    def __init__(self, settings: Optional[Settings] = None):
        super().__init__("Invariant Checker")
        self.settings = resolve(settings)

    def run(self, svts: SVTS, location, observable, max_len: Optional[int] = None,
            subset_budget: Optional[int] = None, sample_count: Optional[int] = None) -> bool:
        report = check_invariant(svts, location, observable, max_len, subset_budget, sample_count, self.settings)
        verdict = Verdict("invariant", report.holds, report.worst_margin,
                          provenance=f"invariant@l{report.location}", kind="invariant")
        verdict.add_detail("status", report.status)
        verdict.add_detail("cutoff", report.cutoff)
        if report.witness_set is not None:
            verdict.add_detail("witness_set", report.witness_set)
            verdict.add_detail("witness_state", encode_matrix(report.witness_state))
        self.add_verdict(verdict)
        self.results['invariant'] = report.to_dict()
        return self.holds
