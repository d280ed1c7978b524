"""
Termination - Convergence report for the termination probabilities t_N.

t_N is computed for growing N (doubling up to the terminate budget). The run
is "converged>=1-tol" once the mass still inside loops is below tol. It is
"converged<1-tol" once the increments of t_N have stayed below loop_eps over
more than d^2 consecutive unrollings and the geometric tail of the decaying
part of every loop's continue map cannot lift the limit to 1 − tol. The tail
after N unrollings is bounded by δ_N·r/(1 − r), where δ_N is the last
increment and r the largest eigenvalue modulus of a continue map below 1;
eigenvalues of modulus 1 carry mass that never exits. Without the spectra
(dimension too large) only the first verdict can be reached; everything else
is "inconclusive".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import DimensionLimitError
from ..core.operators import as_matrix, transfer_matrix
from ..lang.ast import Program, While
from ..lang.declarations import Declarations
from ..lang.structure import subprograms
from ..semantics.denotational import DenotationalSemantics
from ..semantics.termination import termination_prob

logger = logging.getLogger(__name__)

VERDICTS = ("converged>=1-tol", "converged<1-tol", "inconclusive")

# eigenvalues closer than this to the unit circle count as non-decaying
UNIT_CIRCLE_GAP = 1e-12


@dataclass
class TerminationReport:
    """
    Attributes:
        verdict: one of VERDICTS
        probabilities: t_0, ..., t_N for the last N tried
        remaining: tr(rho) − t_N
        spectral_radius: per loop, the spectral radius of its continue map
            (M1 followed by the body), when the dimension permits
        decay_radius: per loop, the largest eigenvalue modulus of the
            continue map strictly inside the unit circle
        tail_bound: bound on the termination mass still to come after N
            (None when no spectra are available)
    """
    verdict: str = "inconclusive"
    probabilities: List[float] = field(default_factory=list)
    remaining: float = 0.0
    unrollings: int = 0
    spectral_radius: Dict[str, float] = field(default_factory=dict)
    decay_radius: Dict[str, float] = field(default_factory=dict)
    tail_bound: Optional[float] = None

    @property
    def probability(self) -> float:
        return self.probabilities[-1] if self.probabilities else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'probability': self.probability,
            'remaining': self.remaining,
            'unrollings': self.unrollings,
            'spectral_radius': self.spectral_radius,
            'decay_radius': self.decay_radius,
            'tail_bound': self.tail_bound,
            'probabilities': self.probabilities,
        }


def loop_spectra(program: Program, decls: Declarations,
                 settings: Optional[Settings] = None) -> Dict[str, Tuple[float, float]]:
    """(spectral radius, decay radius) of each loop's continue map, keyed by source position."""
    semantics = DenotationalSemantics(decls, settings=settings)
    spectra = {}
    for _, node in subprograms(program):
        if not isinstance(node, While):
            continue
        _, m1 = semantics.kernel.loop(node)
        continue_map = semantics.transfer(node.body) @ transfer_matrix([m1])
        moduli = np.abs(np.linalg.eigvals(continue_map))
        decaying = moduli[moduli < 1.0 - UNIT_CIRCLE_GAP]
        spectra[node.span()] = (float(np.max(moduli, initial=0.0)), float(np.max(decaying, initial=0.0)))
    return spectra


def geometric_tail(increment: float, decay: float) -> float:
    """Σ_{k>=1} increment·decay^k, the mass a geometrically decaying tail can still add."""
    if decay <= 0.0:
        return 0.0
    return increment * decay / (1.0 - decay)


def terminate_report(program: Program, rho, decls: Declarations, budget: Optional[int] = None,
                     settings: Optional[Settings] = None, tol: float = 1e-6) -> TerminationReport:
    """
    Termination probability with a convergence verdict.

    Args:
        program: Program
        rho: initial state
        decls: Program declarations
        budget: largest N tried (default: terminate_budget)
        settings: tolerances and budgets
        tol: mass left in loops at which the run counts as converged

    Returns:
        TerminationReport
    """
    settings = resolve(settings)
    budget = settings.budget("terminate_budget") if budget is None else budget
    rho = as_matrix(rho)
    total = float(np.trace(rho).real)
    dim = rho.shape[0]
    report = TerminationReport()
    spectra_known = True
    try:
        spectra = loop_spectra(program, decls, settings)
        report.spectral_radius = {span: radius for span, (radius, _) in spectra.items()}
        report.decay_radius = {span: decay for span, (_, decay) in spectra.items()}
    except DimensionLimitError:
        spectra_known = False
        logger.info("Dimension %d too large for loop spectra", dim)
    decay = max(report.decay_radius.values(), default=0.0)

    window = dim * dim + 1
    eps = settings.tol("loop_eps")
    n = min(64, budget)
    while True:
        sequence = termination_prob(program, rho, decls, n, settings)
        report.probabilities = sequence
        report.unrollings = n
        report.remaining = total - sequence[-1]
        increments = np.diff(sequence)
        if report.remaining <= tol:
            report.verdict = "converged>=1-tol"
            break
        if spectra_known:
            last = float(abs(increments[-1])) if len(increments) else 0.0
            report.tail_bound = geometric_tail(last, decay)
            stalled = len(increments) >= window and float(np.max(np.abs(increments[-window:]))) < eps
            if stalled and report.remaining - report.tail_bound > tol:
                report.verdict = "converged<1-tol"
                break
        if n >= budget:
            logger.warning("Termination not decided after %d unrollings (remaining mass %.3e)", n, report.remaining)
            break
        n = min(2 * n, budget)
    logger.debug("Termination: %s after %d unrollings, probability %.12f",
                 report.verdict, report.unrollings, report.probability)
    return report
