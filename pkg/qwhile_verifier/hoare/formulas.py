"""
Formulas - Hoare triples {A} P {B} and their semantic check.

{A} P {B} holds for total correctness iff A <= ⟦P⟧*(B), and for partial
correctness iff A <= ⟦P⟧*(B) + I − ⟦P⟧*(I).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.base_checker import BaseChecker
from ..core.errors import QWhileError
from ..core.operators import as_matrix, check_predicate_bounds, expectation, loewner_leq, projector
from ..core.verdict import Verdict
from ..lang.ast import Program
from ..lang.declarations import Declarations
from ..semantics.denotational import denote_apply
from .wp import wp_for_mode

logger = logging.getLogger(__name__)

MODES = ("partial", "total")
_MODE_ALIASES = {"par": "partial", "partial": "partial", "tot": "total", "total": "total"}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise QWhileError(f"Unknown correctness mode '{mode}', expected par/partial or tot/total") from None


def _frozen(matrix) -> np.ndarray:
    copy = np.array(as_matrix(matrix), dtype=np.complex128, copy=True)
    copy.setflags(write=False)
    return copy


@dataclass(frozen=True, eq=False)
class CorrectnessFormula:
    """
    {pre} program {post} in a correctness mode.

    Attributes:
        pre, post: predicates on the declared space (or on `vars` when given)
        program: the program
        mode: "partial" or "total" (aliases "par"/"tot" accepted)
        vars: optional subset of the declared variables the formula lives on
    """
    pre: np.ndarray
    program: Program
    post: np.ndarray
    mode: str = "total"
    vars: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        pre = _frozen(self.pre)
        post = _frozen(self.post)
        if pre.shape != post.shape:
            raise QWhileError(f"Pre- and postcondition have different shapes {pre.shape} and {post.shape}")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)
        if self.vars is not None:
            object.__setattr__(self, "vars", tuple(self.vars))

    def scope(self, decls: Declarations) -> Declarations:
        """The declarations the formula is interpreted over."""
        return decls if self.vars is None else decls.restricted(self.vars)

    def validate(self, decls: Declarations, settings: Optional[Settings] = None):
        """Check that both predicates are valid on the declared space and the program is well typed."""
        settings = resolve(settings)
        decls = self.scope(decls)
        d = decls.space().dim
        if self.pre.shape != (d, d):
            raise QWhileError(f"Formula predicates have shape {self.pre.shape}, program space has dimension {d}")
        check_predicate_bounds(self.pre, settings.tol("herm"), settings.tol("psd"), "precondition")
        check_predicate_bounds(self.post, settings.tol("herm"), settings.tol("psd"), "postcondition")
        decls.check_program(self.program)

    def same_as(self, other: "CorrectnessFormula", tol: float) -> bool:
        return (self.mode == other.mode and self.program == other.program and self.vars == other.vars
                and self.pre.shape == other.pre.shape
                and float(np.max(np.abs(self.pre - other.pre), initial=0.0)) <= tol
                and float(np.max(np.abs(self.post - other.post), initial=0.0)) <= tol)

    def with_mode(self, mode: str) -> "CorrectnessFormula":
        return CorrectnessFormula(self.pre, self.program, self.post, mode, self.vars)


def check_triple(formula: CorrectnessFormula, decls: Declarations, tol: Optional[float] = None,
                 settings: Optional[Settings] = None, name: str = "triple") -> Verdict:
    """
    Decide a correctness formula.

    Args:
        formula: The triple to check
        decls: Program declarations
        tol: Loewner slack (default: psd tolerance)
        settings: tolerances and budgets
        name: verdict name

    Returns:
        Verdict whose margin is the minimum eigenvalue of bound − pre. On failure
        the witness w is reported together with both sides of the trace
        inequality evaluated at rho = |w><w|.
    """
    settings = resolve(settings)
    decls = formula.scope(decls)
    tol = settings.tol("psd") if tol is None else tol
    bound, stats = wp_for_mode(formula.program, formula.post, decls, formula.mode, settings)
    order = loewner_leq(formula.pre, bound, tol, settings.tol("herm"))
    verdict = Verdict(name, order.holds, order.min_eig, order.witness,
                      provenance=f"{name}[{formula.mode}]", kind="triple")
    verdict.add_detail("mode", formula.mode)
    verdict.add_detail("wp", stats.to_dict())
    if order.witness is not None:
        rho = projector(order.witness)
        output = denote_apply(formula.program, rho, decls, settings)
        lhs = expectation(formula.pre, rho)
        rhs = expectation(formula.post, output)
        if formula.mode == "partial":
            rhs += 1.0 - float(np.trace(output).real)
        verdict.add_detail("witness_lhs", lhs)
        verdict.add_detail("witness_rhs", rhs)
        logger.info("Triple fails: at the witness tr(A rho) = %.6g > %.6g", lhs, rhs)
    if not stats.converged:
        verdict.add_detail("wp_gap", stats.gap)
    return verdict


def pointwise(formula: CorrectnessFormula, rho, decls: Declarations,
              settings: Optional[Settings] = None):
    """(tr(A rho), right-hand side) of the trace inequality at one state."""
    rho = as_matrix(rho)
    decls = formula.scope(decls)
    output = denote_apply(formula.program, rho, decls, settings)
    lhs = expectation(formula.pre, rho)
    rhs = expectation(formula.post, output)
    if formula.mode == "partial":
        rhs += float(np.trace(rho).real) - float(np.trace(output).real)
    return lhs, rhs


class TripleChecker(BaseChecker):
    """
    Checks a batch of correctness formulas against one set of declarations.
    """

    def __init__(self, decls: Declarations, settings: Optional[Settings] = None):
        super().__init__("Triple Checker")
        self.decls = decls
        self.settings = resolve(settings)

    def run(self, formulas: Sequence[CorrectnessFormula], tol: Optional[float] = None) -> bool:
        for index, formula in enumerate(formulas):
            name = "triple" if len(formulas) == 1 else f"triple{index}"
            self.add_verdict(check_triple(formula, self.decls, tol, self.settings, name))
        self.results['count'] = len(formulas)
        return self.holds
