"""
Rules - The proof rules for partial and total correctness, plus the auxiliary
axioms and rules, as checked constructors of correctness formulas.

A RuleApplication names a rule, its premises (formulas, or further rule
applications whose conclusions are used) and the side data the rule needs.
apply_rule verifies every side condition numerically and either returns the
conclusion or raises SideConditionError; it never emits an unsound conclusion.

Side data keys per rule:

    Ax.Sk     post
    Ax.In.B   var, post                 (var must have dimension 2)
    Ax.In.I   var, post
    Ax.UT     gate, vars, post
    R.SC      -                         (two premises)
    R.IF      meas, vars, [labels]      (one premise per outcome)
    R.LP      meas, vars, post, [continue_label]
    R.LT      as R.LP, plus ranking, [states], [iterations]
    R.Or      pre, post
    Ax.Inv    program, vars, pred
    R.TI      traced
    R.CC      weights                   (one premise per weight)
    R.Inv     p, q, pred, vars
    R.SO      channel, vars, [picture]

Axioms also accept `scope`, a variable subset the conclusion lives on.
Predicates given for a variable subset (`pred` of Ax.Inv and R.Inv, the
channel of R.SO) are operators on those variables in the listed order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import QWhileError, SideConditionError
from ..core.operators import (
    Superoperator,
    apply,
    as_matrix,
    check_predicate_bounds,
    dagger,
    dual_apply,
    eigenvalue_range,
    embed,
    identity,
    loewner_leq,
    normalized_partial_trace,
)
from ..lang.ast import Case, Init, Program, Seq, Skip, Unitary, While
from ..lang.declarations import Declarations
from ..lang.structure import vars_of
from ..semantics.kernel import ProgramKernel
from .formulas import CorrectnessFormula, normalize_mode
from .ranking import RankingSpec, default_ranking_states, ranking_check
from .wp import wp_with_stats

logger = logging.getLogger(__name__)

RULES = (
    "Ax.Sk", "Ax.In.B", "Ax.In.I", "Ax.UT", "R.SC", "R.IF", "R.LP", "R.LT",
    "R.Or", "Ax.Inv", "R.TI", "R.CC", "R.Inv", "R.SO",
)
AXIOMS = ("Ax.Sk", "Ax.In.B", "Ax.In.I", "Ax.UT", "Ax.Inv")
PICTURES = ("dual", "forward")


@dataclass(frozen=True, eq=False)
class RuleApplication:
    """
    One rule instance in a derivation.

    Attributes:
        rule: rule tag, one of RULES
        premises: proved premises; a nested RuleApplication stands for its conclusion
        side: side data (see the module docstring)
        mode: requested correctness mode of the conclusion (None: inherit from
            the premises, total for premise-free axioms)
        label: optional name used in reports
        claim: the conclusion the proof author states, compared by verify_derivation
    """
    rule: str
    premises: Tuple[Union["RuleApplication", CorrectnessFormula], ...] = ()
    side: Dict[str, Any] = field(default_factory=dict)
    mode: Optional[str] = None
    label: str = ""
    claim: Optional[CorrectnessFormula] = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise QWhileError(f"Unknown rule '{self.rule}', expected one of {', '.join(RULES)}")
        object.__setattr__(self, "premises", tuple(self.premises))
        if self.mode is not None:
            object.__setattr__(self, "mode", normalize_mode(self.mode))


def conclusion_of(premise: Union[RuleApplication, CorrectnessFormula], decls: Declarations,
                  settings: Optional[Settings] = None) -> CorrectnessFormula:
    if isinstance(premise, RuleApplication):
        return apply_rule(premise, decls, settings)
    if isinstance(premise, CorrectnessFormula):
        return premise
    raise QWhileError(f"Premise must be a formula or a rule application, got {type(premise).__name__}")


# ---------------------------------------------------------------------- #
# helpers
# ---------------------------------------------------------------------- #

class _Context:
    """Declarations, settings and operator cache for one rule instance."""

    def __init__(self, app: RuleApplication, decls: Declarations, settings: Settings,
                 scope: Optional[Sequence[str]] = None):
        self.app = app
        self.rule = app.rule
        self.settings = settings
        self.scope = None if scope is None else tuple(scope)
        self.decls = decls if scope is None else decls.restricted(scope)
        self.kernel = ProgramKernel(self.decls, settings=settings)
        self.space = self.kernel.space

    @property
    def dim(self) -> int:
        return self.space.dim

    def need(self, key: str) -> Any:
        if key not in self.app.side:
            raise QWhileError(f"({self.rule}) missing side datum '{key}'")
        return self.app.side[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.app.side.get(key, default)

    def predicate(self, key: str, matrix: Any = None) -> np.ndarray:
        matrix = as_matrix(self.need(key) if matrix is None else matrix)
        if matrix.shape != (self.dim, self.dim):
            raise QWhileError(
                f"({self.rule}) '{key}' has shape {matrix.shape}, formula space has dimension {self.dim}")
        check_predicate_bounds(matrix, self.settings.tol("herm"), self.settings.tol("psd"),
                               f"({self.rule}) {key}")
        return matrix

    def local_operator(self, matrix: Any, vars: Sequence[str]) -> np.ndarray:
        """Embed an operator on `vars` into the formula space."""
        return embed(as_matrix(matrix), list(vars), self.space)

    def formula(self, pre, program: Program, post, mode: str) -> CorrectnessFormula:
        return CorrectnessFormula(pre, program, post, mode, self.scope)

    def fail(self, condition: str, detail: str = "", candidate=None, margin: Optional[float] = None):
        raise SideConditionError(self.rule, condition, detail, candidate, margin)

    def require_equal(self, a: np.ndarray, b: np.ndarray, condition: str, candidate=None):
        if a.shape != b.shape:
            self.fail(condition, f"shapes {a.shape} and {b.shape}", candidate)
        deviation = float(np.max(np.abs(a - b), initial=0.0))
        if deviation > self.settings.tol("eq"):
            self.fail(condition, f"max entrywise difference {deviation:.3e}", candidate, -deviation)

    def require_leq(self, a: np.ndarray, b: np.ndarray, condition: str, candidate=None) -> float:
        order = loewner_leq(a, b, self.settings.tol("psd"), self.settings.tol("herm"))
        if not order.holds:
            self.fail(condition, f"min eigenvalue {order.min_eig:.3e}", candidate, order.min_eig)
        return order.min_eig

    def require_disjoint(self, vars: Sequence[str], program: Program, condition: str, candidate=None):
        shared = sorted(set(vars) & set(vars_of(program)))
        if shared:
            self.fail(condition, f"shared variables {shared}", candidate)


def _mode(app: RuleApplication, premises: Sequence[CorrectnessFormula], default: str = "total") -> str:
    modes = {p.mode for p in premises}
    if len(modes) > 1:
        raise SideConditionError(app.rule, "premises share one correctness mode",
                                 f"got {sorted(modes)}")
    inherited = modes.pop() if modes else default
    if app.mode is not None and app.mode != inherited:
        raise SideConditionError(app.rule, "conclusion mode matches the premises",
                                 f"requested {app.mode}, premises prove {inherited}")
    return inherited


def _scope_of(premises: Sequence[CorrectnessFormula], app: RuleApplication) -> Optional[Tuple[str, ...]]:
    scopes = {p.vars for p in premises}
    if len(scopes) > 1:
        raise SideConditionError(app.rule, "premises live on one variable space",
                                 f"got {sorted(str(s) for s in scopes)}")
    return scopes.pop() if scopes else app.side.get("scope")


def _count(app: RuleApplication, premises: Sequence, expected: int):
    if len(premises) != expected:
        raise QWhileError(f"({app.rule}) takes {expected} premise(s), got {len(premises)}")


# ---------------------------------------------------------------------- #
# axioms and structural rules
# ---------------------------------------------------------------------- #

def _skip(ctx: _Context, premises) -> CorrectnessFormula:
    post = ctx.predicate("post")
    return ctx.formula(post, Skip(), post, ctx.app.mode or "total")


def _init(ctx: _Context, premises) -> CorrectnessFormula:
    var = ctx.need("var")
    program = Init(var)
    ctx.decls.check_statement(program)
    post = ctx.predicate("post")
    if ctx.rule == "Ax.In.B" and ctx.space.dim_of(var) != 2:
        ctx.fail("initialized variable has type Bool", f"'{var}' has dimension {ctx.space.dim_of(var)}")
    pre = sum(dagger(k) @ post @ k for k in ctx.kernel.kraus(program))
    return ctx.formula(pre, program, post, ctx.app.mode or "total")


def _unitary(ctx: _Context, premises) -> CorrectnessFormula:
    program = Unitary(ctx.need("gate"), tuple(ctx.need("vars")))
    ctx.decls.check_statement(program)
    post = ctx.predicate("post")
    (u,) = ctx.kernel.kraus(program)
    return ctx.formula(dagger(u) @ post @ u, program, post, ctx.app.mode or "total")


def _sequence(ctx: _Context, premises) -> CorrectnessFormula:
    _count(ctx.app, premises, 2)
    first, second = premises
    mode = _mode(ctx.app, premises)
    candidate = ctx.formula(first.pre, Seq(first.program, second.program), second.post, mode)
    ctx.require_equal(first.post, second.pre, "postcondition of the first premise equals "
                      "the precondition of the second", candidate)
    return candidate


def _case(ctx: _Context, premises) -> CorrectnessFormula:
    meas = ctx.need("meas")
    vars = tuple(ctx.need("vars"))
    labels = tuple(str(label) for label in ctx.get("labels", ctx.decls.measurement(meas).keys()))
    _count(ctx.app, premises, len(labels))
    mode = _mode(ctx.app, premises)
    program = Case(meas, vars, tuple(zip(labels, (p.program for p in premises))))
    ctx.decls.check_statement(program)
    ops = ctx.kernel.branches(program)
    pre = sum(dagger(ops[label]) @ p.pre @ ops[label] for label, p in zip(labels, premises))
    post = premises[0].post
    candidate = ctx.formula(pre, program, post, mode)
    for label, p in zip(labels[1:], premises[1:]):
        ctx.require_equal(post, p.post, f"all branches share one postcondition (branch '{label}')", candidate)
    return candidate


def _loop(ctx: _Context, premises) -> CorrectnessFormula:
    _count(ctx.app, premises, 1)
    (body,) = premises
    wanted = "partial" if ctx.rule == "R.LP" else "total"
    mode = _mode(ctx.app, premises, wanted)
    if mode != wanted:
        ctx.fail(f"{ctx.rule} proves {wanted} correctness", f"premise is {mode}")
    program = While(ctx.need("meas"), tuple(ctx.need("vars")), str(ctx.get("continue_label", "1")),
                    body.program)
    ctx.decls.check_statement(program)
    m0, m1 = ctx.kernel.loop(program)
    post = ctx.predicate("post")
    invariant = dagger(m0) @ post @ m0 + dagger(m1) @ body.pre @ m1
    candidate = ctx.formula(invariant, program, post, mode)
    ctx.require_equal(body.post, invariant, "premise postcondition is M0†AM0 + M1†BM1", candidate)
    if ctx.rule == "R.LT":
        _check_ranking(ctx, program, dagger(m1) @ body.pre @ m1, candidate)
    return candidate


def _check_ranking(ctx: _Context, loop: While, target: np.ndarray, candidate):
    specs = ctx.need("ranking")
    specs = [specs] if isinstance(specs, RankingSpec) else list(specs)
    if not specs:
        ctx.fail("a ranking function is supplied", candidate=candidate)
    states = ctx.get("states")
    if states is None:
        states = default_ranking_states(ctx.dim, ctx.settings, [target])
    for spec in specs:
        report = ranking_check(loop, spec, states, ctx.decls, ctx.settings, ctx.get("iterations"), target)
        if not report.holds:
            margin = min(report.nonincrease_margin, report.decrease_margin)
            ctx.fail(f"t is a (M1†BM1, {spec.epsilon:g})-ranking function",
                     str(report.violation), candidate, float(margin))


def _weaken(ctx: _Context, premises) -> CorrectnessFormula:
    _count(ctx.app, premises, 1)
    (premise,) = premises
    mode = _mode(ctx.app, premises)
    pre = ctx.predicate("pre")
    post = ctx.predicate("post")
    candidate = ctx.formula(pre, premise.program, post, mode)
    ctx.require_leq(pre, premise.pre, "A ⊑ A′", candidate)
    ctx.require_leq(premise.post, post, "B′ ⊑ B", candidate)
    return candidate


# ---------------------------------------------------------------------- #
# auxiliary axioms and rules
# ---------------------------------------------------------------------- #

def _invariance(ctx: _Context, premises) -> CorrectnessFormula:
    program = ctx.need("program")
    ctx.decls.check_program(program)
    vars = tuple(ctx.need("vars"))
    pred = ctx.local_operator(ctx.need("pred"), vars)
    check_predicate_bounds(pred, ctx.settings.tol("herm"), ctx.settings.tol("psd"), "(Ax.Inv) pred")
    mode = ctx.app.mode or "partial"
    candidate = ctx.formula(pred, program, pred, mode)
    if mode != "partial":
        ctx.fail("Ax.Inv proves partial correctness only", candidate=candidate)
    ctx.require_disjoint(vars, program, "var(P) ∩ V = ∅", candidate)
    return candidate


def _trace_out(ctx: _Context, premises) -> CorrectnessFormula:
    _count(ctx.app, premises, 1)
    (premise,) = premises
    mode = _mode(ctx.app, premises)
    traced = tuple(ctx.need("traced"))
    for name in traced:
        ctx.space.index(name)
    kept = tuple(n for n in ctx.space.names if n not in traced)
    if not kept:
        ctx.fail("V is nonempty", "every variable is traced out")
    pre = normalized_partial_trace(premise.pre, traced, ctx.space)
    post = normalized_partial_trace(premise.post, traced, ctx.space)
    candidate = CorrectnessFormula(pre, premise.program, post, mode, kept)
    ctx.require_disjoint(traced, premise.program, "var(P) ⊆ V and V ∩ W = ∅", candidate)
    ctx.require_equal(embed(post, list(kept), ctx.space), premise.post,
                      "premise postcondition is B ⊗ I_W", candidate)
    return candidate


def _convex(ctx: _Context, premises) -> CorrectnessFormula:
    weights = [float(w) for w in ctx.need("weights")]
    _count(ctx.app, premises, len(weights))
    if not premises:
        raise QWhileError("(R.CC) needs at least one premise")
    mode = _mode(ctx.app, premises)
    program = premises[0].program
    for p in premises[1:]:
        if p.program != program:
            ctx.fail("all premises are about one program")
    pre = sum(w * p.pre for w, p in zip(weights, premises))
    post = sum(w * p.post for w, p in zip(weights, premises))
    candidate = ctx.formula(pre, program, post, mode)
    eq = ctx.settings.tol("eq")
    low = min(weights)
    if low < -eq:
        ctx.fail("p_i ≥ 0", f"weights {weights}", candidate, low)
    if sum(weights) > 1 + eq:
        ctx.fail("Σ p_i ≤ 1", f"sum {sum(weights):.6g}", candidate, 1 - sum(weights))
    return candidate


def _invariant_mix(ctx: _Context, premises) -> CorrectnessFormula:
    _count(ctx.app, premises, 1)
    (premise,) = premises
    mode = _mode(ctx.app, premises)
    p, q = float(ctx.need("p")), float(ctx.need("q"))
    vars = tuple(ctx.need("vars"))
    c = ctx.local_operator(ctx.need("pred"), vars)
    check_predicate_bounds(c, ctx.settings.tol("herm"), ctx.settings.tol("psd"), "(R.Inv) pred")
    candidate = ctx.formula(p * premise.pre + q * c, premise.program, p * premise.post + q * c, mode)
    eq = ctx.settings.tol("eq")
    if min(p, q) < -eq:
        ctx.fail("p, q ≥ 0", f"p={p:g}, q={q:g}", candidate, min(p, q))
    if p + q > 1 + eq:
        ctx.fail("p + q ≤ 1", f"p + q = {p + q:.6g}", candidate, 1 - p - q)
    ctx.require_disjoint(vars, premise.program, "var(P) ∩ V = ∅", candidate)
    if mode == "total":
        terminates, _ = wp_with_stats(premise.program, identity(ctx.dim), ctx.decls, ctx.settings)
        ctx.require_equal(terminates, identity(ctx.dim), "P terminates: ⟦P⟧*(I) = I", candidate)
    return candidate


def _channel_kraus(channel: Any) -> Tuple[np.ndarray, ...]:
    if isinstance(channel, Superoperator):
        return channel.kraus
    return Superoperator(tuple(as_matrix(k) for k in channel)).kraus


def _super_operator(ctx: _Context, premises) -> CorrectnessFormula:
    _count(ctx.app, premises, 1)
    (premise,) = premises
    mode = _mode(ctx.app, premises)
    vars = tuple(ctx.need("vars"))
    picture = ctx.get("picture", "dual")
    if picture not in PICTURES:
        raise QWhileError(f"(R.SO) picture must be one of {PICTURES}, got {picture!r}")
    kraus = [ctx.local_operator(k, vars) for k in _channel_kraus(ctx.need("channel"))]
    transform = dual_apply if picture == "dual" else apply
    pre = transform(kraus, premise.pre)
    post = transform(kraus, premise.post)
    candidate = ctx.formula(pre, premise.program, post, mode)
    ctx.require_disjoint(vars, premise.program, "var(P) ∩ V = ∅", candidate)
    if picture == "forward":
        ctx.require_leq(apply(kraus, identity(ctx.dim)), identity(ctx.dim), "E(I) ⊑ I", candidate)
    for name, matrix in (("pre", pre), ("post", post)):
        low, high = eigenvalue_range(matrix)
        if low < -ctx.settings.tol("psd") or high > 1 + ctx.settings.tol("psd"):
            ctx.fail("conclusion predicates lie in [0, I]",
                     f"{name} spans [{low:.3e}, {high:.6g}]", candidate, min(low, 1 - high))
    return candidate


_HANDLERS = {
    "Ax.Sk": _skip,
    "Ax.In.B": _init,
    "Ax.In.I": _init,
    "Ax.UT": _unitary,
    "R.SC": _sequence,
    "R.IF": _case,
    "R.LP": _loop,
    "R.LT": _loop,
    "R.Or": _weaken,
    "Ax.Inv": _invariance,
    "R.TI": _trace_out,
    "R.CC": _convex,
    "R.Inv": _invariant_mix,
    "R.SO": _super_operator,
}


def apply_rule(app: RuleApplication, decls: Declarations,
               settings: Optional[Settings] = None) -> CorrectnessFormula:
    """
    Build the conclusion of a rule instance.

    Args:
        app: the rule instance
        decls: Program declarations
        settings: tolerances and budgets

    Returns:
        The conclusion formula

    Raises:
        SideConditionError: a side condition fails; `.candidate` carries the
            conclusion the rule would have produced when it could be built
    """
    settings = resolve(settings)
    premises = [conclusion_of(p, decls, settings) for p in app.premises]
    ctx = _Context(app, decls, settings, _scope_of(premises, app))
    conclusion = _HANDLERS[app.rule](ctx, premises)
    logger.debug("%s concluded a %s formula on %d dimensions", app.rule, conclusion.mode, ctx.dim)
    return conclusion
