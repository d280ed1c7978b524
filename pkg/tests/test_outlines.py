"""Tests for proof outlines: standardization, verification conditions and strong soundness."""

import numpy as np
import pytest

from qwhile_verifier.core.errors import QWhileError
from qwhile_verifier.core.operators import projector
from qwhile_verifier.hoare.ranking import RankingSpec
from qwhile_verifier.lang.parser import parse, parse_state
from qwhile_verifier.outlines.discharge import OutlineChecker, discharge
from qwhile_verifier.outlines.outline import delete_annotations, outline_from
from qwhile_verifier.outlines.soundness import strong_soundness_trace
from qwhile_verifier.outlines.standardize import standardize
from qwhile_verifier.outlines.vcgen import vcgen
from qwhile_verifier.utils.random_states import random_density

from conftest import TELEPORT_GRID, read_corpus, teleport_source

SWAPPED_PAIRS = ("Minus (x) Q0 (x) Psi1 + Plus (x) Q1 (x) Psi2",
                 "Minus (x) Q0 (x) Psi2 + Plus (x) Q1 (x) Psi1")

COIN_OUTLINE = """
var q : 2;
meas M = { 0: [[1, 0], [0, 0]]; 1: [[0, 0], [0, 1]]; };
prog {
  @{ I(2) }
  while M(q) == 1 {
    @{ I(2) }
    apply H(q);
  }
  @{ proj(|0>) }
}
"""

BARE_LOOP = """
var q : 2;
meas M = { 0: [[1, 0], [0, 0]]; 1: [[0, 0], [0, 1]]; };
prog {
  @{ I(2) }
  skip;
  while M(q) == 1 {
    apply H(q);
  }
  @{ proj(|0>) }
}
"""


def mutated_teleport():
    source = teleport_source()
    assert SWAPPED_PAIRS[0] in source
    return parse(source.replace(*SWAPPED_PAIRS))


class TestTeleportOutline:
    """The annotated teleportation protocol."""

    @pytest.mark.parametrize("alpha, beta", TELEPORT_GRID)
    def test_outline_discharges(self, alpha, beta):
        decls, annotated = parse(teleport_source(alpha, beta))
        checker = OutlineChecker(decls)
        assert checker.run(outline_from(annotated), outer=True)
        assert checker.results["vc_count"] == 9
        assert checker.results["ranking_count"] == 0
        assert all(v.margin >= -1e-9 for v in checker.verdicts)

    def test_swapped_states_fail(self):
        decls, annotated = mutated_teleport()
        checker = OutlineChecker(decls)
        assert not checker.run(outline_from(annotated))
        failed = checker.failures()
        assert failed
        assert all(v.witness is not None for v in failed)

    def test_strong_soundness_on_random_states(self, teleport, rng):
        decls, annotated = teleport
        states = [random_density(8, rng) for _ in range(3)]
        checker = OutlineChecker(decls)
        assert checker.run(outline_from(annotated), states=states)
        traces = checker.results["soundness"]
        assert len(traces) == 3
        assert all(t["clause1"] and t["margin"] >= -1e-9 for t in traces)

    def test_strong_soundness_catches_swapped_states(self):
        decls, annotated = mutated_teleport()
        standard = standardize(outline_from(annotated), decls)
        rho = parse_state(read_corpus("tel_input.state").strip(), decls.space(), decls).matrix
        trace = strong_soundness_trace(standard, rho, decls)
        assert not trace.holds
        assert trace.violation["clause"] == 2
        assert trace.violation["step"] == 1
        assert trace.violation["sum"] == pytest.approx(0.5, abs=1e-9)

    def test_terminated_run_ends_at_postcondition(self, teleport):
        decls, annotated = teleport
        standard = standardize(outline_from(annotated), decls)
        rho = parse_state(read_corpus("tel_input.state").strip(), decls.space(), decls).matrix
        trace = strong_soundness_trace(standard, rho, decls)
        assert trace.holds
        assert trace.lhs == pytest.approx(1.0)
        assert trace.sums[-1] == pytest.approx(1.0)


class TestStandardization:
    """Inserting missing predicates and deleting annotations."""

    def test_every_subprogram_gets_a_predicate(self, teleport):
        decls, annotated = teleport
        standard = standardize(outline_from(annotated), decls)
        assert standard.inferred == ()
        assert standard.to_dict()["subprograms"] == len(standard.pre)
        assert np.allclose(standard.pre_of(()), standard.pre_of(annotated.entry_path()))

    def test_deleted_weakening_step(self, teleport):
        decls, annotated = teleport
        outline = outline_from(annotated)
        trimmed = delete_annotations(outline, [("pre", annotated.entry_path(), 1)])
        checker = OutlineChecker(decls)
        assert checker.run(trimmed)
        assert checker.results["vc_count"] == 8

    def test_deleted_annotation_is_inferred(self, teleport):
        decls, annotated = teleport
        hadamard = (0, 0, 1)
        trimmed = delete_annotations(outline_from(annotated), [("pre", hadamard, 0)])
        standard = standardize(trimmed, decls)
        assert standard.inferred == (hadamard,)
        assert discharge(vcgen(standard, decls)).holds

    def test_standardizing_twice_changes_nothing(self, teleport):
        decls, annotated = teleport
        trimmed = delete_annotations(outline_from(annotated), [("pre", (0, 0, 1), 0)])
        once = standardize(trimmed, decls)
        twice = standardize(once.outline, decls)
        assert twice.inferred == ()
        assert twice.same_as(once, 1e-12)

    def test_boundaries_cannot_be_deleted(self, teleport):
        _, annotated = teleport
        outline = outline_from(annotated)
        first, last = outline.boundary_keys()
        for key in (first, last):
            with pytest.raises(QWhileError):
                delete_annotations(outline, [key])

    def test_plain_program_is_not_an_outline(self, qflip):
        _, program = qflip
        with pytest.raises(QWhileError):
            outline_from(program)


class TestLoopOutlines:
    """Invariants and ranking obligations of loops."""

    def test_partial_loop_outline(self):
        decls, annotated = parse(COIN_OUTLINE)
        checker = OutlineChecker(decls)
        assert checker.run(outline_from(annotated, "partial"), outer=True)
        assert checker.results["vc_count"] == 2

    def test_total_outline_needs_a_ranking(self):
        decls, annotated = parse(COIN_OUTLINE)
        checker = OutlineChecker(decls)
        assert not checker.run(outline_from(annotated, "total"))
        assert checker.results["ranking_count"] == 1
        assert checker.failures()[0].kind == "ranking"

    def test_total_outline_with_ranking(self):
        decls, annotated = parse(COIN_OUTLINE)
        ranking = RankingSpec(observable=projector([0, 1]), scale=0.05, epsilon=0.1)
        checker = OutlineChecker(decls)
        assert checker.run(outline_from(annotated, "total", {(): ranking}), outer=True)
        assert {v.name for v in checker.verdicts} >= {"ranking.nonincrease", "ranking.decrease"}

    def test_partial_loop_needs_an_invariant(self):
        decls, annotated = parse(BARE_LOOP)
        with pytest.raises(QWhileError):
            standardize(outline_from(annotated, "partial"), decls)

    def test_total_loop_invariant_is_inferred(self):
        decls, annotated = parse(BARE_LOOP)
        standard = standardize(outline_from(annotated, "total"), decls)
        assert (1,) in standard.inferred
        assert np.allclose(standard.pre_of((1,)), np.eye(2), atol=1e-8)

    def test_ranking_must_sit_on_a_loop(self):
        decls, annotated = parse(BARE_LOOP)
        ranking = RankingSpec(observable=projector([0, 1]))
        with pytest.raises(QWhileError):
            standardize(outline_from(annotated, "total", {(0,): ranking}), decls)
