"""Tests for proof rules, derivation trees and JSON proof objects."""

import json

import numpy as np
import pytest

from qwhile_verifier.core.errors import QWhileError, SideConditionError
from qwhile_verifier.core.operators import amplitude_damping, embed, identity, projector
from qwhile_verifier.hoare.derivation import DerivationChecker, verify_derivation
from qwhile_verifier.hoare.formulas import CorrectnessFormula, check_triple
from qwhile_verifier.hoare.proof_format import load_proof, load_proof_file, rule_counts
from qwhile_verifier.hoare.ranking import RankingSpec
from qwhile_verifier.hoare.rules import RuleApplication, apply_rule
from qwhile_verifier.lang.ast import Case, Skip, Unitary
from qwhile_verifier.lang.parser import parse_predicate

from conftest import corpus_path

P0 = projector([1, 0])
P1 = projector([0, 1])
MINUS = projector([1, -1])


def unitary(gate, vars, post, mode=None):
    return RuleApplication("Ax.UT", side={"gate": gate, "vars": vars, "post": post}, mode=mode)


class TestAxioms:
    """Ax.Sk, Ax.In.B, Ax.In.I and Ax.UT."""

    def test_skip(self, coin_loop):
        decls, _ = coin_loop
        formula = apply_rule(RuleApplication("Ax.Sk", side={"post": MINUS}), decls)
        assert formula.program == Skip()
        assert np.allclose(formula.pre, MINUS)
        assert formula.mode == "total"

    def test_hadamard_maps_one_to_minus(self, coin_loop):
        decls, _ = coin_loop
        formula = apply_rule(unitary("H", ("q",), P1), decls)
        assert np.max(np.abs(formula.pre - MINUS)) <= 1e-12
        assert check_triple(formula, decls).holds

    def test_init_boolean(self, coin_loop):
        decls, _ = coin_loop
        formula = apply_rule(RuleApplication("Ax.In.B", side={"var": "q", "post": P0}), decls)
        assert np.allclose(formula.pre, identity(2))

    def test_init_boolean_needs_a_qubit(self, qw4):
        decls, _ = qw4
        post = embed(projector([1, 0, 0, 0]), ["p"], decls.space())
        with pytest.raises(SideConditionError):
            apply_rule(RuleApplication("Ax.In.B", side={"var": "p", "post": post}), decls)
        formula = apply_rule(RuleApplication("Ax.In.I", side={"var": "p", "post": post}), decls)
        assert np.allclose(formula.pre, identity(8))

    def test_unknown_rule(self):
        with pytest.raises(QWhileError):
            RuleApplication("R.Magic")

    def test_missing_side_datum(self, coin_loop):
        decls, _ = coin_loop
        with pytest.raises(QWhileError):
            apply_rule(RuleApplication("Ax.UT", side={"gate": "H", "vars": ("q",)}), decls)


class TestStructuralRules:
    """R.SC, R.IF, R.LP, R.LT and R.Or."""

    def test_sequence_mismatch(self, qflip):
        decls, _ = qflip
        ghz = parse_predicate("proj(|000> + |111>)", decls)
        app = RuleApplication("R.SC", (unitary("H", ("d1",), ghz), unitary("H", ("d2",), ghz)))
        with pytest.raises(SideConditionError) as info:
            apply_rule(app, decls)
        assert info.value.rule == "R.SC"
        assert info.value.candidate is not None

    def test_case_resets_qubit(self, coin_loop):
        decls, _ = coin_loop
        app = RuleApplication("R.IF", (RuleApplication("Ax.Sk", side={"post": P0}), unitary("X", ("q",), P0)),
                              side={"meas": "M", "vars": ("q",)})
        formula = apply_rule(app, decls)
        assert isinstance(formula.program, Case)
        assert np.allclose(formula.pre, identity(2))
        assert check_triple(formula, decls).holds

    def test_case_branches_must_agree(self, coin_loop):
        decls, _ = coin_loop
        app = RuleApplication("R.IF", (RuleApplication("Ax.Sk", side={"post": P0}), unitary("X", ("q",), P1)),
                              side={"meas": "M", "vars": ("q",)})
        with pytest.raises(SideConditionError):
            apply_rule(app, decls)

    def test_partial_loop(self, coin_loop):
        decls, _ = coin_loop
        app = RuleApplication("R.LP", (unitary("H", ("q",), identity(2), mode="partial"),),
                              side={"meas": "M", "vars": ("q",), "post": identity(2)})
        formula = apply_rule(app, decls)
        assert formula.mode == "partial"
        assert np.allclose(formula.pre, identity(2))

    def test_partial_loop_rejects_total_premise(self, coin_loop):
        decls, _ = coin_loop
        app = RuleApplication("R.LP", (unitary("H", ("q",), identity(2)),),
                              side={"meas": "M", "vars": ("q",), "post": identity(2)})
        with pytest.raises(SideConditionError):
            apply_rule(app, decls)

    def test_total_loop_with_ranking(self, coin_loop):
        decls, program = coin_loop
        ranking = RankingSpec(observable=P1, scale=0.05, epsilon=0.1)
        app = RuleApplication("R.LT", (unitary("H", ("q",), identity(2)),),
                              side={"meas": "M", "vars": ("q",), "post": P0, "ranking": ranking})
        formula = apply_rule(app, decls)
        assert formula.program == program
        assert formula.mode == "total"
        assert check_triple(formula, decls).holds

    def test_total_loop_with_bad_ranking(self, coin_loop):
        decls, _ = coin_loop
        ranking = RankingSpec(observable=P0, scale=0.05, epsilon=0.1)
        app = RuleApplication("R.LT", (unitary("H", ("q",), identity(2)),),
                              side={"meas": "M", "vars": ("q",), "post": P0, "ranking": ranking})
        with pytest.raises(SideConditionError) as info:
            apply_rule(app, decls)
        assert info.value.margin < 0

    def test_weakening(self, qflip_triple):
        decls, _, phi, ghz = qflip_triple
        proof = load_proof_file(corpus_path("qflip_proof.json"), decls)
        weaker = apply_rule(RuleApplication("R.Or", (proof,), side={"pre": 0.5 * phi, "post": ghz}), decls)
        assert np.allclose(weaker.pre, 0.5 * phi)
        with pytest.raises(SideConditionError) as info:
            apply_rule(RuleApplication("R.Or", (proof,), side={"pre": identity(8), "post": ghz}), decls)
        assert info.value.margin == pytest.approx(-1.0, abs=1e-9)


class TestAuxiliaryRules:
    """Ax.Inv, R.TI, R.CC, R.Inv and R.SO."""

    def test_invariance(self, qw2):
        decls, _ = qw2
        program = Unitary("H", ("c",))
        formula = apply_rule(RuleApplication("Ax.Inv", side={"program": program, "vars": ("p",), "pred": P1}),
                             decls)
        assert formula.mode == "partial"
        assert np.allclose(formula.pre, embed(P1, ["p"], decls.space()))
        assert check_triple(formula, decls).holds

    def test_invariance_needs_disjoint_variables(self, qw2):
        decls, _ = qw2
        app = RuleApplication("Ax.Inv", side={"program": Unitary("H", ("c",)), "vars": ("c",), "pred": P1})
        with pytest.raises(SideConditionError):
            apply_rule(app, decls)

    def test_invariance_is_partial_only(self, qw2):
        decls, _ = qw2
        app = RuleApplication("Ax.Inv", side={"program": Unitary("H", ("c",)), "vars": ("p",), "pred": P1},
                              mode="total")
        with pytest.raises(SideConditionError):
            apply_rule(app, decls)

    def test_trace_out(self, qw2):
        decls, _ = qw2
        post = embed(P1, ["c"], decls.space())
        formula = apply_rule(RuleApplication("R.TI", (unitary("H", ("c",), post),), side={"traced": ("p",)}),
                             decls)
        assert formula.vars == ("c",)
        assert np.max(np.abs(formula.pre - MINUS)) <= 1e-12
        assert np.allclose(formula.post, P1)
        assert check_triple(formula, decls).holds

    def test_trace_out_needs_cylinder_post(self, qw2):
        decls, _ = qw2
        post = projector([1, 0, 0, 1])
        with pytest.raises(SideConditionError):
            apply_rule(RuleApplication("R.TI", (unitary("H", ("c",), post),), side={"traced": ("p",)}), decls)

    def test_convex_combination_fixed_point(self, qflip_triple):
        decls, _, phi, ghz = qflip_triple
        proof = load_proof_file(corpus_path("qflip_proof.json"), decls)
        formula = apply_rule(RuleApplication("R.CC", (proof, proof), side={"weights": [0.5, 0.5]}), decls)
        assert np.allclose(formula.pre, phi)
        assert np.allclose(formula.post, ghz)
        with pytest.raises(SideConditionError):
            apply_rule(RuleApplication("R.CC", (proof, proof), side={"weights": [0.7, 0.7]}), decls)

    def test_invariant_mix(self, qw2):
        decls, _ = qw2
        post = embed(P1, ["c"], decls.space())
        app = RuleApplication("R.Inv", (unitary("H", ("c",), post),),
                              side={"p": 0.5, "q": 0.5, "pred": P0, "vars": ("p",)})
        formula = apply_rule(app, decls)
        assert formula.mode == "total"
        assert check_triple(formula, decls).holds

    @pytest.mark.parametrize("gamma", [0.0, 0.25, 0.5, 1.0])
    def test_amplitude_damping_example(self, coin_loop, gamma):
        decls, _ = coin_loop
        app = RuleApplication("R.SO", (unitary("H", ("q",), P1),),
                              side={"channel": amplitude_damping(gamma), "vars": ("q",), "picture": "forward"})
        # the channel acts on the program's own qubit, so only the candidate is produced
        with pytest.raises(SideConditionError) as info:
            apply_rule(app, decls)
        candidate = info.value.candidate
        off = np.sqrt(1 - gamma) / 2
        expected_pre = np.array([[(1 + gamma) / 2, -off], [-off, (1 - gamma) / 2]])
        expected_post = np.diag([gamma, 1 - gamma])
        assert np.max(np.abs(candidate.pre - expected_pre)) <= 1e-12
        assert np.max(np.abs(candidate.post - expected_post)) <= 1e-12

    def test_dual_picture_on_disjoint_variable(self, qw2):
        decls, _ = qw2
        post = embed(P1, ["c"], decls.space()) @ embed(P0, ["p"], decls.space())
        app = RuleApplication("R.SO", (unitary("H", ("c",), post),),
                              side={"channel": amplitude_damping(0.3), "vars": ("p",)})
        formula = apply_rule(app, decls)
        assert check_triple(formula, decls).holds


class TestDerivations:
    """Proof trees loaded from JSON and checked node by node."""

    def test_qflip_proof(self, qflip_triple):
        decls, program, phi, ghz = qflip_triple
        tree = load_proof_file(corpus_path("qflip_proof.json"), decls)
        assert rule_counts(tree) == {"Ax.UT": 3, "R.SC": 2}
        report = verify_derivation(tree, decls)
        assert report.holds
        assert report.conclusion.same_as(CorrectnessFormula(phi, program, ghz, "total"), 1e-9)

    def test_semantic_checks_on_every_node(self, qflip):
        decls, _ = qflip
        checker = DerivationChecker(decls)
        assert checker.run(load_proof_file(corpus_path("qflip_proof.json"), decls), semantic=True)
        assert checker.results["nodes"] == 5
        assert checker.results["conclusion_mode"] == "total"
        assert any(v.kind == "semantic" for v in checker.verdicts)

    def test_wrong_claim_is_reported(self, qflip):
        decls, _ = qflip
        with open(corpus_path("qflip_proof.json"), "r", encoding="utf-8") as f:
            data = json.load(f)
        data["proof"]["pre"] = "I(8)"
        report = verify_derivation(load_proof(data, decls), decls)
        assert not report.holds
        assert report.conclusion is None
        assert report.failures()[0].details["condition"] == "conclusion matches the claimed formula"

    def test_failed_premise_propagates(self, qflip):
        decls, _ = qflip
        data = {"rule": "R.SC", "premises": [
            {"rule": "Ax.UT", "side": {"gate": "H", "vars": ["d1"], "post": "proj(|000>)"}},
            {"rule": "Ax.UT", "side": {"gate": "H", "vars": ["d2"], "post": "proj(|000>)"}},
        ]}
        report = verify_derivation(load_proof(data, decls), decls)
        assert not report.holds
        assert [v.holds for v in report.verdicts] == [True, True, False]

    def test_false_hypothesis(self, qflip):
        decls, _ = qflip
        data = {"formula": {"pre": "I(8)", "program": "apply H(d1);", "post": "proj(|000>)"}}
        report = verify_derivation(load_proof(data, decls), decls)
        assert not report.holds
        assert report.verdicts[0].kind == "semantic"

    def test_axiom_with_premises_rejected(self, qflip):
        decls, _ = qflip
        data = {"rule": "Ax.Sk", "side": {"post": "I(8)"},
                "premises": [{"rule": "Ax.Sk", "side": {"post": "I(8)"}}]}
        with pytest.raises(QWhileError):
            load_proof(data, decls)

    def test_malformed_application_is_a_failing_node(self, qflip):
        decls, _ = qflip
        leaf = RuleApplication("Ax.Sk", side={"post": identity(8)})
        report = verify_derivation(RuleApplication("R.SC", premises=(leaf,)), decls)
        assert not report.holds
        assert report.conclusion is None
        failure = report.failures()[0]
        assert failure.provenance == "R.SC@node"
        assert "takes 2 premise(s)" in failure.details["detail"]
