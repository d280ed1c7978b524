"""Tests for weakest preconditions and correctness-formula checking."""

import numpy as np
import pytest

from qwhile_verifier.core.errors import QWhileError
from qwhile_verifier.core.operators import expectation, identity, loewner_leq, projector
from qwhile_verifier.hoare.formulas import CorrectnessFormula, TripleChecker, check_triple, normalize_mode, pointwise
from qwhile_verifier.hoare.wp import wp_for_mode, wp_partial_bound, wp_total, wp_with_stats
from qwhile_verifier.lang.parser import parse, parse_predicate
from qwhile_verifier.semantics.denotational import denote_apply
from qwhile_verifier.utils.random_states import random_density, random_predicate

from conftest import read_corpus

NONTERMINATING = """
var q : 2;
meas Always = { stop: [[0, 0], [0, 0]]; go: [[1, 0], [0, 1]]; };
prog { while Always(q) == go { skip; } }
"""


class TestWeakestPrecondition:
    """Tests for wp_total and the partial-correctness bound."""

    def test_qflip_maps_ghz_to_phi(self, qflip_triple):
        decls, program, phi, ghz = qflip_triple
        assert np.max(np.abs(wp_total(program, ghz, decls) - phi)) <= 1e-10

    def test_duality_with_denotation(self, teleport, rng):
        decls, annotated = teleport
        program = annotated.program
        for _ in range(10):
            b = random_predicate(8, rng)
            rho = random_density(8, rng)
            lhs = expectation(b, denote_apply(program, rho, decls))
            rhs = expectation(wp_total(program, b, decls), rho)
            assert abs(lhs - rhs) <= 1e-8

    def test_loop_fixed_point_converges(self, qw2):
        decls, program = qw2
        result, stats = wp_with_stats(program, identity(4), decls)
        assert stats.converged
        assert stats.monotone
        # the walk from any input terminates after at most one unrolling
        assert np.allclose(result, identity(4), atol=1e-9)

    def test_nonterminating_loop(self):
        decls, program = parse(NONTERMINATING)
        assert np.allclose(wp_total(program, identity(2), decls), 0.0)
        assert np.allclose(wp_partial_bound(program, projector([1, 0]), decls), identity(2))

    @pytest.mark.parametrize("fixture", ["qflip", "qw4"])
    def test_monotone_in_the_postcondition(self, fixture, request, rng):
        decls, program = request.getfixturevalue(fixture)
        dim = decls.space().dim
        for _ in range(5):
            larger = random_predicate(dim, rng)
            values, vectors = np.linalg.eigh(larger)
            root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
            smaller = root @ random_predicate(dim, rng) @ root
            for mode in ("total", "partial"):
                low, _ = wp_for_mode(program, smaller, decls, mode)
                high, _ = wp_for_mode(program, larger, decls, mode)
                assert loewner_leq(low, high, tol=1e-6).holds

    def test_partial_bound_is_total_plus_divergence(self, qw4, rng):
        decls, program = qw4
        b = random_predicate(8, rng)
        total, _ = wp_for_mode(program, b, decls, "total")
        partial, _ = wp_for_mode(program, b, decls, "partial")
        divergence = identity(8) - wp_total(program, identity(8), decls)
        assert np.allclose(partial, total + divergence, atol=1e-6)


class TestCorrectnessFormulas:
    """Tests for check_triple and TripleChecker."""

    def test_mode_aliases(self):
        assert normalize_mode("tot") == "total"
        assert normalize_mode("par") == "partial"
        with pytest.raises(QWhileError):
            normalize_mode("sometimes")

    def test_qflip_triple_holds(self, qflip_triple):
        decls, program, phi, ghz = qflip_triple
        verdict = check_triple(CorrectnessFormula(phi, program, ghz, "total"), decls)
        assert verdict.holds
        assert verdict.margin >= -1e-9

    def test_quarter_triple_fails_but_holds_pointwise(self, qflip_triple):
        decls, program, _, ghz = qflip_triple
        quarter = parse_predicate(read_corpus("quarter_000.pred").strip(), decls)
        formula = CorrectnessFormula(quarter, program, ghz, "total")
        verdict = check_triple(formula, decls)
        assert not verdict.holds
        assert verdict.witness is not None
        rho = projector(np.eye(8)[0])
        lhs, rhs = pointwise(formula, rho, decls)
        assert lhs == pytest.approx(0.25, abs=1e-10)
        assert rhs == pytest.approx(0.25, abs=1e-10)

    def test_witness_violates_trace_inequality(self, qflip_triple):
        decls, program, _, ghz = qflip_triple
        formula = CorrectnessFormula(identity(8), program, ghz, "total")
        verdict = check_triple(formula, decls)
        assert not verdict.holds
        assert verdict.details["witness_lhs"] > verdict.details["witness_rhs"]

    def test_partial_holds_where_total_fails(self):
        decls, program = parse(NONTERMINATING)
        post = projector([1, 0])
        assert check_triple(CorrectnessFormula(identity(2), program, post, "partial"), decls).holds
        assert not check_triple(CorrectnessFormula(identity(2), program, post, "total"), decls).holds

    def test_shape_mismatch(self):
        with pytest.raises(QWhileError):
            CorrectnessFormula(identity(2), None, identity(4))

    def test_checker_collects_verdicts(self, qflip_triple):
        decls, program, phi, ghz = qflip_triple
        checker = TripleChecker(decls)
        holds = checker.run([CorrectnessFormula(phi, program, ghz), CorrectnessFormula(identity(8), program, ghz)])
        assert not holds
        assert [v.holds for v in checker.verdicts] == [True, False]
        assert checker.results["count"] == 2
