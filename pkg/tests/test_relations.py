"""Tests for quantum relations and their compositions."""

import numpy as np
import pytest

from qwhile_verifier.core.errors import DimensionMismatchError, QWhileError
from qwhile_verifier.core.operators import dagger, identity, tensor
from qwhile_verifier.hoare.formulas import CorrectnessFormula, check_triple
from qwhile_verifier.lang.ast import Unitary, seq_of
from qwhile_verifier.lang.declarations import Declarations
from qwhile_verifier.lang.parser import parse_predicate
from qwhile_verifier.relations.compositions import (
    RelationPredicate,
    bullet_comp,
    circle_comp,
    diamond_comp,
    relation_bounds,
)
from qwhile_verifier.relations.constructors import equality_pred, swap_operator, symmetrizer
from qwhile_verifier.utils.random_states import random_density, random_predicate, random_unitary

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


class TestConstructors:
    """SWAP, symmetrizers and equality predicates."""

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_swap_fixes_symmetrizers(self, d):
        swap = swap_operator(d)
        assert np.allclose(swap @ symmetrizer(d, "+"), symmetrizer(d, "+"))
        assert np.allclose(swap @ symmetrizer(d, "-"), -symmetrizer(d, "-"))

    @pytest.mark.parametrize("d", [2, 3])
    def test_symmetrizers_are_complementary_projectors(self, d):
        plus, minus = symmetrizer(d, "+"), symmetrizer(d, "-")
        assert np.allclose(plus @ plus, plus)
        assert np.allclose(plus + minus, identity(d * d))
        assert np.trace(plus).real == pytest.approx(d * (d + 1) / 2)

    def test_swap_exchanges_factors(self, rng):
        a, b = random_density(3, rng), random_density(3, rng)
        swap = swap_operator(3)
        assert np.allclose(swap @ tensor(a, b) @ swap, tensor(b, a))

    def test_bad_sign(self):
        with pytest.raises(QWhileError):
            symmetrizer(2, "*")

    @pytest.mark.parametrize("d", [2, 3])
    def test_equality_trace_against_products(self, d, rng):
        eq = equality_pred(d=d)
        for _ in range(5):
            rho, sigma = random_density(d, rng), random_density(d, rng)
            value = np.trace(eq @ tensor(rho, sigma))
            assert value == pytest.approx(np.trace(rho.T @ sigma) / d, abs=1e-12)

    def test_equality_in_rotated_basis(self):
        eq = equality_pred(HADAMARD)
        assert np.allclose(eq @ eq, eq)
        # |++> and |--> components only
        plus = HADAMARD[:, 0]
        assert np.real(np.vdot(np.kron(plus, plus), eq @ np.kron(plus, plus))) == pytest.approx(0.5)

    def test_non_orthonormal_basis(self):
        with pytest.raises(QWhileError):
            equality_pred(np.array([[1, 1], [0, 1]]))

    def test_literal_matches_constructor(self):
        assert np.allclose(parse_predicate("eq(3)", None, target=[], check=True), equality_pred(d=3))


class TestCompositions:
    """Circle, bullet and diamond compositions."""

    def test_circle_of_identities(self):
        assert np.allclose(circle_comp(identity(4), identity(6), d2=2), identity(6))

    def test_circle_of_equalities(self):
        eq = equality_pred(d=2)
        expected = (np.diag([1, 0, 0, 1])) / 8
        assert np.allclose(circle_comp(eq, eq, d2=2), expected)

    def test_bullet_of_equalities_swaps_entanglement(self):
        eq = equality_pred(d=2)
        assert np.allclose(bullet_comp(eq, eq, d2=2), eq / 4)

    def test_basis_change_is_invisible_for_cylinders(self, rng):
        a = tensor(random_predicate(2, rng), identity(2))
        b = tensor(random_predicate(2, rng), random_predicate(2, rng))
        u = random_unitary(2, rng)
        assert np.allclose(circle_comp(a, b, basis=u), circle_comp(a, b, d2=2))

    def test_middle_dimension_must_divide(self):
        with pytest.raises(DimensionMismatchError):
            circle_comp(identity(4), identity(6), d2=4)
        with pytest.raises(QWhileError):
            bullet_comp(identity(4), identity(4))

    @pytest.mark.parametrize("sign, trace", [("+", 3.0), ("-", 1.0)])
    def test_diamond_of_identities(self, sign, trace):
        out = diamond_comp(identity(4), identity(4), sign)
        assert np.allclose(out, trace * identity(4))
        bounds = relation_bounds(out)
        assert bounds["hermitian"]
        assert bounds["is_predicate"] == (trace <= 1.0)

    def test_diamond_needs_square_dimension(self):
        with pytest.raises(QWhileError):
            diamond_comp(identity(6), identity(6))

    def test_compositions_of_predicates_are_bounded(self, rng):
        for _ in range(10):
            a, b = random_predicate(4, rng), random_predicate(4, rng)
            for out in (circle_comp(a, b, d2=2), bullet_comp(a, b, d2=2)):
                bounds = relation_bounds(out)
                assert bounds["hermitian"]
                assert bounds["min_eig"] >= -1e-10

    def test_relation_predicate_checks_factors(self):
        relation = RelationPredicate(identity(6), (2, 3))
        assert relation.bounds()["is_predicate"]
        with pytest.raises(DimensionMismatchError):
            RelationPredicate(identity(6), (2, 2))


def parallel_program(d, u):
    """apply U(p); apply U(q) on two d-dimensional variables."""
    decls = Declarations()
    decls.add_variable("p", d)
    decls.add_variable("q", d)
    decls.add_gate("U", u)
    return decls, seq_of([Unitary("U", ("p",)), Unitary("U", ("q",))])


class TestRelationalTriples:
    """Relations as pre- and postconditions of a program acting on both sides."""

    @pytest.mark.parametrize("sign", ["+", "-"])
    def test_symmetrizers_are_preserved(self, sign, rng):
        for _ in range(20):
            d = int(rng.integers(2, 4))
            decls, program = parallel_program(d, random_unitary(d, rng))
            sym = symmetrizer(d, sign)
            assert check_triple(CorrectnessFormula(sym, program, sym, "total"), decls).holds

    def test_equality_moves_with_the_basis(self, rng):
        for _ in range(20):
            u = random_unitary(2, rng)
            decls, program = parallel_program(2, u)
            pre = equality_pred(dagger(u))
            assert check_triple(CorrectnessFormula(pre, program, equality_pred(d=2), "total"), decls).holds

    def test_rotated_equality_is_conjugated(self, rng):
        u = random_unitary(3, rng)
        uu = tensor(u, u)
        assert np.allclose(equality_pred(u), uu @ equality_pred(d=3) @ dagger(uu), atol=1e-12)

    def test_circle_stays_below_identity(self, rng):
        for _ in range(10):
            a, b = random_predicate(9, rng), random_predicate(9, rng)
            assert relation_bounds(circle_comp(a, b, d2=3))["max_eig"] <= 1 + 1e-10
