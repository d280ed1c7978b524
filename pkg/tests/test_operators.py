"""Tests for the operator core: Loewner order, channels, duals, embeddings."""

import numpy as np
import pytest

from qwhile_verifier.core.errors import DimensionMismatchError, NotHermitianError, PredicateBoundsError
from qwhile_verifier.core.operators import (
    Space,
    Superoperator,
    amplitude_damping,
    apply,
    basis_vector,
    compose,
    dual_apply,
    embed,
    expectation,
    identity,
    kraus_equivalent,
    loewner_leq,
    normalized_partial_trace,
    partial_trace,
    projector,
    superoperator_from_transfer,
    tensor,
    transfer_matrix,
    unitary_channel,
)
from qwhile_verifier.utils.random_states import (
    random_channel,
    random_density,
    random_kraus,
    random_predicate,
    random_unitary,
)


class TestLoewnerOrder:
    """Tests for loewner_leq."""

    def test_projector_below_identity(self):
        verdict = loewner_leq(projector([1, 1]), identity(2))
        assert verdict.holds
        assert verdict.min_eig == pytest.approx(0.0, abs=1e-12)
        assert verdict.witness is None

    def test_failure_reports_eigen_witness(self):
        a = projector([1, 0])
        b = 0.25 * identity(2)
        verdict = loewner_leq(a, b)
        assert not verdict.holds
        assert verdict.min_eig == pytest.approx(-0.75)
        assert abs(abs(verdict.witness[0]) - 1.0) < 1e-12

    def test_tolerance_absorbs_roundoff(self):
        a = identity(2) + 1e-10 * identity(2)
        assert loewner_leq(a, identity(2), tol=1e-8).holds
        assert not loewner_leq(a, identity(2), tol=1e-12).holds

    def test_non_hermitian_rejected(self):
        with pytest.raises(NotHermitianError):
            loewner_leq(np.array([[0, 1], [0, 0]]), identity(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            loewner_leq(identity(2), identity(3))


class TestChannels:
    """Tests for Superoperator and its representations."""

    def test_trace_increasing_channel_rejected(self):
        with pytest.raises(PredicateBoundsError):
            Superoperator((2 * identity(2),))

    @pytest.mark.parametrize("gamma", [0.0, 0.25, 0.5, 1.0])
    def test_amplitude_damping_is_trace_preserving(self, gamma):
        channel = amplitude_damping(gamma)
        assert channel.trace_preserving
        excited = projector(basis_vector(1, 2))
        out = apply(channel, excited)
        assert out[0, 0].real == pytest.approx(gamma)
        assert out[1, 1].real == pytest.approx(1 - gamma)

    def test_transfer_matrix_recovers_channel(self, rng):
        channel = random_channel(3, count=3, rng=rng)
        recovered = superoperator_from_transfer(transfer_matrix(channel), 3, 3)
        assert kraus_equivalent(channel, recovered, tol=1e-9)

    def test_compose_applies_first_then_second(self, rng):
        first = random_channel(2, rng=rng)
        second = random_channel(2, rng=rng)
        rho = random_density(2, rng)
        expected = apply(second, apply(first, rho))
        assert np.allclose(apply(compose(first, second), rho), expected, atol=1e-12)

    def test_unitary_channel_conjugates(self, rng):
        u = random_unitary(3, rng)
        rho = random_density(3, rng)
        channel = unitary_channel(u)
        assert channel.trace_preserving_residual() <= 1e-12
        assert np.allclose(apply(channel, rho), u @ rho @ u.conj().T, atol=1e-12)


class TestDuality:
    """tr(A E(rho)) = tr(E*(A) rho) and the predicate-preserving properties of E*."""

    def test_duality_random_instances(self, rng):
        for _ in range(200):
            d = int(rng.integers(2, 9))
            kraus = random_kraus(d, d, int(rng.integers(1, 4)), rng, trace_preserving=bool(rng.integers(0, 2)))
            a = random_predicate(d, rng)
            rho = random_density(d, rng)
            lhs = expectation(a, apply(kraus, rho))
            rhs = expectation(dual_apply(kraus, a), rho)
            assert abs(lhs - rhs) <= 1e-10

    def test_dual_maps_predicates_to_predicates(self, rng):
        for _ in range(20):
            channel = random_channel(4, count=2, rng=rng, trace_preserving=False)
            dual = dual_apply(channel, random_predicate(4, rng))
            values = np.linalg.eigvalsh(0.5 * (dual + dual.conj().T))
            assert values[0] >= -1e-10
            assert values[-1] <= 1 + 1e-10

    def test_dual_of_trace_preserving_fixes_identity(self, rng):
        channel = random_channel(3, count=2, rng=rng)
        assert np.allclose(dual_apply(channel, identity(3)), identity(3), atol=1e-10)


class TestEmbedding:
    """Tests for cylindric extension and partial traces."""

    def test_embed_respects_variable_order(self):
        env = Space.of(("a", 2), ("b", 3))
        op = np.diag([1.0, 2.0, 3.0])
        assert np.allclose(embed(op, ["b"], env), tensor(identity(2), op))
        x = np.array([[0, 1], [1, 0]])
        assert np.allclose(embed(x, ["a"], env), tensor(x, identity(3)))

    def test_embed_reorders_targets(self, rng):
        env = Space.of(("a", 2), ("b", 2))
        u = random_unitary(4, rng)
        swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
        assert np.allclose(embed(u, ["b", "a"], env), swap @ u @ swap)

    def test_partial_trace_of_product(self, rng):
        env = Space.of(("a", 2), ("b", 3))
        rho_a = random_density(2, rng)
        rho_b = random_density(3, rng)
        assert np.allclose(partial_trace(tensor(rho_a, rho_b), ["b"], env), rho_a)
        assert np.allclose(partial_trace(tensor(rho_a, rho_b), ["a"], env), rho_b)

    def test_normalized_partial_trace_keeps_predicates(self, rng):
        env = Space.of(("a", 2), ("b", 2))
        a = random_predicate(4, rng)
        reduced = normalized_partial_trace(a, ["b"], env)
        values = np.linalg.eigvalsh(reduced)
        assert values[0] >= -1e-12
        assert values[-1] <= 1 + 1e-12

    def test_partial_trace_undoes_embedding(self, rng):
        env = Space.of(("a", 2), ("b", 3), ("c", 2))
        op = random_predicate(4, rng)
        assert np.allclose(partial_trace(embed(op, ["a", "c"], env), ["b"], env), 3 * op)
        single = random_predicate(2, rng)
        assert np.allclose(partial_trace(embed(single, ["c"], env), ["a", "b"], env), 6 * single)

    def test_embed_wrong_dimension(self):
        env = Space.of(("a", 2))
        with pytest.raises(DimensionMismatchError):
            embed(identity(3), ["a"], env)


def below(b, rng):
    """A predicate A with A <= B, as B^(1/2) C B^(1/2) for a random predicate C."""
    values, vectors = np.linalg.eigh(b)
    root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    return root @ random_predicate(b.shape[0], rng) @ root


class TestOrderProperties:
    """Tensor products and transitivity under the Loewner order."""

    def test_tensor_of_positive_operators_is_positive(self, rng):
        for _ in range(20):
            a = random_density(2, rng, rank=1)
            b = random_density(3, rng)
            assert loewner_leq(np.zeros((6, 6)), tensor(a, b)).holds

    def test_tensor_is_monotone_in_both_factors(self, rng):
        for _ in range(20):
            a2, b2 = random_predicate(2, rng), random_predicate(3, rng)
            a1, b1 = below(a2, rng), below(b2, rng)
            assert loewner_leq(tensor(a1, b1), tensor(a2, b2)).holds

    def test_transitivity_doubles_the_slack(self, rng):
        tol = 1e-8
        for _ in range(10):
            a = random_predicate(4, rng)
            b = a + random_density(4, rng, rank=1) - 0.9 * tol * identity(4)
            c = b + random_density(4, rng, rank=1) - 0.9 * tol * identity(4)
            assert loewner_leq(a, b, tol=tol).holds
            assert loewner_leq(b, c, tol=tol).holds
            assert loewner_leq(a, c, tol=2 * tol).holds
            assert not loewner_leq(a, c, tol=tol).holds

    def test_witness_for_quarter_basis_state_below_phi(self):
        # |Phi> = (|000> + |011> + |101> + |110>) / 2
        phi = (basis_vector(0, 8) + basis_vector(3, 8) + basis_vector(5, 8) + basis_vector(6, 8)) / 2
        zero = basis_vector(0, 8)
        verdict = loewner_leq(0.25 * projector(zero), projector(phi))
        assert not verdict.holds
        assert verdict.min_eig == pytest.approx((3 - np.sqrt(21)) / 8, abs=1e-12)
        # the minimizer lies in span{|000>, |Phi>}: |000> + (sqrt(21) - 5)|Phi>
        expected = zero + (np.sqrt(21) - 5) * phi
        expected = expected / np.linalg.norm(expected)
        assert np.allclose(verdict.witness, expected, atol=1e-10)
