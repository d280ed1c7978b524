"""Tests for ranking functions of quantum loops."""

import numpy as np
import pytest

from qwhile_verifier.core.errors import QWhileError
from qwhile_verifier.core.operators import projector
from qwhile_verifier.hoare.proof_format import load_ranking
from qwhile_verifier.hoare.ranking import RankingChecker, RankingSpec, default_ranking_states, ranking_check

P0 = projector([1, 0])
P1 = projector([0, 1])


class TestRankingSpec:
    """Tests for RankingSpec construction and evaluation."""

    def test_parametric_value(self):
        spec = RankingSpec(observable=P1, scale=0.25, epsilon=0.1)
        assert spec.mode == "param"
        assert spec.value(P1) == 4
        assert spec.value(P0) == 0
        assert spec.value(0.5 * P1) == 2

    def test_table_value(self):
        spec = RankingSpec(table=((P1, 3), (P0, 0)), epsilon=0.5)
        assert spec.mode == "table"
        assert spec.value(P1) == 3
        assert spec.value(projector([1, 1])) is None

    @pytest.mark.parametrize("kwargs", [
        {},
        {"observable": P1, "table": ((P1, 1),)},
        {"observable": P1, "scale": 0.0},
        {"observable": P1, "epsilon": -1.0},
        {"observable": -P1},
        {"table": ((P1, -1),)},
    ])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(QWhileError):
            RankingSpec(**kwargs)

    def test_load_from_json_object(self, coin_loop):
        decls, _ = coin_loop
        (spec,) = load_ranking({"observable": "proj(|1>)", "scale": 0.05, "epsilon": 0.1}, decls)
        assert np.allclose(spec.observable, P1)
        assert spec.epsilon == pytest.approx(0.1)


class TestRankingCheck:
    """Tests for ranking_check and RankingChecker on the one-qubit coin loop."""

    def test_halving_observable_ranks_the_loop(self, coin_loop):
        decls, loop = coin_loop
        spec = RankingSpec(observable=P1, scale=0.05, epsilon=0.1, target=P1)
        report = ranking_check(loop, spec, default_ranking_states(2, extra=[P1]), decls)
        assert report.holds
        assert report.applicable > 0
        assert report.decrease_margin >= 0

    def test_wrong_observable_increases(self, coin_loop):
        decls, loop = coin_loop
        spec = RankingSpec(observable=P0, scale=0.05, epsilon=0.1, target=P1)
        report = ranking_check(loop, spec, [P1], decls)
        assert not report.holds
        assert report.violation["condition"] == "nonincrease"
        assert report.nonincrease_margin < 0

    def test_constant_ranking_never_decreases(self, coin_loop):
        decls, loop = coin_loop
        spec = RankingSpec(observable=np.eye(2), scale=1.0, epsilon=0.1, target=P1)
        report = ranking_check(loop, spec, [P1], decls)
        assert not report.holds
        assert report.violation["condition"] == "decrease"

    def test_table_without_entry_is_unranked(self, coin_loop):
        decls, loop = coin_loop
        spec = RankingSpec(table=((P1, 1),), epsilon=0.1, target=P1)
        report = ranking_check(loop, spec, [P1], decls)
        assert report.violation["condition"] == "unranked"

    def test_target_is_required(self, coin_loop):
        decls, loop = coin_loop
        with pytest.raises(QWhileError):
            ranking_check(loop, RankingSpec(observable=P1), [P1], decls)

    def test_only_loops_are_ranked(self, coin_loop):
        decls, loop = coin_loop
        with pytest.raises(QWhileError):
            ranking_check(loop.body, RankingSpec(observable=P1, target=P1), [P1], decls)

    def test_checker_records_both_conditions(self, coin_loop):
        decls, loop = coin_loop
        checker = RankingChecker(decls)
        assert checker.run(loop, RankingSpec(observable=P1, scale=0.05, epsilon=0.1), target=P1)
        assert [v.name for v in checker.verdicts] == ["ranking.nonincrease", "ranking.decrease"]
        assert checker.results["report"]["holds"]

    def test_checker_reports_witness(self, coin_loop):
        decls, loop = coin_loop
        checker = RankingChecker(decls)
        assert not checker.run(loop, RankingSpec(observable=P0, scale=0.05, epsilon=0.1), states=[P1], target=P1)
        failed = checker.failures()[0]
        assert failed.name == "ranking.nonincrease"
        assert abs(abs(failed.witness[1]) - 1.0) < 1e-9
