"""Tests for tolerance and budget settings."""

import pytest

from qwhile_verifier.config.tolerances import BUDGETS, DEFAULT_SEED, TOLERANCES, Settings, resolve


class TestSettings:
    """Tests for Settings."""

    def test_defaults(self):
        settings = Settings()
        assert settings.tol("psd") == 1e-8
        assert settings.tol("fix") == 1e-10
        assert settings.budget("max_len") == 32
        assert settings.budget("terminate_budget") == 20_000
        assert settings.seed == DEFAULT_SEED

    def test_overrides_route_by_name(self):
        settings = Settings.from_overrides(seed=7, psd=1e-6, max_iters=50, fix=None)
        assert settings.seed == 7
        assert settings.tol("psd") == 1e-6
        assert settings.tol("fix") == TOLERANCES["fix"]
        assert settings.budget("max_iters") == 50
        assert isinstance(settings.budget("max_iters"), int)

    def test_overrides_leave_module_defaults_alone(self):
        Settings.from_overrides(max_len=3)
        assert BUDGETS["max_len"] == 32
        assert resolve(None).budget("max_len") == 32

    @pytest.mark.parametrize("call", [
        lambda s: s.tol("nonsense"),
        lambda s: s.budget("nonsense"),
        lambda s: Settings.from_overrides(nonsense=1),
    ])
    def test_unknown_names(self, call, settings):
        with pytest.raises(KeyError):
            call(settings)

    def test_with_seed_and_dict(self, settings):
        reseeded = settings.with_seed(11)
        assert reseeded.seed == 11
        assert settings.seed == DEFAULT_SEED
        assert set(reseeded.to_dict()) == {"tolerances", "budgets", "seed"}
