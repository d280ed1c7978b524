"""
Configuration of numerical tolerances and budgets for qwhile_verifier.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

# Numerical tolerances
TOLERANCES = {
    "herm": 1e-9,        # entrywise Hermiticity
    "eq": 1e-9,          # entrywise equality (unitarity, completeness)
    "psd": 1e-8,         # eigenvalue slack for the Loewner order
    "trace": 1e-9,       # trace bounds of density operators
    "fix": 1e-10,        # entrywise change that stops wp loop iteration
    "loop_eps": 1e-10,   # residual continue-branch trace that stops unrolling
    "kraus_drop": 1e-12, # Kraus operators below this norm are dropped
    "rank_slack": 1e-9,  # slack inside ceil() of ranking functions
}

# Iteration and size budgets
BUDGETS = {
    "max_unroll": 10_000,
    "max_iters": 10_000,
    "max_steps": 100_000,
    "max_dimension": 2 ** 12,
    "max_superoperator_dimension": 32,
    "max_len": 32,
    "subset_budget": 16,
    "sample_count": 8,
    "rank_iterations": 16,
    "terminate_budget": 20_000,
}

DEFAULT_SEED = 2024


@dataclass(frozen=True)
class Settings:
    """
    Effective tolerances and budgets for one run.
    """
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(TOLERANCES))
    budgets: Dict[str, int] = field(default_factory=lambda: dict(BUDGETS))
    seed: int = DEFAULT_SEED

    def tol(self, name: str) -> float:
        if name not in self.tolerances:
            raise KeyError(f"Unknown tolerance '{name}'")
        return self.tolerances[name]

    def budget(self, name: str) -> int:
        if name not in self.budgets:
            raise KeyError(f"Unknown budget '{name}'")
        return self.budgets[name]

    @classmethod
    def from_overrides(cls, seed: Optional[int] = None, **overrides: Any) -> "Settings":
        """
        Build settings from defaults plus keyword overrides.

        Args:
            seed: RNG seed (default: DEFAULT_SEED)
            **overrides: tolerance or budget names mapped to new values;
                None values are ignored

        Returns:
            A new Settings instance
        """
        tolerances = dict(TOLERANCES)
        budgets = dict(BUDGETS)
        for key, value in overrides.items():
            if value is None:
                continue
            if key in tolerances:
                tolerances[key] = float(value)
            elif key in budgets:
                budgets[key] = int(value)
            else:
                raise KeyError(f"Unknown setting '{key}'")
        return cls(tolerances=tolerances, budgets=budgets,
                   seed=DEFAULT_SEED if seed is None else int(seed))

    def with_seed(self, seed: int) -> "Settings":
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tolerances": dict(sorted(self.tolerances.items())),
            "budgets": dict(sorted(self.budgets.items())),
            "seed": self.seed,
        }


DEFAULT_SETTINGS = Settings()


def resolve(settings: Optional[Settings]) -> Settings:
    """Return `settings` or the module defaults."""
    return DEFAULT_SETTINGS if settings is None else settings


def validate_tolerances():
    """Validate that every tolerance is positive and every budget a positive int."""
    for name, value in TOLERANCES.items():
        assert value > 0, f"Tolerance '{name}' must be positive"
        assert value < 1e-3, f"Tolerance '{name}' is too loose to be meaningful"

    for name, value in BUDGETS.items():
        assert isinstance(value, int) and value > 0, f"Budget '{name}' must be a positive integer"

    assert TOLERANCES["psd"] >= TOLERANCES["herm"], "PSD slack must not be tighter than Hermiticity"
    print("All tolerances validated successfully.")


if __name__ == "__main__":
    validate_tolerances()
