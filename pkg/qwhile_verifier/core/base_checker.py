"""
Base Checker - Abstract base class for every analysis that produces verdicts.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional
import json
import logging
import os

from .verdict import Verdict

logger = logging.getLogger(__name__)


class BaseChecker(ABC):
    """
    Abstract base class for all checkers.
    Each checker (outlines, invariants, ranking functions, ...) collects
    Verdicts and can serialize them.
    """

    def __init__(self, name: str):
        """
        Initialize the base checker.

        Args:
            name: Name of the checker
        """
        self.name = name
        self.verdicts: List[Verdict] = []
        self.results: Dict[str, Any] = {}  # additional numeric data

    def add_verdict(self, verdict: Verdict) -> Verdict:
        """
        Record a verdict.

        Args:
            verdict: Verdict to record

        Returns:
            The same verdict
        """
        self.verdicts.append(verdict)
        if not verdict.holds:
            logger.info("%s: %s failed (margin %.3e)", self.name, verdict.provenance, verdict.margin)
        return verdict

    @property
    def holds(self) -> bool:
        """Conjunction of all recorded verdicts."""
        return all(v.holds for v in self.verdicts)

    def worst_margin(self) -> Optional[float]:
        if not self.verdicts:
            return None
        return min(v.margin for v in self.verdicts)

    def failures(self) -> List[Verdict]:
        return [v for v in self.verdicts if not v.holds]

    @abstractmethod
    def run(self, *args, **kwargs) -> bool:
        """
        Run the check. Must be implemented by subclasses.

        Returns:
            Whether every obligation holds
        """
        pass

    def to_dict(self) -> Dict[str, Any]:
        return {
            'checker': self.name,
            'holds': self.holds,
            'worst_margin': self.worst_margin(),
            'verdicts': [v.to_dict() for v in self.verdicts],
            'results': self.results,
        }

    def save_results(self, output_dir: str, run_id: str) -> str:
        """
        Save the checker's verdicts to a JSON file.

        Args:
            output_dir: Directory to save results
            run_id: Unique identifier for this run

        Returns:
            Path of the written file
        """
        os.makedirs(output_dir, exist_ok=True)
        filename = f"{self.name.lower().replace(' ', '_')}_{run_id}.json"
        filepath = os.path.join(output_dir, filename)
        with open(filepath, 'w') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        logger.info("Results saved to %s", filepath)
        return filepath
