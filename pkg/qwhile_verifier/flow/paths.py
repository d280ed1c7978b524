"""
Paths - Enumerating paths of an SVTS and the channels they compose to.

A set of paths is prime when no path in it has a proper initial segment that
is also in it. The first-reach set to a location l (paths from l0 that reach l
for the first time at their end) is prime, and every subset of a prime set is.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config.tolerances import Settings, resolve
from ..core.errors import DimensionLimitError
from ..core.operators import Superoperator, as_matrix, dagger, superoperator_from_transfer
from .svts import SVTS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SvtsPath:
    """Transition indices from l0 with the locations they pass through."""
    transitions: Tuple[int, ...]
    locations: Tuple[int, ...]
    continues: int = 0

    def __len__(self) -> int:
        return len(self.transitions)

    def is_prefix_of(self, other: "SvtsPath") -> bool:
        return len(self) < len(other) and other.transitions[:len(self)] == self.transitions

    def apply(self, svts: SVTS, rho: np.ndarray) -> np.ndarray:
        """E_π(rho)."""
        state = rho
        for index in self.transitions:
            state = sum(k @ state @ dagger(k) for k in svts.transitions[index].channel.kraus)
        return state

    def transfer(self, svts: SVTS) -> np.ndarray:
        result = np.eye(svts.dim * svts.dim, dtype=np.complex128)
        for index in self.transitions:
            result = svts.transfer(index) @ result
        return result

    def describe(self) -> str:
        return " -> ".join(f"l{l}" for l in self.locations)


@dataclass
class PrimePathSet:
    """
    A prime set of paths to one location.

    Attributes:
        target: the location every path ends at
        paths: the paths, shortest first
        truncated: enumeration stopped at the path budget
    """
    svts: SVTS
    target: int
    paths: List[SvtsPath] = field(default_factory=list)
    max_len: Optional[int] = None
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.paths)

    def is_prime(self) -> bool:
        keys = {p.transitions for p in self.paths}
        return not any(p.transitions[:k] in keys for p in self.paths for k in range(len(p)))

    def subset(self, indices: Iterable[int]) -> "PrimePathSet":
        return PrimePathSet(self.svts, self.target, [self.paths[i] for i in indices], self.max_len, self.truncated)

    def up_to(self, length: int) -> "PrimePathSet":
        return PrimePathSet(self.svts, self.target, [p for p in self.paths if len(p) <= length],
                            length, self.truncated)

    def apply(self, rho) -> np.ndarray:
        """E_Π(rho) = Σ_π E_π(rho)."""
        rho = as_matrix(rho)
        total = np.zeros_like(rho)
        for path in self.paths:
            total = total + path.apply(self.svts, rho)
        return total

    def channel(self, settings: Optional[Settings] = None) -> Superoperator:
        """E_Π as a Kraus superoperator, through the sum of transfer matrices."""
        settings = resolve(settings)
        d = self.svts.dim
        if d > settings.budget("max_superoperator_dimension"):
            raise DimensionLimitError(
                f"Dimension {d} exceeds max_superoperator_dimension="
                f"{settings.budget('max_superoperator_dimension')} for path channels")
        total = np.zeros((d * d, d * d), dtype=np.complex128)
        for path in self.paths:
            total = total + path.transfer(self.svts)
        return superoperator_from_transfer(total, d, d, settings.tol("kraus_drop"))


def _enumerate(svts: SVTS, target: int, max_len: Optional[int], max_unrollings: Optional[int],
               first_reach: bool, budget: int) -> Tuple[List[SvtsPath], bool]:
    if max_len is None and max_unrollings is None:
        raise ValueError("Path enumeration needs max_len or max_unrollings")
    found: List[SvtsPath] = []
    stack: List[SvtsPath] = [SvtsPath((), (svts.initial,), 0)]
    truncated = False
    while stack:
        path = stack.pop()
        here = path.locations[-1]
        if here == target:
            found.append(path)
            if first_reach:
                continue
        if max_len is not None and len(path) >= max_len:
            continue
        for index in reversed(svts.outgoing(here)):
            transition = svts.transitions[index]
            continues = path.continues + (transition.kind == "continue")
            if max_unrollings is not None and continues > max_unrollings:
                continue
            stack.append(SvtsPath(path.transitions + (index,), path.locations + (transition.target,), continues))
        if len(found) >= budget:
            truncated = True
            logger.warning("Path enumeration to l%d stopped at %d paths", target, budget)
            break
    found.sort(key=lambda p: (len(p), p.transitions))
    return found, truncated


def prime_paths(svts: SVTS, location, max_len: Optional[int] = None,
                max_unrollings: Optional[int] = None, settings: Optional[Settings] = None) -> PrimePathSet:
    """
    The first-reach set to `location`: paths from l0 ending there whose proper
    prefixes do not reach it.

    Args:
        svts: the transition system
        location: index, "l<k>", label or subprogram path
        max_len: longest path in transitions (default: max_len budget unless
            max_unrollings is given)
        max_unrollings: largest number of continue transitions on a path
        settings: tolerances and budgets

    Returns:
        PrimePathSet, shortest paths first
    """
    settings = resolve(settings)
    target = svts.location(location)
    if max_len is None and max_unrollings is None:
        max_len = settings.budget("max_len")
    paths, truncated = _enumerate(svts, target, max_len, max_unrollings, True, settings.budget("max_unroll"))
    return PrimePathSet(svts, target, paths, max_len, truncated)


def all_paths(svts: SVTS, location, max_len: Optional[int] = None, max_unrollings: Optional[int] = None,
              settings: Optional[Settings] = None) -> List[SvtsPath]:
    """Every path from l0 ending at `location`, including those passing it earlier."""
    settings = resolve(settings)
    target = svts.location(location)
    if max_len is None and max_unrollings is None:
        max_len = settings.budget("max_len")
    return _enumerate(svts, target, max_len, max_unrollings, False, settings.budget("max_unroll"))[0]


def make_prime(paths: Sequence[SvtsPath]) -> List[SvtsPath]:
    """Drop every path that extends another path of the collection."""
    return [p for p in paths if not any(q.is_prefix_of(p) for q in paths)]
