"""
Random States - Seeded generators for density operators, predicates, unitaries
and channels used by sampling checks and property tests.

All randomness goes through numpy.random.default_rng so a run is reproducible
from its seed.
"""

from typing import List, Optional, Union

import numpy as np

from ..config.tolerances import DEFAULT_SEED
from ..core.operators import Superoperator, dagger

RngLike = Union[None, int, np.random.Generator]


def make_rng(seed: RngLike = None) -> np.random.Generator:
    """Return `seed` if it already is a Generator, else a new one seeded with it."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def ginibre(rows: int, cols: int, rng: RngLike = None) -> np.ndarray:
    rng = make_rng(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_density(d: int, rng: RngLike = None, rank: Optional[int] = None,
                   trace: float = 1.0) -> np.ndarray:
    """
    G G† normalized to the given trace, for a d x rank Ginibre matrix G.

    Args:
        d: dimension
        rng: seed or Generator
        rank: rank of G (default: full)
        trace: trace of the result (at most 1 for partial density operators)
    """
    g = ginibre(d, d if rank is None else rank, rng)
    rho = g @ dagger(g)
    return trace * rho / np.trace(rho).real


def random_unitary(d: int, rng: RngLike = None) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(ginibre(d, d, rng))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_predicate(d: int, rng: RngLike = None) -> np.ndarray:
    """Predicate with Haar-random eigenbasis and eigenvalues uniform in [0, 1]."""
    rng = make_rng(rng)
    u = random_unitary(d, rng)
    return (u * rng.uniform(0.0, 1.0, d)) @ dagger(u)


def random_kraus(d_in: int, d_out: int, count: int, rng: RngLike = None,
                 trace_preserving: bool = True) -> List[np.ndarray]:
    """
    Kraus operators cut from a random isometry C^d_in -> C^(count*d_out).

    Non-trace-preserving sets are scaled by a random factor in (0, 1].
    """
    rng = make_rng(rng)
    q, _ = np.linalg.qr(ginibre(count * d_out, d_in, rng))
    kraus = [q[i * d_out:(i + 1) * d_out, :] for i in range(count)]
    if not trace_preserving:
        scale = np.sqrt(rng.uniform(0.1, 1.0))
        kraus = [scale * k for k in kraus]
    return kraus


def random_channel(d: int, count: int = 2, rng: RngLike = None,
                   trace_preserving: bool = True) -> Superoperator:
    return Superoperator(tuple(random_kraus(d, d, count, rng, trace_preserving)))


def random_measurement(d: int, outcomes: int = 2, rng: RngLike = None) -> List[np.ndarray]:
    """Complete projective measurement in a random basis, outcome blocks as even as possible."""
    u = random_unitary(d, rng)
    blocks = np.array_split(np.arange(d), outcomes)
    return [u[:, block] @ dagger(u[:, block]) for block in blocks]
