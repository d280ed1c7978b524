"""
Verdict - One checked obligation with its numeric margin and optional witness.
"""

from typing import Any, Dict, List, Optional

import numpy as np


def encode_complex(value: complex) -> List[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def encode_vector(vector: Optional[np.ndarray]) -> Optional[List[List[float]]]:
    """Serialize a complex vector as a list of [re, im] pairs."""
    if vector is None:
        return None
    return [encode_complex(x) for x in np.asarray(vector).reshape(-1)]


def encode_matrix(matrix: Optional[np.ndarray]) -> Optional[List[List[List[float]]]]:
    """Serialize a complex matrix as rows of [re, im] pairs."""
    if matrix is None:
        return None
    return [[encode_complex(x) for x in row] for row in np.asarray(matrix)]


class Verdict:
    """
    Represents the outcome of a single check.
    Each verdict has a name, a truth value, the margin it was decided by,
    and (on failure) a witness.
    """

    def __init__(self, name: str, holds: bool, margin: float,
                 witness: Optional[np.ndarray] = None,
                 provenance: Optional[str] = None,
                 kind: str = "check"):
        """
        Initialize a verdict.

        Args:
            name: What was checked
            holds: Whether the check passed
            margin: Numeric margin (e.g. minimum eigenvalue); negative means violated
            witness: Counterexample vector, if any
            provenance: Where the obligation came from (e.g. "Ax.UT@3:5")
            kind: Obligation category ("vc", "ranking", "triple", ...)
        """
        self.name = name
        self.holds = bool(holds)
        self.margin = float(margin)
        self.witness = witness
        self.provenance = provenance if provenance is not None else name
        self.kind = kind
        self.details: Dict[str, Any] = {}

    def add_detail(self, key: str, value: Any):
        """
        Attach additional data to this verdict.

        Args:
            key: Key for the data
            value: JSON-serializable value
        """
        self.details[key] = value

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert the verdict to a dictionary for serialization.

        Returns:
            Dictionary representation of the verdict
        """
        data = {
            'name': self.name,
            'kind': self.kind,
            'provenance': self.provenance,
            'holds': self.holds,
            'margin': self.margin,
            'witness': encode_vector(self.witness),
        }
        if self.details:
            data['details'] = self.details
        return data

    def __repr__(self) -> str:
        status = "holds" if self.holds else "FAILS"
        return f"Verdict({self.provenance}: {status}, margin={self.margin:.3e})"
