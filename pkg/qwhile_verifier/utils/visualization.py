"""
Visualization - Plots of termination sequences, spectra and verdict margins.

matplotlib is imported on first use with the Agg backend, so the rest of the
package works without it.
"""

import logging
import os
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: Optional[str]):
    plt = _pyplot()
    fig.tight_layout()
    if path is not None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        fig.savefig(path, dpi=150, bbox_inches='tight')
        logger.info("Figure saved to %s", path)
        plt.close(fig)
    return fig


def plot_termination(probabilities: Sequence[float], path: Optional[str] = None,
                     title: str = "Termination probability"):
    """
    Plot t_N and the remaining mass 1 − t_N (log scale) against N.

    Args:
        probabilities: t_0, ..., t_N
        path: file to save to (the figure is returned open when None)
        title: figure title

    Returns:
        The matplotlib Figure
    """
    plt = _pyplot()
    values = np.asarray(probabilities, dtype=float)
    steps = np.arange(len(values))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 5))

    ax1.plot(steps, values, 'b.-', label='t_N')
    ax1.set_xlabel('Loop unrollings (N)')
    ax1.set_ylabel('Probability')
    ax1.set_title(title)
    ax1.set_ylim(-0.05, 1.05)
    ax1.legend()
    ax1.grid(True, alpha=0.3)

    remaining = np.clip(1.0 - values, 1e-300, None)
    ax2.semilogy(steps, remaining, 'r.-', label='1 - t_N')
    ax2.set_xlabel('Loop unrollings (N)')
    ax2.set_ylabel('Remaining mass (log scale)')
    ax2.set_title('Non-terminated mass')
    ax2.legend()
    ax2.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_spectrum(matrix, path: Optional[str] = None, title: str = "Spectrum"):
    """Bar chart of the eigenvalues of a Hermitian operator, e.g. B − A of a failed VC."""
    plt = _pyplot()
    matrix = np.asarray(matrix)
    values = np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))
    fig, ax = plt.subplots(figsize=(8, 4))
    colors = ['tab:red' if v < 0 else 'tab:blue' for v in values]
    ax.bar(np.arange(len(values)), values, color=colors)
    ax.axhline(0.0, color='black', linewidth=0.8)
    ax.set_xlabel('Index')
    ax.set_ylabel('Eigenvalue')
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_margins(verdicts, path: Optional[str] = None, title: str = "Verdict margins"):
    """Horizontal bars of each verdict's margin, failing ones in red."""
    plt = _pyplot()
    names = [v.provenance for v in verdicts]
    margins = [v.margin for v in verdicts]
    fig, ax = plt.subplots(figsize=(8, max(2, 0.35 * len(names) + 1)))
    ax.barh(np.arange(len(names)), margins, color=['tab:blue' if v.holds else 'tab:red' for v in verdicts])
    ax.set_yticks(np.arange(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.axvline(0.0, color='black', linewidth=0.8)
    ax.set_xlabel('Margin')
    ax.set_title(title)
    return _save(fig, path)
