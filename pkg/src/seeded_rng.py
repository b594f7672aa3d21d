"""
Seeded, counter-based random streams for reproducible simulation and search.

Every stream is a numpy Generator over Philox keyed by a SeedSequence, so a given
seed reproduces the same draws on every run. Per-row streams are spawned children
of the root sequence: row r always gets child r regardless of how many rows are drawn.
"""

from typing import List, Optional

import numpy as np


class SeededRNG:
    """Philox-backed generator with deterministic child streams."""

    def __init__(self, seed: Optional[int] = 0):
        self._seed = seed
        self._sequence = np.random.SeedSequence(seed)
        self._rng = np.random.Generator(np.random.Philox(self._sequence))

    @property
    def seed(self) -> Optional[int]:
        return self._seed

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._rng.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        return self._rng.integers(low, high, size)

    def row_streams(self, nrows: int) -> List[np.random.Generator]:
        """One independent Philox stream per lattice row (children 0..nrows-1)."""
        children = np.random.SeedSequence(self._seed).spawn(nrows)
        return [np.random.Generator(np.random.Philox(child)) for child in children]

    def standard_normal_rows(self, nrows: int, ncols: int) -> np.ndarray:
        """Standard normal matrix drawn row by row from the per-row streams."""
        out = np.empty((nrows, ncols))
        for r, stream in enumerate(self.row_streams(nrows)):
            out[r] = stream.standard_normal(ncols)
        return out
