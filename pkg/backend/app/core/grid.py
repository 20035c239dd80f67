"""
Uniform belief grid on the probability simplex with nearest-point projection
"""
import itertools
from functools import cached_property

import numpy as np
from scipy.special import comb

from .model import BeliefLike, as_probs

# Fractional parts closer than this are treated as tied
_FRACTION_DECIMALS = 12


class BeliefGrid:
    """
    All beliefs whose coordinates are multiples of 1/k, in lexicographic order of their
    integer counts. Projection returns the l1-nearest grid point; among equally near
    points the lexicographically smallest count vector wins.
    """

    def __init__(self, resolution: int, num_states: int):
        if resolution < 1:
            raise ValueError("grid resolution must be >= 1")
        if num_states < 1:
            raise ValueError("num_states must be >= 1")
        self.resolution = int(resolution)
        self.num_states = int(num_states)
        self._radix = self.resolution + 1
        self._powers = self._radix ** np.arange(self.num_states - 1, -1, -1, dtype=np.int64)
        self._codes = self.counts @ self._powers

    @staticmethod
    def expected_size(resolution: int, num_states: int) -> int:
        return int(comb(resolution + num_states - 1, num_states - 1, exact=True))

    @cached_property
    def counts(self) -> np.ndarray:
        """(N, |X|) integer compositions of k, sorted lexicographically"""
        k, x = self.resolution, self.num_states
        rows = []
        # stars and bars: bar positions among k + x - 1 slots
        for bars in itertools.combinations(range(k + x - 1), x - 1):
            edges = (-1,) + bars + (k + x - 1,)
            rows.append([edges[i + 1] - edges[i] - 1 for i in range(x)])
        counts = np.array(rows, dtype=np.int64).reshape(len(rows), x)
        order = np.lexsort(counts.T[::-1])
        return counts[order]

    @cached_property
    def points(self) -> np.ndarray:
        return self.counts / float(self.resolution)

    def __len__(self) -> int:
        return self.counts.shape[0]

    def round_counts(self, beliefs: np.ndarray) -> np.ndarray:
        """Largest-remainder rounding of k * belief rows to integer compositions of k"""
        beliefs = np.atleast_2d(np.asarray(beliefs, dtype=float))
        scaled = beliefs * self.resolution
        base = np.floor(scaled)
        fraction = np.round(scaled - base, _FRACTION_DECIMALS)
        carry = fraction >= 1.0
        base = base + carry
        fraction = np.where(carry, 0.0, fraction)
        missing = self.resolution - base.sum(axis=1).astype(np.int64)

        index = np.broadcast_to(np.arange(self.num_states), beliefs.shape)
        # largest fraction first; ties go to the highest index so earlier counts stay small
        order = np.lexsort((-index, -fraction), axis=-1)
        rank = np.argsort(order, axis=-1)
        return base.astype(np.int64) + (rank < missing[:, None])

    def project_many(self, beliefs: np.ndarray) -> np.ndarray:
        """Grid indices of the nearest points to each row of beliefs"""
        codes = self.round_counts(beliefs) @ self._powers
        return np.searchsorted(self._codes, codes)

    def project(self, belief: BeliefLike) -> int:
        """Index of the grid point nearest to belief"""
        return int(self.project_many(as_probs(belief, self.num_states)[None, :])[0])

    def point(self, index: int) -> np.ndarray:
        return self.points[index]

    def __repr__(self) -> str:
        return f"BeliefGrid(resolution={self.resolution}, num_states={self.num_states}, size={len(self)})"
