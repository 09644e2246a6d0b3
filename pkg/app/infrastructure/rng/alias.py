"""Walker/Vose alias table for finite discrete distributions."""

import numpy as np


class AliasTable:
    """O(1) sampling from a fixed probability vector.

    One uniform per draw: its integer part (after scaling by k) picks a
    column, its fractional part decides between the column and its alias.
    """

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w <= 0):
            raise ValueError("alias table needs a non-empty vector of positive weights")
        k = w.size
        scaled = w * (k / w.sum())
        prob = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        for i in small + large:
            prob[i] = 1.0
            alias[i] = i
        self.size = k
        self.prob = prob
        self.alias = alias

    def lookup(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in [0, 1) to outcome indices."""
        scaled = np.asarray(u) * self.size
        column = np.minimum(scaled.astype(np.intp), self.size - 1)
        frac = scaled - column
        return np.where(frac < self.prob[column], column, self.alias[column])

    def draw(self, gen: np.random.Generator, count: int) -> np.ndarray:
        return self.lookup(gen.random(count))
