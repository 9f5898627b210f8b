"""Alias-method sampling of node-context pairs and negative nodes."""

import logging
from collections import deque

import numpy as np

from .errors import SamplingError

logger = logging.getLogger(__name__)


class AliasTable:
    """Walker alias table: O(n) construction, O(1) draws.

    Slot k is kept with probability prob[k] and otherwise redirected to
    alias[k]. Slots with prob[k] == 1 alias to themselves.
    """

    def __init__(self, prob, alias):
        self.prob = np.asarray(prob, dtype=np.float64)
        self.alias = np.asarray(alias, dtype=np.int64)
        self.size = len(self.prob)

    @classmethod
    def build(cls, weights):
        """Construct a table with the stable two-queue algorithm.

        Small and large slots are consumed in input order, so the table is a
        deterministic function of the weights.

        Args:
            weights: Nonnegative finite weights, at least one positive

        Returns:
            AliasTable: The table

        Raises:
            SamplingError: On empty, negative, non-finite or all-zero weights
        """
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.size == 0:
            raise SamplingError("cannot build an alias table from no weights")
        if not np.all(np.isfinite(weights)):
            raise SamplingError("alias weights must be finite")
        if np.any(weights < 0):
            raise SamplingError("alias weights must be nonnegative")
        total = weights.sum()
        if total <= 0:
            raise SamplingError("at least one alias weight must be positive")

        n = len(weights)
        scaled = (weights * (n / total)).tolist()
        prob = np.ones(n, dtype=np.float64)
        alias = np.arange(n, dtype=np.int64)

        small = deque(k for k, p in enumerate(scaled) if p < 1.0)
        large = deque(k for k, p in enumerate(scaled) if p >= 1.0)
        while small and large:
            s = small.popleft()
            g = large[0]
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            if scaled[g] < 1.0:
                large.popleft()
                small.append(g)
        # Leftovers differ from 1 only by rounding
        return cls(prob, alias)

    def probabilities(self):
        """Reconstruct the normalized distribution encoded by the table."""
        spill = np.bincount(self.alias, weights=1.0 - self.prob, minlength=self.size)
        return (self.prob + spill) / self.size

    def draw(self, rng, size=None):
        """Draw slot indices.

        Args:
            rng: numpy Generator
            size: Number of draws, or None for a single int

        Returns:
            int or np.ndarray: Drawn slots
        """
        slots = rng.integers(0, self.size, size=size)
        keep = rng.random(size=size) < self.prob[slots]
        drawn = np.where(keep, slots, self.alias[slots])
        return int(drawn) if size is None else drawn


def build_alias(weights):
    """Alias table for a list of nonnegative weights."""
    return AliasTable.build(weights)


class NoiseDistribution:
    """Negative-sampling distribution proportional to (context marginal)^alpha.

    Nodes that never occur as a context get zero weight, also when alpha is 0.
    """

    def __init__(self, marginals, alpha=0.75):
        marginals = np.asarray(marginals, dtype=np.float64)
        if np.any(marginals < 0):
            raise SamplingError("context marginals must be nonnegative")
        self.alpha = float(alpha)
        weights = np.zeros_like(marginals)
        present = marginals > 0
        weights[present] = marginals[present] ** self.alpha
        self.weights = weights
        self.table = AliasTable.build(weights)

    @classmethod
    def from_corpus(cls, corpus, alpha=0.75):
        return cls(corpus.context_marginals(), alpha)

    @property
    def num_nodes(self):
        return len(self.weights)

    def probabilities(self):
        return self.weights / self.weights.sum()

    def draw(self, rng, size=None):
        return self.table.draw(rng, size)


def draw_pairs(corpus, rng, size):
    """Draw (center, context) pairs with probability n(i, j) / total_pairs.

    Returns:
        tuple: (centers, contexts) arrays of length size
    """
    flat = corpus.pair_table.draw(rng, size)
    return corpus.centers[flat], corpus.contexts[flat]


def draw_pair(corpus, rng):
    """Draw one (center, context) pair.

    Raises:
        SamplingError: If the corpus is empty
    """
    centers, contexts = draw_pairs(corpus, rng, 1)
    return int(centers[0]), int(contexts[0])


def _check_forbidden(dist, forbidden):
    positive = np.flatnonzero(dist.weights > 0)
    if len(positive) == 1 and np.any(np.asarray(forbidden) == positive[0]):
        raise SamplingError(f"noise distribution only contains the forbidden node {positive[0]}")


def draw_negative_batch(dist, num_negatives, forbidden, rng):
    """Draw num_negatives noise nodes per row, redrawing any equal to the row's forbidden node.

    Args:
        dist: NoiseDistribution
        num_negatives: K
        forbidden: Array of context nodes, one per row
        rng: numpy Generator

    Returns:
        np.ndarray: Shape (len(forbidden), K)

    Raises:
        SamplingError: If the distribution only supports a forbidden node
    """
    if num_negatives < 1:
        raise SamplingError(f"number of negatives must be at least 1, got {num_negatives}")
    forbidden = np.asarray(forbidden, dtype=np.int64)
    _check_forbidden(dist, forbidden)

    negatives = dist.draw(rng, (len(forbidden), num_negatives))
    clash = negatives == forbidden[:, None]
    while clash.any():
        negatives[clash] = dist.draw(rng, int(clash.sum()))
        clash = negatives == forbidden[:, None]
    return negatives


def draw_negatives(dist, num_negatives, forbidden, rng):
    """Draw K independent noise nodes, none equal to forbidden."""
    return draw_negative_batch(dist, num_negatives, [forbidden], rng)[0]


class SampleStream:
    """Chunked stream of (center, context, negatives) training samples.

    All draws come from one Generator, so two streams with the same seed
    produce the same samples.
    """

    def __init__(self, corpus, noise, num_negatives, rng, chunk_size=8192):
        self.corpus = corpus
        self.noise = noise
        self.num_negatives = num_negatives
        self.rng = rng
        self.chunk_size = chunk_size

    def chunks(self, total):
        """Yield (centers, contexts, negatives) arrays covering total samples."""
        remaining = total
        while remaining > 0:
            size = min(self.chunk_size, remaining)
            centers, contexts = draw_pairs(self.corpus, self.rng, size)
            negatives = draw_negative_batch(self.noise, self.num_negatives, contexts, self.rng)
            yield centers, contexts, negatives
            remaining -= size

    def __iter__(self):
        while True:
            for centers, contexts, negatives in self.chunks(self.chunk_size):
                yield from zip(centers.tolist(), contexts.tolist(), negatives)
