"""Tests for alias sampling of pairs and negatives."""

import os
import sys

import numpy as np
import pytest
from scipy.stats import chi2

# Add repository root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import SamplingError
from src.sampler import (AliasTable, NoiseDistribution, SampleStream, build_alias, draw_negatives,
                         draw_pair, draw_pairs)
from src.walker import ContextCorpus


class TestAliasTable:
    """Test cases for alias table construction and draws."""

    def setup_method(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(42)

    def test_two_equal_weights(self):
        table = build_alias([1, 1])
        assert np.allclose(table.probabilities(), [0.5, 0.5], atol=1e-12)

    def test_single_weight_always_drawn(self):
        table = build_alias([5])
        assert np.all(table.draw(self.rng, 1000) == 0)
        assert table.draw(self.rng) == 0

    def test_reconstruction_exact(self):
        """Alias reconstruction matches the normalized weights to 1e-12."""
        for size in (3, 17, 1000, 100_000):
            weights = self.rng.random(size) * self.rng.integers(0, 2, size)
            weights[0] += 1.0
            table = build_alias(weights)
            assert np.max(np.abs(table.probabilities() - weights / weights.sum())) < 1e-12

    def test_empirical_frequencies(self):
        """[1, 1, 2] -> [0.25, 0.25, 0.5] within 1% over 10^6 draws."""
        table = build_alias([1, 1, 2])
        counts = np.bincount(table.draw(self.rng, 1_000_000), minlength=3) / 1_000_000
        assert np.allclose(counts, [0.25, 0.25, 0.5], atol=0.01)

    def test_deterministic_construction(self):
        weights = [3.0, 0.5, 0.5, 2.0, 1.0]
        first, second = build_alias(weights), build_alias(weights)
        assert np.array_equal(first.prob, second.prob)
        assert np.array_equal(first.alias, second.alias)

    def test_zero_weight_never_drawn(self):
        table = build_alias([0.0, 1.0, 0.0, 3.0])
        drawn = table.draw(self.rng, 100_000)
        assert not np.isin(drawn, [0, 2]).any()

    @pytest.mark.parametrize('weights', [[], [0, 0], [1, -1], [1, np.inf], [np.nan]])
    def test_invalid_weights(self, weights):
        with pytest.raises(SamplingError):
            AliasTable.build(weights)


class TestDrawPair:
    """Test cases for drawing (center, context) pairs."""

    def setup_method(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(7)

    def test_pair_frequencies(self):
        """{(a,b):3, (b,a):1} -> P(a,b) = 0.75."""
        corpus = ContextCorpus.from_pairs({(0, 1): 3, (1, 0): 1}, 2)
        centers, contexts = draw_pairs(corpus, self.rng, 1_000_000)
        assert abs(np.mean((centers == 0) & (contexts == 1)) - 0.75) < 0.01
        assert np.all(centers != contexts)

    def test_single_pair(self):
        corpus = ContextCorpus.from_pairs({(2, 0): 9}, 3)
        for _ in range(10):
            assert draw_pair(corpus, self.rng) == (2, 0)

    def test_uniform_corpus_chi_square(self):
        pairs = {(i, j): 1 for i in range(10) for j in range(10)}
        corpus = ContextCorpus.from_pairs(pairs, 10)
        centers, contexts = draw_pairs(corpus, self.rng, 1_000_000)
        observed = np.bincount(centers * 10 + contexts, minlength=100)
        expected = 1_000_000 / 100
        statistic = np.sum((observed - expected) ** 2 / expected)
        assert statistic < chi2.ppf(0.999, 99)

    def test_center_marginals(self):
        corpus = ContextCorpus.from_pairs({(0, 1): 5, (0, 2): 1, (1, 0): 2, (2, 2): 2}, 3)
        centers, _ = draw_pairs(corpus, self.rng, 1_000_000)
        empirical = np.bincount(centers, minlength=3) / 1_000_000
        assert np.allclose(empirical, corpus.center_marginals() / corpus.total_pairs, atol=0.01)

    def test_empty_corpus(self):
        corpus = ContextCorpus.from_pairs({}, 4)
        with pytest.raises(SamplingError):
            draw_pair(corpus, self.rng)


class TestNegatives:
    """Test cases for the noise distribution and negative draws."""

    def setup_method(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(3)

    def test_forbidden_node_rejected(self):
        noise = NoiseDistribution([2.0, 5.0])
        negatives = draw_negatives(noise, 50, 1, self.rng)
        assert len(negatives) == 50
        assert np.all(negatives == 0)

    def test_alpha_zero_uniform_over_support(self):
        noise = NoiseDistribution([4, 0, 1, 9], alpha=0.0)
        drawn = noise.draw(self.rng, 1_000_000)
        frequencies = np.bincount(drawn, minlength=4) / 1_000_000
        assert frequencies[1] == 0.0
        assert np.allclose(frequencies[[0, 2, 3]], 1 / 3, atol=0.01)

    def test_three_quarter_power(self):
        noise = NoiseDistribution([4, 1], alpha=0.75)
        assert np.allclose(noise.probabilities(), [0.7388, 0.2612], atol=1e-4)
        frequencies = np.bincount(noise.draw(self.rng, 1_000_000), minlength=2) / 1_000_000
        assert np.allclose(frequencies, [0.7388, 0.2612], atol=0.01)

    def test_degenerate_to_forbidden(self):
        noise = NoiseDistribution([0, 3, 0])
        with pytest.raises(SamplingError):
            draw_negatives(noise, 5, 1, self.rng)

    def test_invalid_count(self):
        with pytest.raises(SamplingError):
            draw_negatives(NoiseDistribution([1, 1]), 0, 0, self.rng)

    def test_from_corpus_uses_context_marginals(self):
        corpus = ContextCorpus.from_pairs({(0, 1): 3, (2, 1): 1, (1, 0): 4}, 3)
        noise = NoiseDistribution.from_corpus(corpus, alpha=1.0)
        assert np.allclose(noise.probabilities(), [0.5, 0.5, 0.0])


class TestSampleStream:
    """Test cases for chunked sample streams."""

    def test_same_seed_same_samples(self):
        corpus = ContextCorpus.from_pairs({(0, 1): 3, (1, 2): 2, (2, 0): 1, (1, 0): 3}, 3)
        noise = NoiseDistribution.from_corpus(corpus)
        first = SampleStream(corpus, noise, 2, np.random.default_rng(5), chunk_size=7)
        second = SampleStream(corpus, noise, 2, np.random.default_rng(5), chunk_size=7)
        a = [np.concatenate(parts) for parts in zip(*first.chunks(30))]
        b = [np.concatenate(parts) for parts in zip(*second.chunks(30))]
        for left, right in zip(a, b):
            assert np.array_equal(left, right)
        assert len(a[0]) == 30
        assert a[2].shape == (30, 2)
        assert np.all(a[2] != a[1][:, None])
