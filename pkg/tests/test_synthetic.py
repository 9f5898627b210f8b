"""Tests for planted-partition graph generation."""

import os
import sys

import numpy as np
import pytest

# Add repository root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import ConfigError
from src.synthetic import make_planted_graph


class TestPlantedGraph:
    """Test cases for make_planted_graph."""

    def test_same_seed_same_graph(self):
        assert make_planted_graph([30, 30], seed=4) == make_planted_graph([30, 30], seed=4)

    def test_blocks_and_labels(self):
        graph = make_planted_graph([10, 20, 30], num_features=30, seed=1)
        assert graph.num_nodes == 60
        assert graph.node_names[:3] == ('0', '1', '2')
        assert np.bincount(graph.labels.classes).tolist() == [10, 20, 30]
        assert graph.labels.class_names == ('0', '1', '2')

    def test_edges_follow_blocks(self):
        graph = make_planted_graph([100, 100], p_in=0.2, p_out=0.0, seed=2)
        blocks = graph.labels.classes
        edges = graph.edge_array()
        assert len(edges) > 0
        assert np.all(blocks[edges[:, 0]] == blocks[edges[:, 1]])
        # 2 * C(100, 2) candidate pairs at p=0.2
        assert abs(len(edges) - 0.2 * 9900) < 300

    def test_indicative_dimensions(self):
        graph = make_planted_graph([200, 200], num_features=20, informative_per_block=5,
                                   signal_prob=0.6, noise_density=0.0, seed=3)
        X = graph.attributes.toarray()
        assert set(np.unique(X)) <= {0.0, 1.0}
        first, second = X[:200], X[200:]
        assert np.all(first[:, 5:] == 0)
        assert np.all(second[:, :5] == 0)
        assert np.all(second[:, 10:] == 0)
        assert abs(first[:, :5].mean() - 0.6) < 0.05

    @pytest.mark.parametrize('kwargs', [
        {'block_sizes': []},
        {'block_sizes': [5, 0]},
        {'block_sizes': [5, 5], 'p_in': 1.5},
        {'block_sizes': [5, 5], 'num_features': 8, 'informative_per_block': 5},
    ])
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ConfigError):
            make_planted_graph(**kwargs)
