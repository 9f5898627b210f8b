"""Tests for Visualizer functionality."""

import csv
import os
import sys
from unittest.mock import patch

import matplotlib
import matplotlib.pyplot as plt
import numpy as np
import pytest
import scipy.sparse as sp

# Use non-interactive backend for testing
matplotlib.use('Agg')

# Add repository root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.graph import AttributedGraph
from src.visualizer import Visualizer


class TestVisualizer:
    """Test cases for Visualizer class."""

    def setup_method(self):
        """Set up test fixtures."""
        self.visualizer = Visualizer()
        self.history = [(100, 0.025, 4.1), (200, 0.02, 3.2), (300, 0.015, 2.9)]
        # Path 0-1-2 plus an isolated node 3
        attributes = sp.csr_matrix(np.array([[1, 0], [1, 1], [0, 1], [0, 0]], dtype=float))
        self.graph = AttributedGraph.from_edges(['a', 'b', 'c', 'd'], [(0, 1), (1, 2)], attributes)

    def teardown_method(self):
        """Clean up after tests."""
        plt.close('all')

    def test_degree_distribution_saved(self, tmp_path):
        path = tmp_path / 'degree.png'
        assert self.visualizer.plot_degree_distribution(self.graph, path) == path
        assert path.stat().st_size > 0

    def test_attribute_distribution_saved(self, tmp_path):
        path = tmp_path / 'attrs.png'
        self.visualizer.plot_attribute_distribution(self.graph, path)
        assert path.exists()

    def test_empty_distribution(self, tmp_path):
        path = tmp_path / 'empty.png'
        assert self.visualizer.plot_distribution({0: 5}, 'Degrees', 'Degree', path) is None
        assert not path.exists()

    @patch('matplotlib.pyplot.show')
    def test_loss_curve_shown_without_path(self, mock_show):
        self.visualizer.plot_loss_curve(self.history)
        mock_show.assert_called_once()

    @patch('matplotlib.pyplot.show')
    def test_empty_history(self, mock_show):
        assert self.visualizer.plot_loss_curve([]) is None
        mock_show.assert_not_called()

    def test_sensitivity_saved(self, tmp_path):
        path = tmp_path / 'sensitivity.png'
        self.visualizer.plot_sensitivity('dim', [16, 32, 64],
                                         {'micro_f1': [0.6, 0.7, 0.72]}, path)
        assert path.exists()
        assert self.visualizer.plot_sensitivity('dim', [], {}, tmp_path / 'none.png') is None

    def test_export_loss_history(self, tmp_path):
        path = tmp_path / 'loss.csv'
        self.visualizer.export_loss_history(self.history, path)
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['iteration', 'learning_rate', 'loss']
        assert len(rows) == 4
        assert float(rows[2][2]) == 3.2

    def test_summary_stats(self):
        stats = self.visualizer.get_summary_stats(self.history)
        assert stats['windows'] == 3
        assert stats['iterations'] == 300
        assert stats['first_loss'] == 4.1
        assert stats['final_loss'] == 2.9
        assert stats['min_loss'] == 2.9
        assert stats['mean_loss'] == pytest.approx((4.1 + 3.2 + 2.9) / 3)
        assert self.visualizer.get_summary_stats([]) == {}
