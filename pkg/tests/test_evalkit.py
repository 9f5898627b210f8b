"""Tests for classification, clustering and link prediction protocols."""

import csv
import json
import logging
import os
import sys

import numpy as np
import pytest
import scipy.sparse as sp

# Add repository root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import ConfigError
from src.evalkit import (EdgeOperator, EvalReport, attribute_baseline, auc_score, classify,
                         classify_out_of_sample, cluster, clustering_accuracy, edge_features,
                         format_reports, link_predict, normalized_mutual_info, pairwise_f_measure,
                         write_reports_csv)
from src.graph import AttributedGraph, LabelSet, split_out_of_sample
from src.inference import EmbeddingSet


class TestEdgeFeatures:
    """Test cases for the four edge operators."""

    def test_definitions(self):
        a, b = [1.0, 2.0], [3.0, 4.0]
        assert edge_features(a, b, EdgeOperator.AVERAGE).tolist() == [2.0, 3.0]
        assert edge_features(a, b, EdgeOperator.HADAMARD).tolist() == [3.0, 8.0]
        assert edge_features(a, b, EdgeOperator.WEIGHTED_L1).tolist() == [2.0, 2.0]
        assert edge_features(a, b, EdgeOperator.WEIGHTED_L2).tolist() == [4.0, 4.0]

    def test_identical_endpoints(self):
        phi = np.array([0.3, -1.2, 5.0])
        assert np.all(edge_features(phi, phi, 'weighted-l1') == 0)
        assert np.all(edge_features(phi, phi, 'weighted-l2') == 0)

    @pytest.mark.parametrize('op', list(EdgeOperator))
    def test_symmetric(self, op):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(2, 7, 4))
        assert np.allclose(edge_features(a, b, op), edge_features(b, a, op))

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            edge_features([1.0, 2.0], [1.0], EdgeOperator.AVERAGE)


class TestClusteringMetrics:
    """Test cases for Accuracy, F-value and NMI."""

    def test_relabeled_partition_is_perfect(self):
        truth = [0, 0, 1, 1, 2, 2]
        clusters = [5, 5, 3, 3, 9, 9]
        assert clustering_accuracy(truth, clusters) == 1.0
        assert pairwise_f_measure(truth, clusters) == 1.0
        assert normalized_mutual_info(truth, clusters) == pytest.approx(1.0)

    def test_single_cluster(self):
        truth = np.repeat([0, 1, 2, 3], 5)
        clusters = np.zeros(20, dtype=int)
        assert clustering_accuracy(truth, clusters) == pytest.approx(0.25)
        assert normalized_mutual_info(truth, clusters) == pytest.approx(0.0)

    def test_pairwise_f_by_hand(self):
        # Same-cluster pairs: 3, same-class pairs: 2, both: 1
        assert pairwise_f_measure([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.4)

    def test_nmi_symmetric_and_permutation_invariant(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 4, 200)
        b = rng.integers(0, 3, 200)
        assert normalized_mutual_info(a, b) == pytest.approx(normalized_mutual_info(b, a))
        relabeled = np.array([2, 0, 1])[b]
        assert normalized_mutual_info(a, b) == pytest.approx(normalized_mutual_info(a, relabeled))
        assert normalized_mutual_info(a, b, 'geometric') >= 0.0

    def test_hungarian_accuracy_lower_bound(self):
        rng = np.random.default_rng(2)
        truth = np.repeat(np.arange(4), 25)
        for _ in range(20):
            assert clustering_accuracy(truth, rng.integers(0, 4, 100)) >= 0.25


class TestAUC:
    """Test cases for auc_score."""

    def test_perfect_ranking(self):
        assert auc_score([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1]) == 1.0

    def test_random_scores(self):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 2, 100_000)
        assert abs(auc_score(labels, rng.random(100_000)) - 0.5) < 0.02

    def test_monotone_invariance(self):
        rng = np.random.default_rng(4)
        labels = rng.integers(0, 2, 500)
        scores = rng.normal(size=500) + labels
        assert auc_score(labels, scores) == auc_score(labels, np.exp(3 * scores) + 7)

    def test_single_class(self):
        with pytest.raises(ConfigError):
            auc_score([1, 1, 1], [0.1, 0.2, 0.3])


class TestClassify:
    """Test cases for node classification."""

    def setup_method(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(5)
        self.ids = [f"v{i}" for i in range(40)]
        classes = np.repeat([0, 1], 20)
        vectors = rng.normal(scale=0.1, size=(40, 2)) + np.where(classes[:, None] == 0, -5.0, 5.0)
        self.embeddings = EmbeddingSet(self.ids, vectors)
        self.labels = dict(zip(self.ids, classes.tolist()))

    def test_separable_classes(self):
        report = classify(self.embeddings, self.labels, train_ratio=0.5, repeats=5, seed=1)
        assert report.task == 'classify'
        assert report.metrics['micro_f1'] == 1.0
        assert report.metrics['macro_f1'] == 1.0

    def test_svm_classifier(self):
        report = classify(self.embeddings, self.labels, repeats=3, classifier='svm')
        assert report.metrics['accuracy'] == 1.0

    def test_random_labels_near_chance(self):
        rng = np.random.default_rng(6)
        ids = [str(i) for i in range(400)]
        embeddings = EmbeddingSet(ids, rng.normal(size=(400, 8)))
        labels = dict(zip(ids, rng.permutation(np.repeat(np.arange(4), 100)).tolist()))
        report = classify(embeddings, labels, repeats=10, seed=2)
        assert abs(report.metrics['micro_f1'] - 0.25) < 0.05

    def test_micro_f1_equals_accuracy(self):
        rng = np.random.default_rng(7)
        ids = [str(i) for i in range(120)]
        embeddings = EmbeddingSet(ids, rng.normal(size=(120, 3)))
        labels = dict(zip(ids, (np.arange(120) % 3).tolist()))
        report = classify(embeddings, labels, repeats=4, seed=3)
        assert report.metrics['micro_f1'] == pytest.approx(report.metrics['accuracy'])

    def test_thread_count_does_not_change_result(self):
        sequential = classify(self.embeddings, self.labels, repeats=6, seed=9)
        threaded = classify(self.embeddings, self.labels, repeats=6, seed=9, threads=3)
        assert sequential.metrics == threaded.metrics

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            classify(self.embeddings, self.labels, train_ratio=1.0)
        with pytest.raises(ConfigError):
            classify(self.embeddings, {**self.labels, 'ghost': 0})
        with pytest.raises(ConfigError):
            classify(self.embeddings, {name: 0 for name in self.ids})

    def test_out_of_sample(self):
        train = self.embeddings.subset(self.ids[:10] + self.ids[20:30])
        test = self.embeddings.subset(self.ids[10:20] + self.ids[30:])
        train_labels = {name: self.labels[name] for name in train.ids}
        test_labels = {name: self.labels[name] for name in test.ids}
        report = classify_out_of_sample(train, train_labels, test, test_labels, repeats=3)
        assert report.task == 'classify-oos'
        assert report.metrics['accuracy'] == 1.0


class TestCluster:
    """Test cases for k-means clustering evaluation."""

    def test_separated_gaussians(self):
        rng = np.random.default_rng(8)
        ids = [str(i) for i in range(200)]
        vectors = rng.normal(size=(200, 2))
        vectors[100:, 0] += 10.0
        labels = dict(zip(ids, ['left'] * 100 + ['right'] * 100))
        report = cluster(EmbeddingSet(ids, vectors), labels, repeats=5, seed=1)
        assert report.metrics['accuracy'] >= 0.99
        assert report.metrics['nmi'] > 0.9
        assert report.metrics['f_value'] > 0.95

    def test_empty_cluster_after_reseeds_warns(self, caplog):
        ids = [str(i) for i in range(6)]
        embeddings = EmbeddingSet(ids, np.ones((6, 2)))
        labels = dict(zip(ids, [0, 0, 0, 1, 1, 1]))
        with caplog.at_level(logging.WARNING, logger='src.evalkit'):
            report = cluster(embeddings, labels, repeats=1, seed=0)
        assert 'clusters empty after 10 reseeds' in caplog.text
        assert report.metrics['nmi'] == 0.0

    def test_invalid_k(self):
        embeddings = EmbeddingSet(['a', 'b'], [[0.0], [1.0]])
        with pytest.raises(ConfigError):
            cluster(embeddings, {'a': 0, 'b': 1}, k=1)
        with pytest.raises(ConfigError):
            cluster(embeddings, {'a': 0, 'b': 1}, k=3)


class TestLinkPredict:
    """Test cases for link prediction."""

    def setup_method(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(9)
        n, blocks = 60, 4
        block = np.arange(n) % blocks
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)
                 if block[u] == block[v] and rng.random() < 0.4]
        names = [str(i) for i in range(n)]
        graph = AttributedGraph.from_edges(names, edges, sp.identity(n, format='csr'),
                                           LabelSet(block, ('0', '1', '2', '3')))
        self.split = split_out_of_sample(graph, holdout_ratio=0.2, seed=3)
        vectors = np.eye(blocks)[block] + rng.normal(scale=0.1, size=(n, blocks))
        self.embeddings = EmbeddingSet(names, vectors)

    def test_block_structure_is_predictable(self):
        report = link_predict(self.split.in_sample, self.split.test_edges, self.embeddings,
                              EdgeOperator.WEIGHTED_L2, seed=1)
        assert report.task == 'linkpred'
        assert report.metrics['auc'] > 0.75
        negatives = report.details['negatives']
        assert len(negatives['test']) == len(self.split.test_edges)
        assert len(negatives['train']) == self.split.in_sample.num_edges

    def test_negatives_avoid_known_edges(self):
        report = link_predict(self.split.in_sample, self.split.test_edges, self.embeddings,
                              neg_ratio=2, seed=4)
        known = {frozenset(edge) for edge in self.split.test_edges}
        names = self.split.in_sample.node_names
        known |= {frozenset((names[u], names[v])) for u, v in self.split.in_sample.edge_array()}
        for u, w in report.details['negatives']['test']:
            assert u != w
            assert frozenset((u, w)) not in known
        assert len(report.details['negatives']['test']) == 2 * len(self.split.test_edges)

    def test_reused_negatives_reproduce_auc(self):
        first = link_predict(self.split.in_sample, self.split.test_edges, self.embeddings, seed=5)
        stored = json.loads(first.to_json())['details']['negatives']
        second = link_predict(self.split.in_sample, self.split.test_edges, self.embeddings,
                              seed=5, negatives=stored)
        assert second.metrics['auc'] == first.metrics['auc']

    def test_overlapping_test_edges(self):
        names = self.split.in_sample.node_names
        u, v = self.split.in_sample.edge_array()[0]
        with pytest.raises(ConfigError):
            link_predict(self.split.in_sample, [(names[u], names[v])], self.embeddings)


class TestReports:
    """Test cases for reports and baselines."""

    def test_metric_range_checked(self):
        with pytest.raises(ConfigError):
            EvalReport('classify', {'micro_f1': 1.5}, 'split', 0)

    def test_json_table_and_csv(self, tmp_path):
        reports = [EvalReport('classify', {'micro_f1': 0.7021, 'macro_f1': 0.65}, 'ratio=0.5', 1),
                   EvalReport('cluster', {'nmi': 0.5}, 'k=6', 2)]
        assert json.loads(reports[0].to_json())['metrics']['micro_f1'] == 0.7021

        table = format_reports(reports)
        assert '70.21' in table
        assert '50.00' in table

        path = tmp_path / 'reports.csv'
        write_reports_csv(reports, path)
        with open(path, newline='') as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 3
        assert rows[2]['metric'] == 'nmi'

    def test_attribute_baseline(self):
        attributes = sp.random(30, 12, density=0.3, random_state=0, format='csr')
        ids = [str(i) for i in range(30)]
        raw = attribute_baseline(ids, attributes)
        assert raw.dim == 12
        assert np.allclose(raw.vectors, attributes.toarray())
        reduced = attribute_baseline(ids, attributes, dim=4, seed=1)
        assert reduced.dim == 4
