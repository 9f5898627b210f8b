"""Evaluation protocols: node classification, node clustering and link prediction."""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb
from sklearn.cluster import KMeans
from sklearn.decomposition import TruncatedSVD
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score, normalized_mutual_info_score, roc_auc_score
from sklearn.metrics.cluster import contingency_matrix
from sklearn.multiclass import OneVsRestClassifier
from sklearn.svm import LinearSVC

from .errors import ConfigError
from .inference import EmbeddingSet

logger = logging.getLogger(__name__)

MAX_SPLIT_ATTEMPTS = 100
MAX_CLUSTER_RESEEDS = 10


class EdgeOperator(str, Enum):
    """Binary operators turning two node embeddings into an edge feature."""

    AVERAGE = 'average'
    HADAMARD = 'hadamard'
    WEIGHTED_L1 = 'weighted-l1'
    WEIGHTED_L2 = 'weighted-l2'


@dataclass
class EvalReport:
    """Outcome of one evaluation protocol.

    Attributes:
        task: 'classify', 'classify-oos', 'cluster' or 'linkpred'
        metrics: Metric name -> value in [0, 1]
        split: Human-readable description of the split/repeats
        seed: Seed the protocol ran with
        details: Extra data (standard deviations, sampled negatives, ...)
    """

    task: str
    metrics: dict
    split: str
    seed: int
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        metrics = {}
        for name, value in self.metrics.items():
            value = float(value)
            if not -1e-9 <= value <= 1.0 + 1e-9:
                raise ConfigError(f"metric {name}={value} outside [0, 1]")
            # Entropy ratios can overshoot 1 by rounding
            metrics[name] = min(1.0, max(0.0, value))
        self.metrics = metrics

    def to_dict(self):
        return asdict(self)

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, default=str)


def edge_features(phi_i, phi_j, op):
    """Component-wise edge feature of two embeddings (or two stacks of embeddings).

    Average (a+b)/2, Hadamard a*b, Weighted-L1 |a-b|, Weighted-L2 (a-b)^2.
    """
    a = np.asarray(phi_i, dtype=np.float64)
    b = np.asarray(phi_j, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"edge endpoints differ in shape: {a.shape} vs {b.shape}")
    op = EdgeOperator(op)
    if op is EdgeOperator.AVERAGE:
        return (a + b) / 2.0
    if op is EdgeOperator.HADAMARD:
        return a * b
    if op is EdgeOperator.WEIGHTED_L1:
        return np.abs(a - b)
    return (a - b) ** 2


def clustering_accuracy(true_labels, cluster_labels):
    """Accuracy under the best one-to-one cluster-to-class assignment (Hungarian)."""
    table = contingency_matrix(true_labels, cluster_labels)
    rows, cols = linear_sum_assignment(-table)
    return table[rows, cols].sum() / table.sum()


def pairwise_f_measure(true_labels, cluster_labels):
    """F1 of same-cluster pairs against same-class pairs."""
    table = contingency_matrix(true_labels, cluster_labels)
    together = comb(table, 2).sum()
    predicted = comb(table.sum(axis=0), 2).sum()
    actual = comb(table.sum(axis=1), 2).sum()
    if predicted == 0 and actual == 0:
        return 1.0
    if together == 0:
        return 0.0
    precision = together / predicted
    recall = together / actual
    return 2 * precision * recall / (precision + recall)


def normalized_mutual_info(true_labels, cluster_labels, average='arithmetic'):
    """NMI normalized by the arithmetic (or geometric) mean of the entropies."""
    return normalized_mutual_info_score(true_labels, cluster_labels, average_method=average)


def auc_score(labels, scores):
    """Rank-based AUC: probability a positive outscores a negative.

    Raises:
        ConfigError: If labels contain a single class
    """
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise ConfigError("AUC needs both positive and negative examples")
    return roc_auc_score(labels, scores)


def make_classifier(kind='logistic', seed=0):
    """L2-regularized one-vs-rest linear classifier.

    Args:
        kind: 'logistic' (liblinear logistic regression) or 'svm' (linear SVM)
        seed: Solver seed
    """
    if kind == 'svm':
        return LinearSVC(C=1.0, random_state=seed, max_iter=10000)
    if kind == 'logistic':
        return OneVsRestClassifier(
            LogisticRegression(C=1.0, solver='liblinear', random_state=seed, max_iter=1000))
    raise ConfigError(f"unknown classifier {kind!r}; expected 'svm' or 'logistic'")


def _labeled_matrix(embeddings, labels):
    ids = list(labels)
    missing = [name for name in ids if name not in embeddings]
    if missing:
        raise ConfigError(f"{len(missing)} labeled nodes have no embedding (e.g. {missing[0]})")
    return ids, embeddings.matrix(ids), np.array([labels[name] for name in ids])


def _split(y, train_ratio, rng):
    """Random train/test split whose training part holds every class."""
    n = len(y)
    num_train = min(n - 1, max(1, int(round(train_ratio * n))))
    classes = np.unique(y)
    for _ in range(MAX_SPLIT_ATTEMPTS):
        order = rng.permutation(n)
        train, test = order[:num_train], order[num_train:]
        if len(np.unique(y[train])) == len(classes):
            return train, test
    raise ConfigError(f"could not draw a training split holding all {len(classes)} classes")


def _run_repeats(run, repeats, seed, threads):
    """Call run(rng) once per repeat, each with its own spawned stream."""
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(repeats)]
    if threads <= 1:
        return [run(rng) for rng in streams]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(run, streams))


def _summarize(runs):
    metrics = {name: float(np.mean([run[name] for run in runs])) for name in runs[0]}
    spread = {f"{name}_std": float(np.std([run[name] for run in runs])) for name in runs[0]}
    return metrics, spread


def _scores(truth, predicted):
    return {
        'micro_f1': f1_score(truth, predicted, average='micro'),
        'macro_f1': f1_score(truth, predicted, average='macro'),
        'accuracy': float(np.mean(predicted == truth)),
    }


def classify(embeddings, labels, train_ratio=0.5, repeats=10, seed=0, classifier='logistic',
             threads=1):
    """Node classification averaged over random splits.

    Args:
        embeddings: EmbeddingSet covering every labeled node
        labels: External id -> class id
        train_ratio: Fraction of labeled nodes used for training
        repeats: Number of random splits
        seed: Split seed
        classifier: 'logistic' or 'svm'
        threads: Splits evaluated concurrently

    Returns:
        EvalReport: Mean Micro-F1, Macro-F1 and accuracy
    """
    if not 0.0 < train_ratio < 1.0:
        raise ConfigError(f"train_ratio must be in (0, 1), got {train_ratio}")
    _, X, y = _labeled_matrix(embeddings, labels)
    if len(np.unique(y)) < 2:
        raise ConfigError("classification needs at least two classes")

    def run(rng):
        train, test = _split(y, train_ratio, rng)
        model = make_classifier(classifier, int(rng.integers(2 ** 31 - 1)))
        model.fit(X[train], y[train])
        return _scores(y[test], model.predict(X[test]))

    runs = _run_repeats(run, repeats, seed, threads)
    metrics, spread = _summarize(runs)
    logger.info("classify: micro-F1 %.4f macro-F1 %.4f over %d splits",
                metrics['micro_f1'], metrics['macro_f1'], repeats)
    return EvalReport('classify', metrics, f"train_ratio={train_ratio} repeats={repeats}",
                      seed, spread)


def classify_out_of_sample(train_embeddings, train_labels, test_embeddings, test_labels,
                           train_ratio=0.5, repeats=10, seed=0, classifier='logistic', threads=1):
    """Fit on a random fraction of in-sample nodes, score on out-of-sample nodes.

    Returns:
        EvalReport: Mean Micro-F1, Macro-F1 and accuracy on the out-of-sample nodes
    """
    if not 0.0 < train_ratio <= 1.0:
        raise ConfigError(f"train_ratio must be in (0, 1], got {train_ratio}")
    _, X, y = _labeled_matrix(train_embeddings, train_labels)
    _, X_test, y_test = _labeled_matrix(test_embeddings, test_labels)
    if len(y_test) == 0:
        raise ConfigError("no labeled out-of-sample nodes")
    if len(np.unique(y)) < 2:
        raise ConfigError("classification needs at least two classes")

    def run(rng):
        train = _split(y, train_ratio, rng)[0] if train_ratio < 1.0 else np.arange(len(y))
        model = make_classifier(classifier, int(rng.integers(2 ** 31 - 1)))
        model.fit(X[train], y[train])
        return _scores(y_test, model.predict(X_test))

    runs = _run_repeats(run, repeats, seed, threads)
    metrics, spread = _summarize(runs)
    return EvalReport('classify-oos', metrics,
                      f"in-sample train_ratio={train_ratio} repeats={repeats}", seed, spread)


def cluster(embeddings, labels, k=None, repeats=20, seed=0, nmi_average='arithmetic', threads=1):
    """k-means (k-means++ init) clustering scored against class labels.

    Runs that leave a cluster empty are reseeded.

    Args:
        embeddings: EmbeddingSet covering every labeled node
        labels: External id -> class id
        k: Number of clusters (defaults to the number of classes)
        repeats: Number of k-means runs averaged
        seed: Base seed
        nmi_average: 'arithmetic' or 'geometric' NMI normalization
        threads: Runs executed concurrently

    Returns:
        EvalReport: Mean Accuracy, F-value and NMI
    """
    _, X, y = _labeled_matrix(embeddings, labels)
    k = k if k is not None else len(np.unique(y))
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    if k > len(y):
        raise ConfigError(f"k={k} exceeds the {len(y)} labeled nodes")
    if nmi_average not in ('arithmetic', 'geometric'):
        raise ConfigError(f"nmi_average must be 'arithmetic' or 'geometric', got {nmi_average!r}")

    def run(rng):
        for _ in range(MAX_CLUSTER_RESEEDS):
            assigned = KMeans(n_clusters=k, init='k-means++', n_init=1,
                              random_state=int(rng.integers(2 ** 31 - 1))).fit_predict(X)
            if len(np.unique(assigned)) == k:
                break
            logger.debug("k-means left a cluster empty; reseeding")
        else:
            logger.warning("k-means still left %d of %d clusters empty after %d reseeds; "
                           "scoring the last run", k - len(np.unique(assigned)), k,
                           MAX_CLUSTER_RESEEDS)
        return {
            'accuracy': clustering_accuracy(y, assigned),
            'f_value': pairwise_f_measure(y, assigned),
            'nmi': normalized_mutual_info(y, assigned, nmi_average),
        }

    runs = _run_repeats(run, repeats, seed, threads)
    metrics, spread = _summarize(runs)
    logger.info("cluster: accuracy %.4f NMI %.4f over %d runs",
                metrics['accuracy'], metrics['nmi'], repeats)
    return EvalReport('cluster', metrics, f"k={k} repeats={repeats}", seed, spread)


def _edge_key(u, v):
    return (u, v) if u <= v else (v, u)


def sample_negative_pairs(positives, candidates, known_edges, rng, ratio=1):
    """For each positive (u, v), draw `ratio` pairs (u, w) with no known edge u-w.

    Args:
        positives: List of (u, v) external id pairs
        candidates: External ids w may be drawn from
        known_edges: Set of _edge_key pairs to avoid
        rng: numpy Generator
        ratio: Negatives per positive

    Returns:
        list: Negative (u, w) pairs

    Raises:
        ConfigError: If some u is connected to every candidate
    """
    candidates = list(candidates)
    negatives = []
    for u, _ in positives:
        for _ in range(ratio):
            for _ in range(1000):
                w = candidates[int(rng.integers(len(candidates)))]
                if w != u and _edge_key(u, w) not in known_edges:
                    negatives.append((u, w))
                    break
            else:
                raise ConfigError(f"no non-neighbor found for node {u}")
    return negatives


def attribute_baseline(ids, attributes, dim=None, seed=0):
    """Raw attribute vectors as embeddings, optionally reduced by truncated SVD."""
    if dim is not None and dim < attributes.shape[1]:
        vectors = TruncatedSVD(n_components=dim, random_state=seed).fit_transform(attributes)
    else:
        vectors = attributes.toarray() if hasattr(attributes, 'toarray') else np.asarray(attributes)
    return EmbeddingSet(ids, vectors)


def link_predict(train_graph, test_edges, embeddings, op=EdgeOperator.WEIGHTED_L2, neg_ratio=1,
                 seed=0, classifier='logistic', negatives=None):
    """Link prediction AUC from edge features.

    A classifier is trained on the in-sample edges of train_graph plus one
    (or neg_ratio) sampled non-edge per edge, then scores test_edges plus
    sampled non-edges among embedded nodes.

    Args:
        train_graph: In-sample AttributedGraph
        test_edges: (u, v) external id pairs disjoint from train_graph's edges
        embeddings: EmbeddingSet covering every endpoint
        op: EdgeOperator
        neg_ratio: Negatives per positive
        seed: Negative sampling and solver seed
        classifier: 'logistic' or 'svm'
        negatives: Optional {'train': [...], 'test': [...]} from an earlier report to reuse

    Returns:
        EvalReport: AUC on the test edges; details['negatives'] holds the sampled non-edges
    """
    op = EdgeOperator(op)
    if neg_ratio < 1:
        raise ConfigError("neg_ratio must be at least 1")

    names = train_graph.node_names
    train_pos = [(names[u], names[v]) for u, v in train_graph.edge_array()]
    train_known = {_edge_key(u, v) for u, v in train_pos}
    test_pos = [(str(u), str(v)) for u, v in test_edges]
    overlap = [edge for edge in test_pos if _edge_key(*edge) in train_known]
    if overlap:
        raise ConfigError(f"{len(overlap)} test edges also appear in the training graph")
    if not train_pos or not test_pos:
        raise ConfigError("link prediction needs both training and test edges")

    rng = np.random.default_rng(seed)
    if negatives is None:
        all_known = train_known | {_edge_key(u, v) for u, v in test_pos}
        negatives = {
            'train': sample_negative_pairs(train_pos, names, train_known, rng, neg_ratio),
            'test': sample_negative_pairs(test_pos, embeddings.ids, all_known, rng, neg_ratio),
        }
    train_neg = [tuple(pair) for pair in negatives['train']]
    test_neg = [tuple(pair) for pair in negatives['test']]

    def features(pairs):
        left = embeddings.matrix([u for u, _ in pairs])
        right = embeddings.matrix([v for _, v in pairs])
        return edge_features(left, right, op)

    X_train = features(train_pos + train_neg)
    y_train = np.concatenate([np.ones(len(train_pos)), np.zeros(len(train_neg))])
    X_test = features(test_pos + test_neg)
    y_test = np.concatenate([np.ones(len(test_pos)), np.zeros(len(test_neg))])

    model = make_classifier(classifier, seed).fit(X_train, y_train)
    auc = auc_score(y_test, model.decision_function(X_test))
    details = {
        'operator': op.value,
        'num_train_pairs': len(y_train),
        'num_test_pairs': len(y_test),
        'negatives': {'train': train_neg, 'test': test_neg},
    }
    return EvalReport('linkpred', {'auc': auc}, f"operator={op.value} neg_ratio={neg_ratio}",
                      seed, details)


def format_reports(reports):
    """Aligned text table, metrics in percent."""
    metric_names = []
    for report in reports:
        for name in report.metrics:
            if name not in metric_names:
                metric_names.append(name)

    split_width = max([len('Split')] + [len(r.split) for r in reports])
    lines = [f"{'Task':<13} {'Split':<{split_width}} " + ' '.join(f"{n:>10}" for n in metric_names)]
    lines.append('-' * len(lines[0]))
    for report in reports:
        cells = []
        for name in metric_names:
            value = report.metrics.get(name)
            cells.append(f"{100 * value:>10.2f}" if value is not None else f"{'-':>10}")
        lines.append(f"{report.task:<13} {report.split:<{split_width}} " + ' '.join(cells))
    return "\n".join(lines)


def write_reports_csv(reports, path):
    """One row per (report, metric) for plotting."""
    with open(path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=['task', 'split', 'seed', 'metric', 'value'])
        writer.writeheader()
        for report in reports:
            for name, value in report.metrics.items():
                writer.writerow({'task': report.task, 'split': report.split, 'seed': report.seed,
                                 'metric': name, 'value': value})
