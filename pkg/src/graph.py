"""Attributed graph model - undirected adjacency, sparse node attributes and labels."""

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from sklearn.preprocessing import normalize

from .errors import ConfigError, IngestError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IngestOptions:
    """Options applied while reading graph files.

    Attributes:
        normalize: L2-normalize every attribute row (zero rows stay zero)
        num_features: Expected attribute dimension m; overrides a missing header
        keep_dimension_ratio: Fraction of attribute dimensions kept, the rest zeroed
        seed: Seed for choosing the kept dimensions
    """

    normalize: bool = False
    num_features: Optional[int] = None
    keep_dimension_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.keep_dimension_ratio <= 1.0:
            raise ConfigError(
                f"keep_dimension_ratio must be in (0, 1], got {self.keep_dimension_ratio}")
        if self.num_features is not None and self.num_features < 1:
            raise ConfigError(f"num_features must be positive, got {self.num_features}")


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Per-node class ids, -1 marking unlabeled nodes.

    Class ids are contiguous from 0; class_names[c] is the token read for class c.
    """

    classes: np.ndarray
    class_names: tuple

    def __post_init__(self):
        classes = np.asarray(self.classes, dtype=np.int64)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if classes.size and (classes.min() < -1 or classes.max() >= len(self.class_names)):
            raise ConfigError("class ids must lie in [0, num_classes)")

    @property
    def num_classes(self):
        return len(self.class_names)

    def labeled_nodes(self):
        """Dense indices of nodes carrying a label."""
        return np.flatnonzero(self.classes >= 0)

    def subset(self, node_indices):
        return LabelSet(self.classes[np.asarray(node_indices, dtype=np.int64)], self.class_names)


class AttributedGraph:
    """Immutable undirected graph whose nodes carry sparse attribute vectors.

    Adjacency is held in CSR form: the neighbors of node i are
    indices[indptr[i]:indptr[i + 1]], sorted strictly ascending.
    Attributes form a |V| x m CSR matrix, one row per node.
    """

    def __init__(self, node_names, indptr, indices, attributes, labels=None):
        """Initialize from prebuilt CSR arrays.

        Args:
            node_names: External ids, position = dense index
            indptr: CSR row pointer of the symmetric adjacency
            indices: CSR column indices of the symmetric adjacency
            attributes: Sparse matrix of shape (|V|, m)
            labels: Optional LabelSet
        """
        self.node_names = tuple(str(name) for name in node_names)
        self._index = {name: i for i, name in enumerate(self.node_names)}
        if len(self._index) != len(self.node_names):
            raise ConfigError("node names must be unique")

        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        if len(self.indptr) != len(self.node_names) + 1:
            raise ConfigError("adjacency does not match the number of nodes")

        attributes = sp.csr_matrix(attributes, dtype=np.float64)
        attributes.sum_duplicates()
        attributes.sort_indices()
        if attributes.shape[0] != len(self.node_names):
            raise ConfigError(
                f"attribute matrix has {attributes.shape[0]} rows for {len(self.node_names)} nodes")
        if not np.all(np.isfinite(attributes.data)):
            raise ConfigError("attribute values must be finite")
        self.attributes = attributes

        if labels is not None and len(labels.classes) != len(self.node_names):
            raise ConfigError("label vector does not match the number of nodes")
        self.labels = labels

    @classmethod
    def from_edges(cls, node_names, edges, attributes, labels=None):
        """Build a graph from dense-index edge pairs.

        Direction is ignored, duplicates are merged and self-loops dropped.

        Args:
            node_names: External ids
            edges: Array-like of shape (E, 2) with dense node indices
            attributes: Sparse matrix of shape (|V|, m)
            labels: Optional LabelSet

        Returns:
            AttributedGraph: The symmetrized graph
        """
        num_nodes = len(node_names)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= num_nodes):
            raise ConfigError("edge endpoint outside the node range")

        loops = edges[:, 0] == edges[:, 1]
        if loops.any():
            logger.debug("Dropping %d self-loops", int(loops.sum()))
        edges = edges[~loops]

        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        adjacency = sp.csr_matrix(
            (np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(num_nodes, num_nodes))
        adjacency.sum_duplicates()
        adjacency.sort_indices()
        return cls(node_names, adjacency.indptr, adjacency.indices, attributes, labels)

    @property
    def num_nodes(self):
        return len(self.node_names)

    @property
    def num_edges(self):
        return len(self.indices) // 2

    @property
    def num_features(self):
        return self.attributes.shape[1]

    @property
    def nnz(self):
        return self.attributes.nnz

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def neighbors(self, node):
        """Sorted neighbor indices of a dense node index."""
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def has_edge(self, u, v):
        neighbors = self.neighbors(u)
        pos = np.searchsorted(neighbors, v)
        return bool(pos < len(neighbors) and neighbors[pos] == v)

    def index_of(self, name):
        """Dense index of an external id.

        Raises:
            ConfigError: If the id is unknown
        """
        try:
            return self._index[str(name)]
        except KeyError:
            raise ConfigError(f"unknown node id: {name}") from None

    def __contains__(self, name):
        return str(name) in self._index

    def edge_array(self):
        """Every undirected edge once, as an (E, 2) array with u < v."""
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        upper = rows < self.indices
        return np.column_stack([rows[upper], self.indices[upper]])

    def adjacency_matrix(self):
        data = np.ones(len(self.indices), dtype=np.int32)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.num_nodes, self.num_nodes))

    def attribute_row(self, node):
        """Sparse 1 x m attribute vector of a dense node index."""
        return self.attributes[node]

    def label_map(self):
        """External id -> class id for every labeled node."""
        if self.labels is None:
            return {}
        return {self.node_names[i]: int(self.labels.classes[i]) for i in self.labels.labeled_nodes()}

    def subgraph(self, names):
        """Induced subgraph on the given external ids, in the given order."""
        nodes = np.array([self.index_of(name) for name in names], dtype=np.int64)
        adjacency = self.adjacency_matrix()[nodes][:, nodes].tocsr()
        adjacency.sort_indices()
        labels = self.labels.subset(nodes) if self.labels is not None else None
        return AttributedGraph([self.node_names[i] for i in nodes], adjacency.indptr,
                               adjacency.indices, self.attributes[nodes], labels)

    def summary(self):
        """Graph statistics as a JSON-ready dict."""
        return {
            'num_nodes': self.num_nodes,
            'num_edges': self.num_edges,
            'num_features': self.num_features,
            'nnz': int(self.nnz),
            'num_classes': self.labels.num_classes if self.labels is not None else 0,
            'isolated_nodes': int(np.sum(self.degrees == 0)),
        }

    def save(self, edge_path, attr_path, label_path=None):
        """Write the graph in the formats load_graph reads.

        Node order and attribute values survive a save/load round trip exactly.
        """
        save_attributes(attr_path, self.node_names, self.attributes)
        save_edge_pairs(edge_path, [(self.node_names[u], self.node_names[v])
                                    for u, v in self.edge_array()])
        if label_path is not None and self.labels is not None:
            with open(label_path, 'w', encoding='utf-8') as f:
                for i in self.labels.labeled_nodes():
                    f.write(f"{self.node_names[i]}\t{self.labels.class_names[self.labels.classes[i]]}\n")

    def __eq__(self, other):
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        if (self.node_names != other.node_names
                or not np.array_equal(self.indptr, other.indptr)
                or not np.array_equal(self.indices, other.indices)
                or self.attributes.shape != other.attributes.shape
                or (self.attributes != other.attributes).nnz):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None:
            return (np.array_equal(self.labels.classes, other.labels.classes)
                    and self.labels.class_names == other.labels.class_names)
        return True

    __hash__ = None

    def __repr__(self):
        return (f"AttributedGraph(num_nodes={self.num_nodes}, num_edges={self.num_edges}, "
                f"num_features={self.num_features}, nnz={self.nnz})")


@dataclass(frozen=True, eq=False)
class OutOfSampleSplit:
    """In-sample graph plus held-out nodes known only by their attributes."""

    in_sample: AttributedGraph
    out_names: tuple
    out_attributes: sp.csr_matrix
    out_labels: np.ndarray
    test_edges: tuple


def _data_lines(path):
    """Yield (line_number, content) for non-blank lines with '#' comments removed."""
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, 1):
            content = line.split('#', 1)[0].strip()
            if content:
                yield line_number, content


def load_attributes(path, num_features=None):
    """Read a sparse attribute file.

    Format: optional header 'm=<dim>', then one line per node:
    'nodeid idx:val idx:val ...' with 0-based indices. A node id alone
    declares a zero attribute vector.

    Args:
        path: Attribute file path
        num_features: Expected dimension; required to match the header if both exist

    Returns:
        tuple: (node names list, csr_matrix of shape (len(names), m))

    Raises:
        IngestError: On malformed lines, duplicate nodes or out-of-range indices
    """
    declared = None
    names, seen = [], set()
    rows, cols, vals = [], [], []

    for line_number, content in _data_lines(path):
        if content.startswith('m='):
            if declared is not None or names:
                raise IngestError("header 'm=' must be the first data line", path, line_number)
            try:
                declared = int(content[2:])
            except ValueError:
                raise IngestError(f"bad dimension header: {content}", path, line_number) from None
            if declared < 1:
                raise IngestError("attribute dimension must be positive", path, line_number)
            if num_features is not None and declared != num_features:
                raise IngestError(f"file declares m={declared} but m={num_features} is expected",
                                  path, line_number)
            continue

        tokens = content.split()
        name = tokens[0]
        if name in seen:
            raise IngestError(f"duplicate attribute line for node {name}", path, line_number)
        seen.add(name)
        row = len(names)
        names.append(name)

        limit = declared if declared is not None else num_features
        for token in tokens[1:]:
            index_text, sep, value_text = token.partition(':')
            if not sep:
                raise IngestError(f"expected idx:val, got {token!r}", path, line_number)
            try:
                index = int(index_text)
                value = float(value_text)
            except ValueError:
                raise IngestError(f"expected idx:val, got {token!r}", path, line_number) from None
            if index < 0 or (limit is not None and index >= limit):
                raise IngestError(f"attribute index {index} outside [0, {limit})", path, line_number)
            if not math.isfinite(value):
                raise IngestError(f"non-finite attribute value {value_text}", path, line_number)
            rows.append(row)
            cols.append(index)
            vals.append(value)

    m = declared if declared is not None else num_features
    if m is None:
        m = max(cols) + 1 if cols else 1
    matrix = sp.csr_matrix((np.array(vals, dtype=np.float64), (rows, cols)), shape=(len(names), m))
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return names, matrix


def save_attributes(path, names, attributes):
    """Write names and attribute rows in the sparse attribute format."""
    attributes = sp.csr_matrix(attributes)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"m={attributes.shape[1]}\n")
        for i, name in enumerate(names):
            start, end = attributes.indptr[i], attributes.indptr[i + 1]
            pairs = ' '.join(f"{j}:{float(v)!r}" for j, v in
                             zip(attributes.indices[start:end], attributes.data[start:end]))
            f.write(f"{name} {pairs}".rstrip() + "\n")


def load_edge_pairs(path):
    """Read whitespace-separated node id pairs.

    Raises:
        IngestError: If a line does not hold exactly two tokens
    """
    pairs = []
    for line_number, content in _data_lines(path):
        tokens = content.split()
        if len(tokens) != 2:
            raise IngestError(f"expected two node ids, got {len(tokens)} tokens", path, line_number)
        pairs.append((tokens[0], tokens[1]))
    return pairs


def save_edge_pairs(path, pairs):
    with open(path, 'w', encoding='utf-8') as f:
        for u, v in pairs:
            f.write(f"{u} {v}\n")


def _class_sort_key(token):
    try:
        return (0, int(token), token)
    except ValueError:
        return (1, 0, token)


def load_labels(path, index):
    """Read a 'nodeid<TAB>class' file against a name -> dense index map.

    Returns:
        LabelSet: Class ids assigned in sorted token order

    Raises:
        IngestError: On malformed lines or unknown node ids
    """
    assignments = []
    for line_number, content in _data_lines(path):
        tokens = content.split()
        if len(tokens) != 2:
            raise IngestError("expected 'nodeid<TAB>class'", path, line_number)
        name, token = tokens
        if name not in index:
            raise IngestError(f"unknown node id in labels: {name}", path, line_number)
        assignments.append((index[name], token))

    class_names = tuple(sorted({token for _, token in assignments}, key=_class_sort_key))
    class_ids = {token: c for c, token in enumerate(class_names)}
    classes = np.full(len(index), -1, dtype=np.int64)
    for node, token in assignments:
        classes[node] = class_ids[token]
    return LabelSet(classes, class_names)


def keep_dimensions(attributes, ratio, seed):
    """Zero out all but a random subset of attribute dimensions."""
    m = attributes.shape[1]
    keep = max(1, int(round(ratio * m)))
    chosen = np.random.default_rng(seed).choice(m, size=keep, replace=False)
    mask = np.zeros(m)
    mask[chosen] = 1.0
    reduced = sp.csr_matrix(attributes @ sp.diags(mask))
    reduced.eliminate_zeros()
    return reduced


def load_graph(edge_path, attr_path, label_path=None, options=None):
    """Load an attributed graph from edge, attribute and optional label files.

    Args:
        edge_path: Whitespace-separated node pairs, '#' comments allowed
        attr_path: Sparse attribute file (see load_attributes)
        label_path: Optional 'nodeid<TAB>class' file
        options: IngestOptions

    Returns:
        AttributedGraph: Undirected, deduplicated graph

    Raises:
        IngestError: On malformed input
    """
    options = options or IngestOptions()
    names, attributes = load_attributes(attr_path, options.num_features)
    index = {name: i for i, name in enumerate(names)}

    edges = []
    edge_only = 0
    for u, v in load_edge_pairs(edge_path):
        for name in (u, v):
            if name not in index:
                index[name] = len(names)
                names.append(name)
                edge_only += 1
        edges.append((index[u], index[v]))

    if edge_only:
        logger.warning("%d nodes appear only in %s; they get zero attributes", edge_only, edge_path)
        attributes = sp.vstack([attributes, sp.csr_matrix((edge_only, attributes.shape[1]))]).tocsr()

    if options.keep_dimension_ratio < 1.0:
        attributes = keep_dimensions(attributes, options.keep_dimension_ratio, options.seed)
    if options.normalize:
        attributes = normalize(attributes, norm='l2', axis=1)

    labels = load_labels(label_path, index) if label_path is not None else None
    graph = AttributedGraph.from_edges(names, edges, attributes, labels)
    logger.info("Loaded %r", graph)
    return graph


def split_out_of_sample(graph, holdout_ratio=0.2, seed=0, holdout=None):
    """Hold out nodes so that only their attributes remain visible.

    Args:
        graph: Full AttributedGraph
        holdout_ratio: Fraction of nodes held out when holdout is None
        seed: Seed for the random hold-out
        holdout: Optional explicit iterable of external ids to hold out

    Returns:
        OutOfSampleSplit: In-sample subgraph, held-out nodes and the edges touching them
    """
    if holdout is None:
        if not 0.0 < holdout_ratio < 1.0:
            raise ConfigError(f"holdout_ratio must be in (0, 1), got {holdout_ratio}")
        count = min(graph.num_nodes - 1, max(1, int(round(holdout_ratio * graph.num_nodes))))
        chosen = np.sort(np.random.default_rng(seed).permutation(graph.num_nodes)[:count])
    else:
        chosen = np.sort(np.array([graph.index_of(name) for name in holdout], dtype=np.int64))

    is_out = np.zeros(graph.num_nodes, dtype=bool)
    is_out[chosen] = True
    in_nodes = np.flatnonzero(~is_out)

    edges = graph.edge_array()
    touching = is_out[edges[:, 0]] | is_out[edges[:, 1]]
    test_edges = tuple((graph.node_names[u], graph.node_names[v]) for u, v in edges[touching])

    if graph.labels is not None:
        out_labels = graph.labels.classes[chosen]
    else:
        out_labels = np.full(len(chosen), -1, dtype=np.int64)

    return OutOfSampleSplit(
        in_sample=graph.subgraph([graph.node_names[i] for i in in_nodes]),
        out_names=tuple(graph.node_names[i] for i in chosen),
        out_attributes=graph.attributes[chosen],
        out_labels=out_labels,
        test_edges=test_edges,
    )


def degree_histogram(graph):
    """Map degree -> number of nodes with that degree (counts sum to |V|)."""
    counts = np.bincount(graph.degrees) if graph.num_nodes else np.array([], dtype=np.int64)
    return {int(k): int(c) for k, c in enumerate(counts) if c}


def attribute_count_histogram(graph):
    """Map number of nonzero attributes -> number of nodes."""
    per_node = np.diff(graph.attributes.indptr)
    counts = np.bincount(per_node) if graph.num_nodes else np.array([], dtype=np.int64)
    return {int(k): int(c) for k, c in enumerate(counts) if c}


def write_histogram_csv(histogram, path, key_name='degree'):
    with open(path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow([key_name, 'count'])
        for key in sorted(histogram):
            writer.writerow([key, histogram[key]])
