"""Truncated random walks and their reduction to node-context co-occurrence counts."""

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, IngestError, SamplingError
from .sampler import AliasTable

logger = logging.getLogger(__name__)

# Padding value for positions after a walk has ended
PAD = -1


@dataclass(frozen=True)
class WalkConfig:
    """Random walk settings.

    Attributes:
        walk_length: Nodes per walk, l
        walks_per_node: Walks started at every node, gamma
        window: Context window size, t
        seed: Base seed; repeat r draws from the stream (seed, r)
    """

    walk_length: int = 100
    walks_per_node: int = 40
    window: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 2:
            raise ConfigError(f"walk_length must be at least 2, got {self.walk_length}")
        if self.walks_per_node < 1:
            raise ConfigError(f"walks_per_node must be at least 1, got {self.walks_per_node}")
        if not 1 <= self.window < self.walk_length:
            raise ConfigError(
                f"window must satisfy 1 <= window < walk_length, got {self.window}")

    def pair_bound(self, num_nodes):
        """Upper bound 2*gamma*l*t*|V| on the number of co-occurrence pairs."""
        return 2 * self.walks_per_node * self.walk_length * self.window * num_nodes


class ContextCorpus:
    """Sparse co-occurrence counts n(center, context).

    Counts live in a |V| x |V| CSR matrix; its nonzeros, read in CSR order,
    form the flat table sorted by (center, context).
    """

    def __init__(self, counts):
        counts = sp.csr_matrix(counts, dtype=np.int64)
        counts.sum_duplicates()
        counts.eliminate_zeros()
        counts.sort_indices()
        if counts.shape[0] != counts.shape[1]:
            raise ConfigError("co-occurrence matrix must be square")
        if counts.nnz and counts.data.min() < 1:
            raise ConfigError("co-occurrence counts must be positive")
        self.counts = counts

    @classmethod
    def from_pairs(cls, pairs, num_nodes):
        """Build a corpus from a {(center, context): count} mapping."""
        if pairs:
            keys = np.array(list(pairs.keys()), dtype=np.int64).reshape(-1, 2)
            values = np.array(list(pairs.values()), dtype=np.int64)
        else:
            keys = np.zeros((0, 2), dtype=np.int64)
            values = np.zeros(0, dtype=np.int64)
        return cls(sp.coo_matrix((values, (keys[:, 0], keys[:, 1])), shape=(num_nodes, num_nodes)))

    @property
    def num_nodes(self):
        return self.counts.shape[0]

    @property
    def num_pairs(self):
        """Number of distinct (center, context) pairs."""
        return self.counts.nnz

    @property
    def total_pairs(self):
        return int(self.counts.data.sum())

    def __len__(self):
        return self.num_pairs

    def count(self, center, context):
        return int(self.counts[center, context])

    @cached_property
    def centers(self):
        """Center index of every flat table entry."""
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(self.counts.indptr))

    @cached_property
    def pair_table(self):
        """Alias table over the flat (center, context) entries, weighted by count."""
        if self.num_pairs == 0:
            raise SamplingError("cannot sample from an empty corpus")
        return AliasTable.build(self.weights)

    @cached_property
    def contexts(self):
        """Context index of every flat table entry."""
        return self.counts.indices.astype(np.int64)

    @property
    def weights(self):
        return self.counts.data

    def context_marginals(self):
        """Total count per context node, the basis of the noise distribution."""
        return np.asarray(self.counts.sum(axis=0)).ravel()

    def center_marginals(self):
        return np.asarray(self.counts.sum(axis=1)).ravel()

    def as_dict(self):
        return {(int(i), int(j)): int(c) for i, j, c in zip(self.centers, self.contexts, self.weights)}

    def merge(self, other):
        """Sum of two partial corpora over the same node set."""
        if other.num_nodes != self.num_nodes:
            raise ConfigError("cannot merge corpora over different node sets")
        return ContextCorpus(self.counts + other.counts)

    def save(self, path):
        """Write the corpus as a header followed by little-endian u32 triples."""
        triples = np.empty((self.num_pairs, 3), dtype='<u4')
        triples[:, 0] = self.centers
        triples[:, 1] = self.contexts
        triples[:, 2] = self.weights
        with open(path, 'wb') as f:
            f.write(struct.pack('<4sIQ', b'A2VC', self.num_nodes, self.num_pairs))
            f.write(triples.tobytes())

    @classmethod
    def load(cls, path):
        """Read a corpus written by save().

        Raises:
            IngestError: If the file is truncated or not a corpus file
        """
        with open(path, 'rb') as f:
            header = f.read(struct.calcsize('<4sIQ'))
            if len(header) != struct.calcsize('<4sIQ'):
                raise IngestError("corpus header truncated", path)
            magic, num_nodes, num_pairs = struct.unpack('<4sIQ', header)
            if magic != b'A2VC':
                raise IngestError(f"not a corpus file (magic {magic!r})", path)
            body = f.read()
        if len(body) != num_pairs * 12:
            raise IngestError(f"expected {num_pairs} triples, found {len(body) // 12}", path)
        triples = np.frombuffer(body, dtype='<u4').reshape(-1, 3).astype(np.int64)
        return cls(sp.coo_matrix((triples[:, 2], (triples[:, 0], triples[:, 1])),
                                 shape=(num_nodes, num_nodes)))

    def __repr__(self):
        return (f"ContextCorpus(num_nodes={self.num_nodes}, num_pairs={self.num_pairs}, "
                f"total_pairs={self.total_pairs})")


def _walk_block(graph, cfg, repeat):
    """One walk from every node, drawn from the (seed, repeat) stream.

    Returns:
        np.ndarray: Shape (|V|, walk_length), PAD after a walk ends
    """
    rng = np.random.default_rng([cfg.seed, repeat])
    indptr, indices = graph.indptr, graph.indices
    degrees = graph.degrees

    block = np.full((graph.num_nodes, cfg.walk_length), PAD, dtype=np.int64)
    current = np.arange(graph.num_nodes, dtype=np.int64)
    block[:, 0] = current

    # Undirected graphs only dead-end at isolated nodes, so liveness is fixed at the start
    alive = np.flatnonzero(degrees[current] > 0)
    current = current[alive]
    for step in range(1, cfg.walk_length):
        offsets = rng.integers(0, degrees[current])
        current = indices[indptr[current] + offsets]
        block[alive, step] = current
    return block


def generate_walks(graph, cfg, threads=1):
    """Stream truncated random walks, one block per repeat.

    Each block holds one walk started at every node; every step moves to a
    uniformly chosen neighbor and a walk from an isolated node has length 1.
    Blocks are deterministic given cfg.seed whatever the thread count.

    Args:
        graph: AttributedGraph
        cfg: WalkConfig
        threads: Worker threads generating blocks

    Yields:
        np.ndarray: Walk block of shape (|V|, walk_length), padded with PAD
    """
    repeats = range(cfg.walks_per_node)
    if threads <= 1:
        for repeat in repeats:
            yield _walk_block(graph, cfg, repeat)
        return

    with ThreadPoolExecutor(max_workers=threads) as executor:
        yield from executor.map(lambda r: _walk_block(graph, cfg, r), repeats)


def iter_walks(blocks):
    """Flatten walk blocks into individual walks without padding."""
    for block in blocks:
        for row in np.atleast_2d(block):
            yield row[row != PAD]


def count_contexts(walks, window, num_nodes=None):
    """Reduce walks to co-occurrence counts.

    For each walk position i, every position j with 0 < |i - j| <= window
    adds one to n(walk[i], walk[j]); windows truncate at walk boundaries and
    a node repeated inside its own window counts as a context of itself.

    Args:
        walks: Iterable of walks (1-D arrays) or padded walk blocks (2-D arrays)
        window: Context window size t
        num_nodes: Node count; inferred from the largest id when omitted

    Returns:
        ContextCorpus: The co-occurrence statistic
    """
    if window < 1:
        raise ConfigError(f"window must be at least 1, got {window}")

    partial = []
    largest = -1
    for walk in walks:
        block = np.atleast_2d(np.asarray(walk, dtype=np.int64))
        if block.size == 0:
            continue
        largest = max(largest, int(block.max()))
        centers, contexts = [], []
        for offset in range(1, min(window, block.shape[1] - 1) + 1):
            left, right = block[:, :-offset], block[:, offset:]
            valid = (left != PAD) & (right != PAD)
            left, right = left[valid], right[valid]
            centers += [left, right]
            contexts += [right, left]
        if centers:
            partial.append((np.concatenate(centers), np.concatenate(contexts)))

    size = num_nodes if num_nodes is not None else largest + 1
    counts = sp.csr_matrix((size, size), dtype=np.int64)
    for centers, contexts in partial:
        counts = counts + sp.csr_matrix(
            (np.ones(len(centers), dtype=np.int64), (centers, contexts)), shape=(size, size))
    return ContextCorpus(counts)


def build_corpus(graph, cfg, threads=1):
    """Generate walks and count contexts block by block, never holding all walks.

    Args:
        graph: AttributedGraph
        cfg: WalkConfig
        threads: Worker threads; the result does not depend on it

    Returns:
        ContextCorpus: Co-occurrence counts over graph.num_nodes nodes
    """
    def reduce_block(repeat):
        return count_contexts([_walk_block(graph, cfg, repeat)], cfg.window, graph.num_nodes)

    repeats = range(cfg.walks_per_node)
    corpus = ContextCorpus(sp.csr_matrix((graph.num_nodes, graph.num_nodes), dtype=np.int64))
    if threads <= 1:
        partials = map(reduce_block, repeats)
        for partial in partials:
            corpus = corpus.merge(partial)
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            for partial in executor.map(reduce_block, repeats):
                corpus = corpus.merge(partial)

    logger.info("Built %r from %d walks", corpus, cfg.walks_per_node * graph.num_nodes)
    return corpus


def dump_walks(blocks, graph, path):
    """Write one walk per line as space-separated external ids."""
    names = graph.node_names
    written = 0
    with open(path, 'w', encoding='utf-8') as f:
        for walk in iter_walks(blocks):
            f.write(' '.join(names[i] for i in walk) + '\n')
            written += 1
    logger.info("Wrote %d walks to %s", written, path)
    return written
