"""Out-of-sample embedding of nodes from their attributes, and embedding files."""

import logging

import numpy as np
from gensim.models import KeyedVectors

from .errors import ConfigError, IngestError
from .mapping import as_attribute_rows

logger = logging.getLogger(__name__)


class EmbeddingSet:
    """Dense d-dimensional vectors keyed by external node id."""

    def __init__(self, ids, vectors, dim=None):
        """Initialize embedding set.

        Args:
            ids: External node ids, one per row
            vectors: Array of shape (len(ids), d)
            dim: Dimension, required only when ids is empty
        """
        self.ids = tuple(str(i) for i in ids)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.size == 0:
            if dim is None:
                dim = vectors.shape[1] if vectors.ndim == 2 else 0
            vectors = vectors.reshape(len(self.ids), dim)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.ids):
            raise ConfigError("need exactly one vector per id")
        if not np.all(np.isfinite(vectors)):
            raise ConfigError("embeddings must be finite")
        self.vectors = vectors
        self._index = {name: i for i, name in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise ConfigError("embedding ids must be unique")

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.ids)

    def __contains__(self, name):
        return str(name) in self._index

    def __getitem__(self, name):
        try:
            return self.vectors[self._index[str(name)]]
        except KeyError:
            raise ConfigError(f"no embedding for node {name}") from None

    def matrix(self, names):
        """Stack the vectors of the given ids, shape (len(names), d)."""
        try:
            rows = [self._index[str(name)] for name in names]
        except KeyError as e:
            raise ConfigError(f"no embedding for node {e.args[0]}") from None
        return self.vectors[rows].reshape(len(rows), self.dim)

    def subset(self, names):
        names = list(names)
        return EmbeddingSet(names, self.matrix(names), self.dim)

    def merge(self, other):
        """Union of two sets with disjoint ids."""
        if other.dim != self.dim:
            raise ConfigError("cannot merge embeddings of different dimensions")
        return EmbeddingSet(self.ids + other.ids, np.vstack([self.vectors, other.vectors]), self.dim)

    @classmethod
    def from_graph(cls, model, graph):
        """Embed every node of a graph through the mapping."""
        return infer(model, graph.attributes, graph.node_names)


def infer(model, attributes, ids):
    """Embeddings f(x) of nodes known only by their attributes.

    Args:
        model: Trained MappingModel
        attributes: Sparse (n, m) matrix, one row per node
        ids: External ids of the n nodes

    Returns:
        EmbeddingSet: One vector per id

    Raises:
        ConfigError: If the attribute dimension differs from the model's m
    """
    rows = as_attribute_rows(attributes, model.num_features)
    ids = list(ids)
    if rows.shape[0] != len(ids):
        raise ConfigError(f"{rows.shape[0]} attribute rows for {len(ids)} ids")
    return EmbeddingSet(ids, model.transform(rows), model.dim)


def to_keyed_vectors(embeddings):
    """Copy embeddings into a gensim KeyedVectors, float32 like word2vec files."""
    keyed = KeyedVectors(embeddings.dim, dtype=np.float32)
    if len(embeddings):
        keyed.add_vectors(list(embeddings.ids), embeddings.vectors.astype(np.float32))
    return keyed


def save_embeddings(embeddings, path, binary=False):
    """Write embeddings in word2vec format.

    Text: header 'count d', then 'id v1 ... vd' per line.
    Binary: the same header line, then per node 'id ' followed by d
    little-endian float32 values.
    """
    to_keyed_vectors(embeddings).save_word2vec_format(str(path), binary=binary)
    logger.info("Wrote %d embeddings (d=%d) to %s", len(embeddings), embeddings.dim, path)


def load_embeddings(path, binary=False):
    """Read a word2vec text or binary embedding file.

    Raises:
        IngestError: On a malformed header, a short vector or a count mismatch
    """
    try:
        keyed = KeyedVectors.load_word2vec_format(str(path), binary=binary)
    except (ValueError, EOFError) as e:
        raise IngestError(f"bad embedding file: {e}", str(path)) from None
    return EmbeddingSet(keyed.index_to_key, keyed.vectors, keyed.vector_size)
