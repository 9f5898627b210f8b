"""Tests for out-of-sample inference and embedding files."""

import os
import sys

import numpy as np
import pytest
import scipy.sparse as sp

# Add repository root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import ConfigError, IngestError
from src.evalkit import classify
from src.graph import AttributedGraph
from src.inference import (EmbeddingSet, infer, load_embeddings, save_embeddings,
                           to_keyed_vectors)
from src.mapping import MappingModel, embed


class TestInfer:
    """Test cases for infer."""

    def setup_method(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(8)
        self.model = MappingModel('sigmoid', rng.normal(size=(6, 4)))
        self.attributes = sp.random(5, 6, density=0.5, random_state=2, format='csr')
        self.ids = ['n0', 'n1', 'n2', 'n3', 'n4']

    def test_matches_embed(self):
        embeddings = infer(self.model, self.attributes, self.ids)
        assert len(embeddings) == 5
        for i, name in enumerate(self.ids):
            expected = embed(self.model, self.attributes[i])
            assert np.allclose(embeddings[name], expected, rtol=0, atol=1e-15)

    def test_same_attributes_same_embedding(self):
        """Embeddings depend on attributes only."""
        rows = sp.vstack([self.attributes[1], self.attributes[1]]).tocsr()
        embeddings = infer(self.model, rows, ['a', 'b'])
        assert np.array_equal(embeddings['a'], embeddings['b'])

    def test_zero_attributes(self):
        embeddings = infer(self.model, sp.csr_matrix((1, 6)), ['z'])
        assert np.allclose(embeddings['z'], 0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError, match='dimension mismatch'):
            infer(self.model, sp.csr_matrix((2, 7)), ['a', 'b'])

    def test_id_count_mismatch(self):
        with pytest.raises(ConfigError):
            infer(self.model, self.attributes, ['only-one'])

    def test_from_graph(self):
        graph = AttributedGraph.from_edges(self.ids, [(0, 1)], self.attributes)
        embeddings = EmbeddingSet.from_graph(self.model, graph)
        assert embeddings.ids == tuple(self.ids)
        assert np.allclose(embeddings.vectors, self.model.transform(self.attributes))


class TestEmbeddingSet:
    """Test cases for EmbeddingSet."""

    def setup_method(self):
        """Set up test fixtures."""
        self.embeddings = EmbeddingSet(['a', 'b', 'c'], np.arange(6.0).reshape(3, 2))

    def test_lookup(self):
        assert list(self.embeddings['b']) == [2.0, 3.0]
        assert 'c' in self.embeddings
        assert 'x' not in self.embeddings
        with pytest.raises(ConfigError):
            self.embeddings['x']

    def test_matrix_and_subset(self):
        assert self.embeddings.matrix(['c', 'a']).tolist() == [[4.0, 5.0], [0.0, 1.0]]
        assert self.embeddings.subset(['b']).ids == ('b',)
        assert self.embeddings.matrix([]).shape == (0, 2)

    def test_merge(self):
        merged = self.embeddings.merge(EmbeddingSet(['d'], [[9.0, 9.0]]))
        assert len(merged) == 4
        with pytest.raises(ConfigError):
            self.embeddings.merge(EmbeddingSet(['a'], [[0.0, 0.0]]))
        with pytest.raises(ConfigError):
            self.embeddings.merge(EmbeddingSet(['e'], [[1.0, 2.0, 3.0]]))

    def test_invalid(self):
        with pytest.raises(ConfigError):
            EmbeddingSet(['a', 'a'], np.zeros((2, 2)))
        with pytest.raises(ConfigError):
            EmbeddingSet(['a'], [[np.inf, 0.0]])
        with pytest.raises(ConfigError):
            EmbeddingSet(['a', 'b'], np.zeros((3, 2)))


class TestEmbeddingFiles:
    """Test cases for the word2vec-style embedding formats."""

    def setup_method(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(4)
        self.embeddings = EmbeddingSet(['node-1', 'x', '42'], rng.normal(size=(3, 5)))

    def test_text_round_trip(self, tmp_path):
        path = tmp_path / 'emb.txt'
        save_embeddings(self.embeddings, path)
        assert path.read_text().splitlines()[0] == '3 5'
        assert path.read_text().splitlines()[2].split()[0] == 'x'
        loaded = load_embeddings(path)
        assert loaded.ids == self.embeddings.ids
        assert np.allclose(loaded.vectors, self.embeddings.vectors, rtol=0, atol=1e-6)

    def test_binary_round_trip_float32(self, tmp_path):
        path = tmp_path / 'emb.bin'
        save_embeddings(self.embeddings, path, binary=True)
        loaded = load_embeddings(path, binary=True)
        assert loaded.ids == self.embeddings.ids
        assert np.array_equal(loaded.vectors, self.embeddings.vectors.astype(np.float32))

    def test_binary_without_newlines(self, tmp_path):
        """Vectors packed back to back, as word2vec tools write them."""
        a = np.array([0.5, -1.0, 2.0], dtype='<f4')
        b = np.array([3.0, 0.25, -4.5], dtype='<f4')
        path = tmp_path / 'packed.bin'
        path.write_bytes(b'2 3\n' + b'a ' + a.tobytes() + b'b ' + b.tobytes())
        loaded = load_embeddings(path, binary=True)
        assert loaded.ids == ('a', 'b')
        assert loaded['a'].tolist() == [0.5, -1.0, 2.0]
        assert loaded['b'].tolist() == [3.0, 0.25, -4.5]

    def test_keyed_vectors_view(self):
        keyed = to_keyed_vectors(self.embeddings)
        assert keyed.index_to_key == ['node-1', 'x', '42']
        assert keyed.vector_size == 5
        assert np.allclose(keyed['42'], self.embeddings['42'], rtol=0, atol=1e-6)

    @pytest.mark.parametrize('binary', [False, True])
    def test_loaded_embeddings_classify_identically(self, tmp_path, binary):
        rng = np.random.default_rng(12)
        classes = np.repeat([0, 1, 2], 20)
        centers = rng.normal(scale=2.0, size=(3, 4))
        vectors = (centers[classes] + rng.normal(size=(60, 4))).astype(np.float32)
        ids = [f"v{i}" for i in range(60)]
        in_memory = EmbeddingSet(ids, vectors)
        labels = dict(zip(ids, classes.tolist()))

        path = tmp_path / 'emb'
        save_embeddings(in_memory, path, binary=binary)
        loaded = load_embeddings(path, binary=binary)
        assert np.array_equal(loaded.vectors, in_memory.vectors)
        expected = classify(in_memory, labels, repeats=4, seed=6)
        assert classify(loaded, labels, repeats=4, seed=6).metrics == expected.metrics

    def test_malformed_files(self, tmp_path):
        bad_header = tmp_path / 'h.txt'
        bad_header.write_text('three 5\n')
        with pytest.raises(IngestError):
            load_embeddings(bad_header)

        short = tmp_path / 's.txt'
        short.write_text('2 2\na 1 2\nb 1\n')
        with pytest.raises(IngestError) as excinfo:
            load_embeddings(short)
        assert excinfo.value.path == str(short)

        missing = tmp_path / 'm.txt'
        missing.write_text('2 2\na 1 2\n')
        with pytest.raises(IngestError):
            load_embeddings(missing)

    def test_truncated_binary(self, tmp_path):
        path = tmp_path / 'emb.bin'
        save_embeddings(self.embeddings, path, binary=True)
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(IngestError):
            load_embeddings(path, binary=True)
