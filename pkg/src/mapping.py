"""Attribute-to-embedding mappings f: R^m -> R^d and their gradients."""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import ConfigError

logger = logging.getLogger(__name__)


class MappingKind(str, Enum):
    """The four transformations of node attributes."""

    LINEAR = 'linear'
    RELU = 'relu'
    KERNEL = 'kernel'
    SIGMOID = 'sigmoid'


class KernelNormalization(str, Enum):
    """Scale applied to the cosine/sine features of the kernel mapping.

    ATTRIBUTE scales by 1/sqrt(m); OUTPUT by 1/sqrt(d/2), the usual
    random Fourier feature normalization.
    """

    ATTRIBUTE = 'attribute'
    OUTPUT = 'output'


@dataclass(frozen=True, eq=False)
class SparseRowUpdate:
    """Update confined to a few rows of W^in.

    Attributes:
        rows: Row indices (the attribute support of x)
        values: Array of shape (len(rows), raw_columns)
    """

    rows: np.ndarray
    values: np.ndarray

    def to_dense(self, num_rows):
        dense = np.zeros((num_rows, self.values.shape[1]))
        np.add.at(dense, self.rows, self.values)
        return dense


def as_attribute_rows(x, num_features):
    """Coerce a sparse or dense attribute vector/matrix to CSR rows of width m.

    Raises:
        ConfigError: On a dimension mismatch
    """
    if sp.issparse(x):
        rows = sp.csr_matrix(x, dtype=np.float64)
    else:
        rows = sp.csr_matrix(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    if rows.shape[1] != num_features:
        raise ConfigError(
            f"attribute dimension mismatch: model expects m={num_features}, got {rows.shape[1]}")
    return rows


class MappingModel:
    """Mapping kind plus the input weight matrix W^in.

    W^in has shape (m, d), except for the kernel mapping where it holds d/2
    raw frequency columns expanded to d outputs (cosines then sines).
    """

    def __init__(self, kind, weights, normalization=KernelNormalization.ATTRIBUTE):
        self.kind = MappingKind(kind)
        self.normalization = KernelNormalization(normalization)
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ConfigError("W^in must be a matrix")
        if not np.all(np.isfinite(self.weights)):
            raise ConfigError("W^in contains non-finite weights")

    @classmethod
    def initialize(cls, kind, num_features, dim, rng, normalization=KernelNormalization.ATTRIBUTE):
        """Random model with W^in entries uniform on [-0.5/d, 0.5/d].

        Raises:
            ConfigError: If the kernel mapping is asked for an odd dimension
        """
        kind = MappingKind(kind)
        if num_features < 1 or dim < 1:
            raise ConfigError("num_features and dim must be positive")
        if kind is MappingKind.KERNEL and dim % 2:
            raise ConfigError("kernel requires even dimension")
        columns = dim // 2 if kind is MappingKind.KERNEL else dim
        weights = rng.uniform(-0.5 / dim, 0.5 / dim, size=(num_features, columns))
        return cls(kind, weights, normalization)

    @property
    def num_features(self):
        return self.weights.shape[0]

    @property
    def raw_columns(self):
        return self.weights.shape[1]

    @property
    def dim(self):
        if self.kind is MappingKind.KERNEL:
            return 2 * self.raw_columns
        return self.raw_columns

    @property
    def kernel_scale(self):
        if self.normalization is KernelNormalization.ATTRIBUTE:
            return 1.0 / np.sqrt(self.num_features)
        return 1.0 / np.sqrt(self.raw_columns)

    def preactivate(self, x):
        """W^in-projections w_k . x for every row of x."""
        return np.asarray(as_attribute_rows(x, self.num_features) @ self.weights)

    def activate(self, h):
        """Map projections h (last axis = raw columns) to embeddings."""
        if self.kind is MappingKind.LINEAR:
            return h
        if self.kind is MappingKind.RELU:
            return np.maximum(h, 0.0)
        if self.kind is MappingKind.SIGMOID:
            return expit(h)
        scale = self.kernel_scale
        return np.concatenate([scale * np.cos(h), scale * np.sin(h)], axis=-1)

    def backprop(self, h, phi, upstream):
        """Gradient of upstream . f with respect to the projections h.

        The ReLU subgradient at h == 0 is 0.
        """
        if self.kind is MappingKind.LINEAR:
            return upstream
        if self.kind is MappingKind.RELU:
            return upstream * (h > 0)
        if self.kind is MappingKind.SIGMOID:
            return upstream * phi * (1.0 - phi)
        half = self.raw_columns
        scale = self.kernel_scale
        return scale * (np.cos(h) * upstream[..., half:] - np.sin(h) * upstream[..., :half])

    def transform(self, x):
        """Embeddings of every attribute row of x, shape (rows, d)."""
        return self.activate(self.preactivate(x))

    def copy(self):
        return MappingModel(self.kind, self.weights.copy(), self.normalization)

    def __repr__(self):
        return (f"MappingModel(kind={self.kind.value}, m={self.num_features}, d={self.dim}, "
                f"normalization={self.normalization.value})")


def embed(model, x):
    """Embedding Phi = f(x) of one attribute vector.

    Args:
        model: MappingModel
        x: 1 x m sparse row or length-m dense vector

    Returns:
        np.ndarray: Vector of length d

    Raises:
        ConfigError: On a dimension mismatch
    """
    rows = as_attribute_rows(x, model.num_features)
    if rows.shape[0] != 1:
        raise ConfigError(f"embed expects a single attribute vector, got {rows.shape[0]} rows")
    return model.transform(rows)[0]


def gradient_wrt_win(model, x, upstream):
    """Gradient of upstream . f(x) with respect to W^in.

    Only the rows in the support of x are nonzero, so the result is returned
    as a SparseRowUpdate on those rows.

    Args:
        model: MappingModel
        x: 1 x m sparse row or length-m dense vector
        upstream: Vector of length d

    Returns:
        SparseRowUpdate: Rows x.indices, values outer(x.data, dL/dh)
    """
    rows = as_attribute_rows(x, model.num_features)
    if rows.shape[0] != 1:
        raise ConfigError("gradient_wrt_win expects a single attribute vector")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (model.dim,):
        raise ConfigError(f"upstream must have length {model.dim}, got {upstream.shape}")

    rows.sum_duplicates()
    support, values = rows.indices.astype(np.int64), rows.data
    h = values @ model.weights[support]
    phi = model.activate(h)
    grad_h = model.backprop(h, phi, upstream)
    return SparseRowUpdate(support, np.outer(values, grad_h))
