"""Planted-partition attributed graphs for small experiments."""

import logging

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .graph import AttributedGraph, LabelSet

logger = logging.getLogger(__name__)


def make_planted_graph(block_sizes, p_in=0.1, p_out=0.01, num_features=50,
                       informative_per_block=5, signal_prob=0.6, noise_density=0.05, seed=0):
    """Stochastic block model whose nodes carry block-indicative binary attributes.

    Block b owns attribute dimensions [b * informative_per_block,
    (b + 1) * informative_per_block); each of its nodes switches those on with
    probability signal_prob. Every dimension is additionally switched on with
    probability noise_density. Node ids are '0', '1', ... and the class of a
    node is its block.

    Args:
        block_sizes: Nodes per block
        p_in: Edge probability inside a block
        p_out: Edge probability across blocks
        num_features: Attribute dimension m
        informative_per_block: Indicative dimensions per block
        signal_prob: Probability an indicative dimension is on
        noise_density: Probability any dimension is on at random
        seed: Generator seed

    Returns:
        AttributedGraph: Labeled graph

    Raises:
        ConfigError: On invalid probabilities or too few attribute dimensions
    """
    block_sizes = [int(size) for size in block_sizes]
    if not block_sizes or min(block_sizes) < 1:
        raise ConfigError("every block needs at least one node")
    for name, value in (('p_in', p_in), ('p_out', p_out), ('signal_prob', signal_prob),
                        ('noise_density', noise_density)):
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"{name} must be a probability, got {value}")
    if len(block_sizes) * informative_per_block > num_features:
        raise ConfigError(
            f"{len(block_sizes)} blocks x {informative_per_block} indicative dimensions "
            f"exceed num_features={num_features}")

    rng = np.random.default_rng(seed)
    blocks = np.repeat(np.arange(len(block_sizes)), block_sizes)
    n = len(blocks)

    sources, targets = [], []
    for u in range(n - 1):
        others = np.arange(u + 1, n)
        prob = np.where(blocks[others] == blocks[u], p_in, p_out)
        hit = others[rng.random(len(others)) < prob]
        sources.append(np.full(len(hit), u))
        targets.append(hit)
    edges = np.column_stack([np.concatenate(sources or [[]]), np.concatenate(targets or [[]])])

    attributes = rng.random((n, num_features)) < noise_density
    for b in range(len(block_sizes)):
        members = np.flatnonzero(blocks == b)
        dims = np.arange(b * informative_per_block, (b + 1) * informative_per_block)
        attributes[np.ix_(members, dims)] |= rng.random((len(members), len(dims))) < signal_prob

    labels = LabelSet(blocks, tuple(str(b) for b in range(len(block_sizes))))
    graph = AttributedGraph.from_edges([str(i) for i in range(n)], edges,
                                       sp.csr_matrix(attributes.astype(np.float64)), labels)
    logger.info("Planted %r with %d blocks", graph, len(block_sizes))
    return graph
