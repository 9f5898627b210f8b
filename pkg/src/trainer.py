"""Stochastic gradient descent on the negative-sampled skip-gram objective over attribute mappings."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import ConfigError, NumericDivergenceError, SamplingError
from .mapping import KernelNormalization, MappingKind, MappingModel, SparseRowUpdate
from .sampler import NoiseDistribution, SampleStream

logger = logging.getLogger(__name__)

MAX_DEFAULT_ITERATIONS = 10 ** 8


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the published settings.

    Attributes:
        mapping: Mapping kind f
        dim: Embedding dimension d
        negatives: Negative samples K per positive pair
        lr_start: Initial learning rate
        lr_min: Learning rate floor
        max_iterations: SGD steps; None means min(10^8, 200 * total_pairs)
        noise_alpha: Exponent on context marginals for the noise distribution
        seed: Base seed for initialization and sampling
        threads: Worker threads; 1 is deterministic, more runs lock-free
        clip_norm: Optional per-step gradient norm ceiling
        kernel_normalization: Scale of the kernel mapping
        log_every: Steps per running-loss window
        divergence_factor: Abort when the running loss exceeds this multiple of the first window
        chunk_size: Samples drawn per batch from the sample stream
    """

    mapping: MappingKind = MappingKind.SIGMOID
    dim: int = 128
    negatives: int = 5
    lr_start: float = 0.025
    lr_min: float = 2.5e-6
    max_iterations: Optional[int] = None
    noise_alpha: float = 0.75
    seed: int = 0
    threads: int = 1
    clip_norm: Optional[float] = None
    kernel_normalization: KernelNormalization = KernelNormalization.ATTRIBUTE
    log_every: int = 100_000
    divergence_factor: float = 10.0
    chunk_size: int = 8192

    def __post_init__(self):
        try:
            object.__setattr__(self, 'mapping', MappingKind(self.mapping))
            object.__setattr__(self, 'kernel_normalization',
                               KernelNormalization(self.kernel_normalization))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.dim < 1:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        if self.mapping is MappingKind.KERNEL and self.dim % 2:
            raise ConfigError("kernel requires even dimension")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be at least 1, got {self.negatives}")
        if not self.lr_start > 0 or not 0 <= self.lr_min <= self.lr_start:
            raise ConfigError("learning rates must satisfy 0 <= lr_min <= lr_start, lr_start > 0")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigError(f"max_iterations must be nonnegative, got {self.max_iterations}")
        if self.noise_alpha < 0:
            raise ConfigError(f"noise_alpha must be nonnegative, got {self.noise_alpha}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")
        if self.log_every < 1 or self.chunk_size < 1:
            raise ConfigError("log_every and chunk_size must be positive")
        if self.divergence_factor <= 1:
            raise ConfigError("divergence_factor must exceed 1")


def default_iterations(corpus):
    """Iteration budget min(10^8, 200 * total_pairs)."""
    return min(MAX_DEFAULT_ITERATIONS, 200 * corpus.total_pairs)


class TrainerState:
    """Mutable training state: W^in (inside the model), W^out and the step counter.

    W^out is held as a |V| x d array; row q is the output vector of node q.
    """

    def __init__(self, model, output_weights, attributes, max_iterations=1,
                 lr_start=0.025, lr_min=2.5e-6, rng=None, clip_norm=None):
        attributes = sp.csr_matrix(attributes, dtype=np.float64)
        attributes.sum_duplicates()
        if attributes.shape[1] != model.num_features:
            raise ConfigError(
                f"attributes have m={attributes.shape[1]}, model expects m={model.num_features}")
        output_weights = np.asarray(output_weights, dtype=np.float64)
        if output_weights.shape != (attributes.shape[0], model.dim):
            raise ConfigError(f"W^out must have shape {(attributes.shape[0], model.dim)}")

        self.model = model
        self.output_weights = output_weights
        self.attributes = attributes
        self.max_iterations = max_iterations
        self.lr_start = lr_start
        self.lr_min = lr_min
        self.rng = rng
        self.clip_norm = clip_norm
        self.iteration = 0

        self._indptr = attributes.indptr
        self._indices = attributes.indices.astype(np.int64)
        self._data = attributes.data

    @classmethod
    def initialize(cls, attributes, cfg, max_iterations):
        """Random W^in, zero W^out.

        W^in draws from the stream (seed, 0); the returned rng is the
        sampling stream (seed, 1).
        """
        attributes = sp.csr_matrix(attributes)
        model = MappingModel.initialize(cfg.mapping, attributes.shape[1], cfg.dim,
                                        np.random.default_rng([cfg.seed, 0]),
                                        cfg.kernel_normalization)
        output_weights = np.zeros((attributes.shape[0], cfg.dim))
        return cls(model, output_weights, attributes, max_iterations, cfg.lr_start, cfg.lr_min,
                   np.random.default_rng([cfg.seed, 1]), cfg.clip_norm)

    @property
    def num_nodes(self):
        return self.attributes.shape[0]

    @property
    def learning_rate(self):
        """max(lr_min, lr_start * (1 - iteration / max_iterations))."""
        if not self.max_iterations:
            return self.lr_start
        return max(self.lr_min, self.lr_start * (1.0 - self.iteration / self.max_iterations))

    def support(self, node):
        """Attribute indices and values of a node."""
        start, end = self._indptr[node], self._indptr[node + 1]
        return self._indices[start:end], self._data[start:end]


@dataclass(frozen=True, eq=False)
class ObjectiveGradient:
    """Gradient of the partial objective.

    Attributes:
        input_update: dO/dW^in on the center's attribute rows
        output_rows: Distinct W^out rows touched
        output_values: dO/dW^out for those rows, shape (len(output_rows), d)
    """

    input_update: SparseRowUpdate
    output_rows: np.ndarray
    output_values: np.ndarray


def _targets(context, negatives):
    return np.concatenate(([int(context)], np.asarray(negatives, dtype=np.int64).ravel()))


def _forward(state, center, targets):
    support, values = state.support(center)
    h = values @ state.model.weights[support]
    phi = state.model.activate(h)
    out_rows = state.output_weights[targets]
    scores = out_rows @ phi
    return support, values, h, phi, out_rows, scores


def _loss(scores):
    # -log sigma(s_0) - sum_k log sigma(-s_k)
    return float(np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum())


def _ascent(state, h, phi, out_rows, scores):
    """Coefficients g and dL/dh of the log-likelihood (the negated objective)."""
    g = -expit(scores)
    g[0] += 1.0
    grad_h = state.model.backprop(h, phi, g @ out_rows)
    return g, grad_h


def partial_objective(state, center, context, negatives):
    """Negative-sampled loss of one (center, context) pair.

    O = -log sigma(Phi_i . w_j) - sum_k log sigma(-Phi_i . w_{N_k})

    Returns:
        float: Finite nonnegative loss
    """
    _, _, _, _, _, scores = _forward(state, center, _targets(context, negatives))
    return _loss(scores)


def partial_gradient(state, center, context, negatives):
    """Analytic gradient of partial_objective with respect to W^in and W^out.

    Colliding negatives accumulate on their shared W^out row.

    Returns:
        ObjectiveGradient: The gradient
    """
    targets = _targets(context, negatives)
    support, values, h, phi, out_rows, scores = _forward(state, center, targets)
    g, grad_h = _ascent(state, h, phi, out_rows, scores)

    rows, inverse = np.unique(targets, return_inverse=True)
    output_values = np.zeros((len(rows), len(phi)))
    np.add.at(output_values, inverse, -np.outer(g, phi))
    return ObjectiveGradient(SparseRowUpdate(support, -np.outer(values, grad_h)), rows, output_values)


def sgd_step(state, center, context, negatives):
    """One SGD update w <- w - eta * dO/dw on the pair's parameters.

    Touches the center's attribute rows of W^in and the K + 1 target rows of W^out.

    Returns:
        float: The partial objective before the update

    Raises:
        NumericDivergenceError: If the loss or gradient is not finite
    """
    return _step(state, center, _targets(context, negatives))


def _step(state, center, targets, distinct=False):
    """sgd_step on a prebuilt target row; distinct promises no repeated targets."""
    support, values, h, phi, out_rows, scores = _forward(state, center, targets)
    loss = _loss(scores)
    g, grad_h = _ascent(state, h, phi, out_rows, scores)

    if not (math.isfinite(loss) and np.isfinite(grad_h).all()):
        raise NumericDivergenceError(
            f"non-finite loss or gradient at iteration {state.iteration}; "
            f"lower the initial learning rate (currently {state.lr_start:g})")

    if state.clip_norm is not None:
        norm = math.sqrt(float(g @ g) * float(phi @ phi) + float(values @ values) * float(grad_h @ grad_h))
        if norm > state.clip_norm:
            factor = state.clip_norm / norm
            g = g * factor
            grad_h = grad_h * factor

    lr = state.learning_rate
    if distinct:
        state.output_weights[targets] += lr * np.outer(g, phi)
    else:
        np.add.at(state.output_weights, targets, lr * np.outer(g, phi))
    state.model.weights[support] += lr * np.outer(values, grad_h)
    state.iteration += 1
    return loss


class Trainer:
    """Runs SGD over sampled (center, context, negatives) triples.

    Records (iteration, learning rate, running loss) every log_every steps
    and aborts when the running loss diverges.
    """

    def __init__(self, graph, corpus, cfg):
        """Initialize trainer.

        Args:
            graph: AttributedGraph whose attributes feed the mapping
            corpus: ContextCorpus over the same nodes
            cfg: TrainConfig

        Raises:
            SamplingError: If the corpus is empty
            ConfigError: If graph and corpus disagree on the node count
        """
        if corpus.num_pairs == 0:
            raise SamplingError("cannot train on an empty corpus")
        if corpus.num_nodes != graph.num_nodes:
            raise ConfigError(
                f"corpus covers {corpus.num_nodes} nodes but the graph has {graph.num_nodes}")

        self.cfg = cfg
        self.corpus = corpus
        self.max_iterations = (cfg.max_iterations if cfg.max_iterations is not None
                               else default_iterations(corpus))
        self.state = TrainerState.initialize(graph.attributes, cfg, self.max_iterations)
        self.noise = NoiseDistribution.from_corpus(corpus, cfg.noise_alpha)
        self.loss_history = []
        self._initial_loss = None

    def _record(self, running_loss):
        state = self.state
        self.loss_history.append((state.iteration, state.learning_rate, running_loss))
        logger.info("iteration %d/%d  lr %.6g  loss %.6f",
                    state.iteration, self.max_iterations, state.learning_rate, running_loss)

        if self._initial_loss is None and math.isfinite(running_loss):
            self._initial_loss = running_loss
            return
        if not math.isfinite(running_loss) or (
                running_loss > self.cfg.divergence_factor * self._initial_loss):
            start = "n/a" if self._initial_loss is None else f"{self._initial_loss:.4g}"
            raise NumericDivergenceError(
                f"running loss {running_loss:.4g} diverged from {start} "
                f"at iteration {state.iteration}; lower the initial learning rate "
                f"(currently {self.cfg.lr_start:g}, e.g. try {self.cfg.lr_start / 5:g})")

    def _run_worker(self, stream, iterations, report):
        state = self.state
        window_sum, window_count = 0.0, 0
        for centers, contexts, negatives in stream.chunks(iterations):
            targets = np.column_stack((contexts, negatives)).astype(np.int64)
            ordered = np.sort(targets, axis=1)
            distinct = (ordered[:, 1:] != ordered[:, :-1]).all(axis=1)
            for center, row, unique in zip(centers.tolist(), targets, distinct.tolist()):
                window_sum += _step(state, center, row, unique)
                window_count += 1
                if report and window_count == self.cfg.log_every:
                    self._record(window_sum / window_count)
                    window_sum, window_count = 0.0, 0
        if report and window_count:
            self._record(window_sum / window_count)

    def run(self):
        """Train for max_iterations steps.

        Returns:
            MappingModel: The trained mapping
        """
        cfg = self.cfg
        logger.info("Training %s mapping, d=%d, K=%d for %d iterations on %d threads",
                    cfg.mapping.value, cfg.dim, cfg.negatives, self.max_iterations, cfg.threads)

        if cfg.threads == 1:
            stream = SampleStream(self.corpus, self.noise, cfg.negatives, self.state.rng,
                                  cfg.chunk_size)
            self._run_worker(stream, self.max_iterations, report=True)
            return self.state.model

        # Lock-free: workers read and write the shared weights without synchronization
        seeds = np.random.SeedSequence([cfg.seed, 2]).spawn(cfg.threads)
        base, extra = divmod(self.max_iterations, cfg.threads)
        shares = [base + (worker < extra) for worker in range(cfg.threads)]
        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            futures = [
                executor.submit(self._run_worker,
                                SampleStream(self.corpus, self.noise, cfg.negatives,
                                             np.random.default_rng(seed), cfg.chunk_size),
                                share, worker == 0)
                for worker, (seed, share) in enumerate(zip(seeds, shares))
            ]
            for future in futures:
                future.result()
        return self.state.model

    def save_output_weights(self, path):
        """Persist W^out (|V| x d) as a .npy file for warm restarts."""
        np.save(path, self.state.output_weights)


def train(graph, corpus, cfg):
    """Train a mapping on a graph's attributes and its co-occurrence corpus.

    Returns:
        MappingModel: The trained mapping (W^out is discarded)
    """
    return Trainer(graph, corpus, cfg).run()
