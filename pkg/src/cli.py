"""Command-line front end: reproducible walk / train / infer / eval pipelines."""

import argparse
import dataclasses
import hashlib
import itertools
import json
import logging
import os
import sys
import traceback
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import scipy.sparse as sp
from sklearn.preprocessing import normalize

from . import __version__
from .errors import Attri2vecError, ConfigError, IngestError
from .evalkit import (EdgeOperator, attribute_baseline, classify,
                      classify_out_of_sample, cluster, format_reports, link_predict,
                      write_reports_csv)
from .graph import (IngestOptions, attribute_count_histogram, degree_histogram, load_attributes,
                    load_edge_pairs, load_graph, load_labels, save_attributes, save_edge_pairs,
                    split_out_of_sample, write_histogram_csv)
from .inference import EmbeddingSet, infer, load_embeddings, save_embeddings
from .mapping import KernelNormalization, MappingKind
from .model_io import load_model, save_model
from .synthetic import make_planted_graph
from .trainer import TrainConfig, Trainer
from .visualizer import Visualizer
from .walker import ContextCorpus, WalkConfig, build_corpus, dump_walks, generate_walks

logger = logging.getLogger(__name__)

THREADS_ENV = 'ATTRI2VEC_THREADS'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# Argument destinations naming files a command reads
INPUT_DESTS = ('edges', 'attributes', 'labels', 'test_labels', 'test_edges', 'corpus_in',
               'model_in', 'embeddings', 'attribute_features', 'negatives', 'sweep_file')


def default_threads():
    """Thread count from ATTRI2VEC_THREADS, 1 when unset.

    Raises:
        ConfigError: If the variable is not a positive integer
    """
    value = os.environ.get(THREADS_ENV, '1')
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from None
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return threads


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one command invocation.

    Attributes:
        command: Subcommand name
        seed: Base seed
        threads: Worker threads
        ingest: Graph ingestion options, when the command reads a graph
        walk: Random walk settings, when the command walks
        train: Training hyperparameters, when the command trains
        inputs: Files the command reads
        options: Every other parsed flag
    """

    command: str
    seed: int = 0
    threads: int = 1
    ingest: Optional[IngestOptions] = None
    walk: Optional[WalkConfig] = None
    train: Optional[TrainConfig] = None
    inputs: tuple = ()
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")

    @classmethod
    def from_args(cls, args):
        """Build and validate every config object the command needs."""
        ingest = walk = train = None
        if hasattr(args, 'keep_ratio'):
            ingest = IngestOptions(normalize=args.normalize, num_features=args.num_features,
                                   keep_dimension_ratio=args.keep_ratio, seed=args.seed)
        if hasattr(args, 'walk_length'):
            walk = WalkConfig(walk_length=args.walk_length, walks_per_node=args.walks_per_node,
                              window=args.window, seed=args.seed)
        if hasattr(args, 'mapping'):
            train = TrainConfig(
                mapping=args.mapping, dim=args.dim, negatives=args.negatives, lr_start=args.lr,
                lr_min=args.lr_min, max_iterations=args.iterations, noise_alpha=args.alpha,
                seed=args.seed, threads=args.threads, clip_norm=args.clip_norm,
                kernel_normalization=args.kernel_normalization, log_every=args.log_every,
                divergence_factor=args.divergence_factor)

        inputs = []
        for dest in INPUT_DESTS:
            value = getattr(args, dest, None)
            if value is not None:
                inputs.extend(value if isinstance(value, list) else [value])

        options = {key: value for key, value in vars(args).items()
                   if key not in ('handler', 'command') and not callable(value)}
        return cls(args.command, args.seed, args.threads, ingest, walk, train,
                   tuple(str(p) for p in inputs), options)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class CommandResult:
    """Files written and reports produced by a command."""

    outputs: list = field(default_factory=list)
    reports: list = field(default_factory=list)


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def file_digest(path):
    """SHA-256 of a file's contents."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _digests(paths):
    return {str(p): file_digest(p) for p in paths if Path(p).is_file()}


def write_manifest(path, argv, run_config, result):
    """Record what is needed to replay a run exactly."""
    manifest = {
        'version': __version__,
        'created': datetime.now(timezone.utc).isoformat(),
        'argv': list(argv),
        'config': run_config.to_dict(),
        'seeds': {
            'seed': run_config.seed,
            'threads': run_config.threads,
            'deterministic': run_config.threads == 1,
        },
        'inputs': _digests(run_config.inputs),
        'outputs': _digests(result.outputs),
    }
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, default=str)
    logger.info("Wrote manifest %s", path)
    return manifest


def _add_common(parser):
    parser.add_argument('--seed', type=int, default=0, help='Base random seed (default: 0)')
    parser.add_argument('--threads', type=int, default=None,
                        help=f'Worker threads (default: ${THREADS_ENV} or 1)')
    parser.add_argument('--manifest', default=None,
                        help='Manifest path (default: <first output>.manifest.json)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')


def _add_graph_inputs(parser, labels=True):
    parser.add_argument('--edges', required=True, help='Edge list file')
    parser.add_argument('--attributes', required=True, help='Sparse attribute file')
    if labels:
        parser.add_argument('--labels', default=None, help='Node label file')
    parser.add_argument('--normalize', action='store_true',
                        help='L2-normalize attribute vectors')
    parser.add_argument('--num-features', type=int, default=None,
                        help='Attribute dimension m when the file has no header')
    parser.add_argument('--keep-ratio', type=float, default=1.0,
                        help='Fraction of attribute dimensions kept (default: 1.0)')


def _add_walk_options(parser):
    parser.add_argument('--walk-length', type=int, default=100, help='Walk length l (default: 100)')
    parser.add_argument('--walks-per-node', type=int, default=40,
                        help='Walks per node gamma (default: 40)')
    parser.add_argument('--window', type=int, default=10, help='Window size t (default: 10)')


def _add_train_options(parser):
    parser.add_argument('--mapping', default=MappingKind.SIGMOID.value,
                        choices=[kind.value for kind in MappingKind],
                        help='Attribute mapping (default: sigmoid)')
    parser.add_argument('--dim', type=int, default=128, help='Embedding dimension d (default: 128)')
    parser.add_argument('--negatives', type=int, default=5, help='Negative samples K (default: 5)')
    parser.add_argument('--lr', type=float, default=0.025,
                        help='Initial learning rate (default: 0.025)')
    parser.add_argument('--lr-min', type=float, default=2.5e-6,
                        help='Learning rate floor (default: 2.5e-6)')
    parser.add_argument('--iterations', type=int, default=None,
                        help='SGD steps (default: min(1e8, 200 * total pairs))')
    parser.add_argument('--alpha', type=float, default=0.75,
                        help='Noise distribution exponent (default: 0.75)')
    parser.add_argument('--clip-norm', type=float, default=None,
                        help='Per-step gradient norm ceiling (default: off)')
    parser.add_argument('--kernel-normalization', default=KernelNormalization.ATTRIBUTE.value,
                        choices=[norm.value for norm in KernelNormalization],
                        help='Kernel feature scale 1/sqrt(m) or 1/sqrt(d/2) (default: attribute)')
    parser.add_argument('--log-every', type=int, default=100_000,
                        help='Steps per progress line (default: 100000)')
    parser.add_argument('--divergence-factor', type=float, default=10.0,
                        help='Abort when the loss exceeds this multiple of its start (default: 10)')


def build_parser():
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog='attri2vec',
        description='Attributed network embedding through attribute mappings',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py synth --out-prefix data/toy
  python main.py train --edges data/toy.edges --attributes data/toy.attr --model toy.model --embeddings toy.emb
  python main.py infer --model toy.model --attributes new.attr --embeddings new.emb
  python main.py eval classify --embeddings toy.emb --labels data/toy.labels
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    summary = commands.add_parser('summary', help='Graph statistics and distributions')
    _add_graph_inputs(summary)
    summary.add_argument('--degree-csv', default=None, help='Degree histogram CSV')
    summary.add_argument('--attribute-csv', default=None, help='Attribute count histogram CSV')
    summary.add_argument('--plot-dir', default=None, help='Directory for distribution plots')
    _add_common(summary)
    summary.set_defaults(handler=cmd_summary)

    synth = commands.add_parser('synth', help='Write a planted-partition attributed graph')
    synth.add_argument('--out-prefix', required=True, help='Writes PREFIX.edges/.attr/.labels')
    synth.add_argument('--blocks', type=int, nargs='+', default=[100, 100], help='Block sizes')
    synth.add_argument('--p-in', type=float, default=0.1, help='Within-block edge probability')
    synth.add_argument('--p-out', type=float, default=0.01, help='Cross-block edge probability')
    synth.add_argument('--num-features', type=int, default=50, help='Attribute dimension')
    synth.add_argument('--informative', type=int, default=5, help='Indicative dimensions per block')
    synth.add_argument('--signal-prob', type=float, default=0.6,
                       help='Probability an indicative dimension is on')
    synth.add_argument('--noise-density', type=float, default=0.05,
                       help='Probability any dimension is on at random')
    _add_common(synth)
    synth.set_defaults(handler=cmd_synth)

    split = commands.add_parser('split', help='Hold out nodes for out-of-sample evaluation')
    _add_graph_inputs(split)
    split.add_argument('--out-prefix', required=True,
                       help='Writes PREFIX.train.{edges,attr,labels} and PREFIX.test.{edges,attr,labels}')
    split.add_argument('--holdout-ratio', type=float, default=0.2,
                       help='Fraction of nodes held out (default: 0.2)')
    _add_common(split)
    split.set_defaults(handler=cmd_split)

    walk = commands.add_parser('walk', help='Random walks to a co-occurrence corpus')
    _add_graph_inputs(walk, labels=False)
    _add_walk_options(walk)
    walk.add_argument('--corpus', dest='corpus_out', required=True, help='Corpus output file')
    walk.add_argument('--walks', dest='walks_out', default=None, help='Also write walks as text')
    _add_common(walk)
    walk.set_defaults(handler=cmd_walk)

    train = commands.add_parser('train', help='Learn the attribute mapping')
    _add_graph_inputs(train, labels=False)
    _add_walk_options(train)
    _add_train_options(train)
    train.add_argument('--corpus', dest='corpus_in', default=None,
                       help='Prebuilt corpus (default: walk the graph)')
    train.add_argument('--model', dest='model_out', required=True, help='Model output file')
    train.add_argument('--embeddings', dest='embeddings_out', default=None,
                       help='Embeddings of the training nodes')
    train.add_argument('--binary', action='store_true', help='Binary embedding format')
    train.add_argument('--output-weights', default=None, help='Save W^out as .npy')
    train.add_argument('--loss-csv', default=None, help='Loss history CSV')
    train.add_argument('--loss-plot', default=None, help='Loss curve image')
    _add_common(train)
    train.set_defaults(handler=cmd_train)

    infer_cmd = commands.add_parser('infer', help='Embed nodes from their attributes')
    infer_cmd.add_argument('--model', dest='model_in', required=True, help='Trained model file')
    infer_cmd.add_argument('--attributes', required=True, help='Attribute file of the nodes')
    infer_cmd.add_argument('--normalize', action='store_true',
                           help='L2-normalize attributes (use when training did)')
    infer_cmd.add_argument('--embeddings', dest='embeddings_out', required=True,
                           help='Embedding output file')
    infer_cmd.add_argument('--binary', action='store_true', help='Binary embedding format')
    _add_common(infer_cmd)
    infer_cmd.set_defaults(handler=cmd_infer)

    evaluate = commands.add_parser('eval', help='Classification, clustering or link prediction')
    evaluate.add_argument('task', choices=['classify', 'cluster', 'linkpred'])
    features = evaluate.add_mutually_exclusive_group(required=True)
    features.add_argument('--embeddings', nargs='+', help='Embedding files (merged)')
    features.add_argument('--attribute-features', nargs='+',
                          help='Use raw attribute files as features instead of embeddings')
    evaluate.add_argument('--binary', action='store_true', help='Binary embedding format')
    evaluate.add_argument('--baseline-dim', type=int, default=None,
                          help='Reduce attribute features by truncated SVD')
    evaluate.add_argument('--normalize', action='store_true',
                          help='L2-normalize attribute features')
    evaluate.add_argument('--labels', default=None, help='Label file (classify, cluster)')
    evaluate.add_argument('--test-labels', default=None,
                          help='Labels of out-of-sample nodes; classify them instead of a random split')
    evaluate.add_argument('--train-ratio', type=float, default=0.5,
                          help='Training fraction for classification (default: 0.5)')
    evaluate.add_argument('--repeats', type=int, default=None,
                          help='Repeats (default: 10 for classify, 20 for cluster)')
    evaluate.add_argument('--classifier', default='logistic', choices=['logistic', 'svm'])
    evaluate.add_argument('--k', type=int, default=None, help='Clusters (default: classes)')
    evaluate.add_argument('--nmi-average', default='arithmetic',
                          choices=['arithmetic', 'geometric'])
    evaluate.add_argument('--edges', default=None, help='Training graph edges (linkpred)')
    evaluate.add_argument('--attributes', default=None, help='Training graph attributes (linkpred)')
    evaluate.add_argument('--test-edges', default=None, help='Held-out edges (linkpred)')
    evaluate.add_argument('--operator', default=EdgeOperator.WEIGHTED_L2.value,
                          choices=[op.value for op in EdgeOperator])
    evaluate.add_argument('--neg-ratio', type=int, default=1, help='Negatives per positive edge')
    evaluate.add_argument('--negatives', default=None,
                          help='Reuse the sampled non-edges of an earlier report')
    evaluate.add_argument('--report', default=None, help='JSON report output')
    evaluate.add_argument('--csv', default=None, help='CSV report output')
    _add_common(evaluate)
    evaluate.set_defaults(handler=cmd_eval)

    sweep = commands.add_parser('sweep', help='Parameter sensitivity over a grid')
    sweep.add_argument('sweep_file', help='JSON file with "base", "grid" and "task"')
    sweep.add_argument('--out-dir', required=True, help='Directory for per-run artifacts')
    _add_common(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    replay = commands.add_parser('replay', help='Re-run the command recorded in a manifest')
    replay.add_argument('manifest_file', help='Manifest written by an earlier run')
    replay.add_argument('--verify', action='store_true',
                        help='Fail unless the outputs match the recorded digests')
    _add_common(replay)
    replay.set_defaults(handler=cmd_replay)

    return parser


def parse_arguments(argv=None):
    """Parse command line arguments, filling --threads from the environment."""
    args = build_parser().parse_args(argv)
    if args.threads is None:
        args.threads = default_threads()
    return args


def _load_graph(args):
    options = IngestOptions(normalize=args.normalize, num_features=args.num_features,
                            keep_dimension_ratio=args.keep_ratio, seed=args.seed)
    return load_graph(args.edges, args.attributes, getattr(args, 'labels', None), options)


def cmd_summary(args):
    """Print graph statistics; optionally export and plot the distributions."""
    graph = _load_graph(args)
    stats = graph.summary()
    print("Graph Summary:")
    print(f"  Nodes: {stats['num_nodes']}")
    print(f"  Edges: {stats['num_edges']}")
    print(f"  Attribute Dimension: {stats['num_features']}")
    print(f"  Nonzero Attributes: {stats['nnz']}")
    print(f"  Classes: {stats['num_classes']}")
    print(f"  Isolated Nodes: {stats['isolated_nodes']}")

    result = CommandResult()
    if args.degree_csv:
        write_histogram_csv(degree_histogram(graph), args.degree_csv, 'degree')
        result.outputs.append(args.degree_csv)
    if args.attribute_csv:
        write_histogram_csv(attribute_count_histogram(graph), args.attribute_csv, 'attributes')
        result.outputs.append(args.attribute_csv)
    if args.plot_dir:
        Path(args.plot_dir).mkdir(parents=True, exist_ok=True)
        visualizer = Visualizer()
        for path in (visualizer.plot_degree_distribution(graph, Path(args.plot_dir) / 'degrees.png'),
                     visualizer.plot_attribute_distribution(graph, Path(args.plot_dir) / 'attributes.png')):
            if path is not None:
                result.outputs.append(str(path))
    return result


def cmd_synth(args):
    graph = make_planted_graph(args.blocks, args.p_in, args.p_out, args.num_features,
                               args.informative, args.signal_prob, args.noise_density, args.seed)
    paths = [f"{args.out_prefix}.edges", f"{args.out_prefix}.attr", f"{args.out_prefix}.labels"]
    graph.save(*paths)
    print(f"Wrote {graph.num_nodes} nodes, {graph.num_edges} edges to {args.out_prefix}.*")
    return CommandResult(outputs=paths)


def _write_label_lines(path, names, classes, class_names):
    with open(path, 'w', encoding='utf-8') as f:
        for name, c in zip(names, classes):
            if c >= 0:
                f.write(f"{name}\t{class_names[c]}\n")


def cmd_split(args):
    """Write in-sample graph files plus held-out attributes, edges and labels."""
    graph = _load_graph(args)
    split = split_out_of_sample(graph, args.holdout_ratio, args.seed)
    prefix = args.out_prefix
    outputs = [f"{prefix}.train.edges", f"{prefix}.train.attr"]
    train_labels = f"{prefix}.train.labels" if graph.labels is not None else None
    split.in_sample.save(outputs[0], outputs[1], train_labels)

    save_attributes(f"{prefix}.test.attr", split.out_names, split.out_attributes)
    save_edge_pairs(f"{prefix}.test.edges", split.test_edges)
    outputs += [f"{prefix}.test.attr", f"{prefix}.test.edges"]
    if graph.labels is not None:
        _write_label_lines(f"{prefix}.test.labels", split.out_names, split.out_labels,
                           graph.labels.class_names)
        outputs += [train_labels, f"{prefix}.test.labels"]

    print(f"In-sample: {split.in_sample.num_nodes} nodes, {split.in_sample.num_edges} edges")
    print(f"Held out: {len(split.out_names)} nodes, {len(split.test_edges)} edges")
    return CommandResult(outputs=outputs)


def cmd_walk(args):
    run_config = RunConfig.from_args(args)
    graph = _load_graph(args)
    corpus = build_corpus(graph, run_config.walk, args.threads)
    corpus.save(args.corpus_out)
    result = CommandResult(outputs=[args.corpus_out])
    if args.walks_out:
        dump_walks(generate_walks(graph, run_config.walk, args.threads), graph, args.walks_out)
        result.outputs.append(args.walks_out)
    print(f"Corpus: {corpus.num_pairs} distinct pairs, {corpus.total_pairs} total")
    return result


def cmd_train(args):
    """Walk (or load a corpus), train, and write the model and embeddings.

    Embeddings are computed from the model as stored on disk, so they match
    what `infer` produces for the same nodes.
    """
    run_config = RunConfig.from_args(args)
    graph = _load_graph(args)
    if args.corpus_in:
        corpus = ContextCorpus.load(args.corpus_in)
    else:
        corpus = build_corpus(graph, run_config.walk, args.threads)

    trainer = Trainer(graph, corpus, run_config.train)
    model = trainer.run()
    metadata = {
        'train': dataclasses.asdict(run_config.train),
        'walk': dataclasses.asdict(run_config.walk),
        'iterations': trainer.max_iterations,
        'final_loss': trainer.loss_history[-1][2] if trainer.loss_history else None,
        'num_nodes': graph.num_nodes,
    }
    save_model(model, args.model_out, metadata)
    result = CommandResult(outputs=[args.model_out, f"{args.model_out}.json"])

    if args.embeddings_out:
        stored = load_model(args.model_out)
        save_embeddings(EmbeddingSet.from_graph(stored, graph), args.embeddings_out, args.binary)
        result.outputs.append(args.embeddings_out)
    if args.output_weights:
        trainer.save_output_weights(args.output_weights)
        result.outputs.append(args.output_weights)

    visualizer = Visualizer()
    if args.loss_csv:
        visualizer.export_loss_history(trainer.loss_history, args.loss_csv)
        result.outputs.append(args.loss_csv)
    if args.loss_plot and visualizer.plot_loss_curve(trainer.loss_history, args.loss_plot):
        result.outputs.append(args.loss_plot)

    stats = visualizer.get_summary_stats(trainer.loss_history)
    print(f"Trained {model.kind.value} mapping: m={model.num_features}, d={model.dim}, "
          f"{trainer.max_iterations} iterations")
    if stats:
        print(f"  Loss: {stats['first_loss']:.4f} -> {stats['final_loss']:.4f}")
    return result


def cmd_infer(args):
    model = load_model(args.model_in)
    names, attributes = load_attributes(args.attributes, model.num_features)
    if args.normalize:
        attributes = normalize(attributes, norm='l2', axis=1)
    embeddings = infer(model, attributes, names)
    save_embeddings(embeddings, args.embeddings_out, args.binary)
    print(f"Embedded {len(embeddings)} nodes (d={embeddings.dim})")
    return CommandResult(outputs=[args.embeddings_out])


def _features(args):
    """Embeddings to evaluate: merged embedding files or the attribute baseline."""
    if args.embeddings:
        merged = load_embeddings(args.embeddings[0], args.binary)
        for path in args.embeddings[1:]:
            merged = merged.merge(load_embeddings(path, args.binary))
        return merged

    names, attributes = load_attributes(args.attribute_features[0])
    blocks = [attributes]
    for path in args.attribute_features[1:]:
        more_names, more = load_attributes(path, attributes.shape[1])
        names += more_names
        blocks.append(more)
    attributes = sp.vstack(blocks).tocsr()
    if args.normalize:
        attributes = normalize(attributes, norm='l2', axis=1)
    return attribute_baseline(names, attributes, args.baseline_dim, args.seed)


def _label_tokens(path, ids):
    """External id -> class token for every labeled node in a label file."""
    labels = load_labels(path, {name: i for i, name in enumerate(ids)})
    return {ids[i]: labels.class_names[labels.classes[i]] for i in labels.labeled_nodes()}


def _reused_negatives(path):
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    try:
        return data['reports'][0]['details']['negatives']
    except (KeyError, IndexError, TypeError):
        raise IngestError("report holds no sampled negatives", path) from None


def cmd_eval(args):
    """Run one evaluation protocol and print its report table."""
    embeddings = _features(args)
    if args.task in ('classify', 'cluster') and not args.labels:
        raise ConfigError(f"eval {args.task} requires --labels")

    if args.task == 'classify':
        labels = _label_tokens(args.labels, embeddings.ids)
        repeats = args.repeats or 10
        if args.test_labels:
            report = classify_out_of_sample(embeddings, labels, embeddings,
                                            _label_tokens(args.test_labels, embeddings.ids),
                                            args.train_ratio, repeats, args.seed,
                                            args.classifier, args.threads)
        else:
            report = classify(embeddings, labels, args.train_ratio, repeats, args.seed,
                              args.classifier, args.threads)
    elif args.task == 'cluster':
        report = cluster(embeddings, _label_tokens(args.labels, embeddings.ids), args.k,
                         args.repeats or 20, args.seed, args.nmi_average, args.threads)
    else:
        if not (args.edges and args.attributes and args.test_edges):
            raise ConfigError("eval linkpred requires --edges, --attributes and --test-edges")
        train_graph = load_graph(args.edges, args.attributes)
        negatives = _reused_negatives(args.negatives) if args.negatives else None
        report = link_predict(train_graph, load_edge_pairs(args.test_edges), embeddings,
                              args.operator, args.neg_ratio, args.seed, args.classifier, negatives)

    print(format_reports([report]))
    result = CommandResult(reports=[report])
    if args.report:
        with open(args.report, 'w', encoding='utf-8') as f:
            json.dump({'reports': [report.to_dict()]}, f, indent=2, default=str)
        result.outputs.append(args.report)
    if args.csv:
        write_reports_csv([report], args.csv)
        result.outputs.append(args.csv)
    return result


def _load_sweep(path):
    with open(path, 'r', encoding='utf-8') as f:
        try:
            sweep = json.load(f)
        except json.JSONDecodeError as e:
            raise IngestError(f"invalid sweep file: {e}", path) from None
    if not isinstance(sweep, dict):
        raise ConfigError("sweep file must hold a JSON object")
    base, grid, task = sweep.get('base'), sweep.get('grid'), sweep.get('task')
    if not base or base[0] != 'train':
        raise ConfigError("sweep 'base' must be a train command line")
    if not grid or not all(isinstance(values, list) and values for values in grid.values()):
        raise ConfigError("sweep 'grid' must map flags to non-empty value lists")
    if not task or task[0] != 'eval':
        raise ConfigError("sweep 'task' must be an eval command line")
    return base, grid, task


def cmd_sweep(args):
    """Train and evaluate once per grid point; tabulate and plot the metrics."""
    base, grid, task = _load_sweep(args.sweep_file)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    flags = list(grid)
    result = CommandResult()
    for run, values in enumerate(itertools.product(*(grid[flag] for flag in flags))):
        run_dir = out_dir / f"run{run:03d}"
        run_dir.mkdir(exist_ok=True)
        settings = [token for flag, value in zip(flags, values) for token in (flag, str(value))]
        embeddings = str(run_dir / 'embeddings.txt')
        logger.info("Sweep run %d: %s", run, ' '.join(settings))

        run_command(base + settings + ['--model', str(run_dir / 'model.bin'),
                                       '--embeddings', embeddings])
        evaluation = run_command(task + ['--embeddings', embeddings,
                                         '--report', str(run_dir / 'report.json')])
        label = ' '.join(f"{flag.lstrip('-')}={value}" for flag, value in zip(flags, values))
        result.reports += [dataclasses.replace(report, split=label)
                           for report in evaluation.reports]

    print(format_reports(result.reports))
    table = out_dir / 'sweep.csv'
    write_reports_csv(result.reports, table)
    result.outputs.append(str(table))

    if len(flags) == 1 and result.reports:
        metrics = list(result.reports[0].metrics)
        scores = {name: [report.metrics[name] for report in result.reports] for name in metrics}
        plot = Visualizer().plot_sensitivity(flags[0].lstrip('-'), grid[flags[0]], scores,
                                             out_dir / 'sensitivity.png')
        if plot is not None:
            result.outputs.append(str(plot))
    return result


def _has_option(argv, option):
    return any(token == option or token.startswith(f"{option}=") for token in argv)


def _pinned_argv(manifest):
    """The recorded argv with the recorded seed and thread count made explicit."""
    argv = list(manifest['argv'])
    seeds = manifest.get('seeds', {})
    for option, key in (('--seed', 'seed'), ('--threads', 'threads')):
        if key in seeds and not _has_option(argv, option):
            argv += [option, str(seeds[key])]
    return argv


def cmd_replay(args):
    """Re-execute a manifest's argv and optionally compare output digests."""
    with open(args.manifest_file, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    for path, digest in manifest.get('inputs', {}).items():
        if not Path(path).is_file():
            raise IngestError("recorded input is missing", path)
        if file_digest(path) != digest:
            logger.warning("Input %s changed since the recorded run", path)

    result = run_command(_pinned_argv(manifest))
    if args.verify:
        recorded = manifest.get('outputs', {})
        changed = [path for path, digest in recorded.items()
                   if not Path(path).is_file() or file_digest(path) != digest]
        if changed:
            raise ConfigError(f"replay outputs differ from the manifest: {', '.join(changed)}")
        print(f"Replay reproduced {len(recorded)} outputs exactly")
    return result


def _manifest_path(args, result):
    if args.manifest:
        return args.manifest
    if result.outputs:
        return f"{result.outputs[0]}.manifest.json"
    return None


def run_command(argv, args=None):
    """Parse, execute and record one command.

    Args:
        argv: Command line without the program name
        args: Already parsed argv, if available

    Returns:
        CommandResult: The command's outputs and reports
    """
    args = args if args is not None else parse_arguments(argv)
    run_config = RunConfig.from_args(args)
    result = args.handler(args)
    if args.command != 'replay':
        path = _manifest_path(args, result)
        if path is not None:
            write_manifest(path, argv, run_config, result)
    return result


def main(argv=None):
    """Main function.

    Returns:
        int: Process exit status
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_arguments(argv)
    except Attri2vecError as e:
        print(f"Error ({e.category}): {e}", file=sys.stderr)
        return e.exit_code
    configure_logging(args.verbose, args.quiet)

    try:
        run_command(argv, args)
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return 130
    except Attri2vecError as e:
        print(f"Error ({e.category}): {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return e.exit_code
    except OSError as e:
        print(f"Error (io): {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return IngestError.exit_code
    return 0
