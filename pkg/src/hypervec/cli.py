"""Batch command-line frontend.

Every subcommand is a pure function of its input files, flags, and seed;
outputs are written to a temp file and renamed into place so no partial
files survive an error. Exit codes: 0 success, 1 usage error, 2 data
error. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import io as hio
from .coarsening import AssignPolicy, POLICY_KINDS, coarsen_hierarchy
from .core import DataError, build_hypergraph, build_star_expansion
from .embedding import (WalkConfig, embed_star_graph, external_embed,
                        set_thread_count)
from .evaluate import (evaluate_classification, evaluate_hyperedge_prediction,
                       split_hyperedge_holdout)
from .pipeline import PipelineConfig, PipelineReport, run_pipeline
from .refine import RefineConfig, refine


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: {message}")


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _add_input_flags(p, name="--input"):
    p.add_argument(name, required=True, help="hypergraph file")
    p.add_argument("--format", choices=("hmetis", "edgelist"), default="hmetis",
                   help="hypergraph file format (default hmetis)")
    p.add_argument("--features", help="node feature file (id v1 ... vk)")


def _add_walk_flags(p):
    p.add_argument("--dim", type=_positive_int, default=128, help="embedding dimension")
    p.add_argument("--walks", type=_positive_int, default=10, help="walks per vertex")
    p.add_argument("--walk-length", type=_positive_int, default=80)
    p.add_argument("--window", type=_positive_int, default=10)
    p.add_argument("--p", type=float, default=4.0, help="return parameter")
    p.add_argument("--q", type=float, default=1.0, help="in-out parameter")
    p.add_argument("--negative", type=_positive_int, default=5, help="negative samples")
    p.add_argument("--epochs", type=_positive_int, default=1)
    p.add_argument("--learning-rate", type=float, default=0.025)
    p.add_argument("--embed-workers", type=_positive_int, default=1,
                   help="training workers; >1 trades reproducibility for speed")
    p.add_argument("--external", metavar="CMD",
                   help="external embedder command with {input} and {output}")


def _add_refine_flags(p):
    p.add_argument("--omega", type=float, default=0.5, help="blend factor")
    p.add_argument("--refine-iters", type=_nonneg_int, default=80,
                   help="refinement iterations")
    p.add_argument("--epsilon", type=float, default=None,
                   help="early-stop threshold on the largest update norm")


def _add_common_flags(p):
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="parallelism cap (default: HYPERVEC_THREADS or all cores)")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> _Parser:
    parser = _Parser(prog="hypervec",
                     description="Multi-level hypergraph embedding toolkit")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND",
                                parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("coarsen",
                       help="build a coarsening hierarchy, write the coarsest level")
    _add_input_flags(p)
    p.add_argument("--levels", type=_nonneg_int, default=1)
    p.add_argument("--min-size", type=_nonneg_int, default=0)
    p.add_argument("--policy", choices=POLICY_KINDS, default=None)
    p.add_argument("--out", required=True, help="coarsest hypergraph (hmetis)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("star",
                       help="write the bipartite star expansion as an edgelist")
    _add_input_flags(p)
    p.add_argument("--out", required=True)
    _add_common_flags(p)
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("embed-init",
                       help="embed the star expansion (no coarsening, no refinement)")
    _add_input_flags(p)
    _add_walk_flags(p)
    p.add_argument("--out", required=True)
    _add_common_flags(p)
    p.set_defaults(func=cmd_embed_init)

    p = sub.add_parser("refine",
                       help="smooth an existing embedding over the star graph")
    _add_input_flags(p, name="--graph")
    p.add_argument("--embeddings", required=True,
                   help="embedding file covering all star vertices")
    _add_refine_flags(p)
    p.add_argument("--out", required=True)
    _add_common_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("pipeline",
                       help="full run: coarsen, embed coarsest, project + refine")
    _add_input_flags(p)
    p.add_argument("--levels", type=_nonneg_int, default=0)
    p.add_argument("--min-size", type=_nonneg_int, default=0)
    p.add_argument("--policy", choices=POLICY_KINDS, default=None)
    _add_walk_flags(p)
    _add_refine_flags(p)
    p.add_argument("--out", required=True, help="star embedding file")
    p.add_argument("--out-nodes",
                   help="node-side embedding file keyed by original node ids")
    p.add_argument("--report", help="write per-level statistics CSV here")
    _add_common_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval-nodes",
                       help="node classification accuracy over repeated splits")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True, help="file of 'id label' pairs")
    p.add_argument("--splits", type=_positive_int, default=100)
    p.add_argument("--train-frac", type=float, default=0.04)
    p.add_argument("--rate", type=float, default=0.5, help="classifier step size")
    p.add_argument("--clf-epochs", type=int, default=300)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--out", help="CSV destination (default stdout)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_eval_nodes)

    p = sub.add_parser("eval-hyperedges",
                       help="hide hyperedges, embed the rest, score prediction AUC")
    _add_input_flags(p)
    p.add_argument("--levels", type=_nonneg_int, default=0)
    p.add_argument("--min-size", type=_nonneg_int, default=0)
    p.add_argument("--policy", choices=POLICY_KINDS, default=None)
    _add_walk_flags(p)
    _add_refine_flags(p)
    p.add_argument("--hidden-frac", type=float, default=0.2)
    p.add_argument("--neg-ratio", type=int, default=5)
    p.add_argument("--rate", type=float, default=0.5, help="classifier step size")
    p.add_argument("--clf-epochs", type=int, default=300)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--out", help="CSV destination (default stdout)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_eval_hyperedges)

    p = sub.add_parser("stats",
                       help="pretty-print a saved pipeline report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def _setup(args):
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(name)s: %(message)s")
    threads = getattr(args, "threads", None)
    if threads is None:
        threads = os.environ.get("HYPERVEC_THREADS") or os.cpu_count() or 1
    set_thread_count(int(threads))


def _load_hypergraph(args, path_attr="input"):
    path = getattr(args, path_attr)
    with open(path, encoding="utf-8") as fh:
        pins, weights = hio.parse_hypergraph(fh, format=args.format)
    features = None
    if getattr(args, "features", None):
        with open(args.features, encoding="utf-8") as fh:
            features = hio.parse_features(fh)
    return build_hypergraph(pins, weights=weights, features=features)


def _walk_config(args) -> WalkConfig:
    return WalkConfig(walks_per_vertex=args.walks, walk_length=args.walk_length,
                      window=args.window, return_param=args.p, inout_param=args.q,
                      negative_samples=args.negative, epochs=args.epochs,
                      learning_rate=args.learning_rate, dim=args.dim,
                      seed=args.seed, workers=args.embed_workers)


def _refine_config(args) -> RefineConfig:
    return RefineConfig(omega=args.omega, max_iterations=args.refine_iters,
                        epsilon=args.epsilon)


def _pipeline_config(args) -> PipelineConfig:
    policy = AssignPolicy(args.policy, args.seed) if args.policy else None
    return PipelineConfig(levels=args.levels, min_size=args.min_size,
                          policy=policy, walks=_walk_config(args),
                          external_command=args.external,
                          refine=_refine_config(args),
                          dim=args.dim, seed=args.seed)


def cmd_coarsen(args) -> int:
    h, _ = _load_hypergraph(args)
    policy = AssignPolicy(args.policy, args.seed) if args.policy else None
    hierarchy = coarsen_hierarchy(h, args.levels, min_size=args.min_size,
                                  policy=policy)
    for level, graph in enumerate(hierarchy.levels):
        print(f"level {level}: nodes={graph.num_nodes} "
              f"hyperedges={graph.num_hyperedges} pins={graph.num_pins}")
    with hio.atomic_output(args.out) as fh:
        hio.write_hypergraph(fh, hierarchy.coarsest)
    return 0


def cmd_star(args) -> int:
    h, _ = _load_hypergraph(args)
    g = build_star_expansion(h)
    print(f"star: vertices={g.num_vertices} edges={g.num_edges}")
    with hio.atomic_output(args.out) as fh:
        hio.write_edgelist(fh, g)
    return 0


def cmd_embed_init(args) -> int:
    h, _ = _load_hypergraph(args)
    g = build_star_expansion(h)
    if args.external:
        emb = external_embed(g, args.external)
    else:
        emb = embed_star_graph(g, _walk_config(args))
    with hio.atomic_output(args.out) as fh:
        hio.write_embeddings(fh, emb)
    return 0


def cmd_refine(args) -> int:
    h, _ = _load_hypergraph(args, path_attr="graph")
    g = build_star_expansion(h)
    with open(args.embeddings, encoding="utf-8") as fh:
        ids, values = hio.read_embeddings(fh)
    if len(ids) != g.num_vertices or not np.array_equal(np.sort(ids),
                                                        np.arange(g.num_vertices)):
        raise DataError(
            f"embedding file must cover star vertices 0..{g.num_vertices - 1}")
    emb = np.empty_like(values)
    emb[ids] = values
    refined = refine(g, emb, _refine_config(args))
    with hio.atomic_output(args.out) as fh:
        hio.write_embeddings(fh, refined)
    return 0


def cmd_pipeline(args) -> int:
    h, original_ids = _load_hypergraph(args)
    emb, report = run_pipeline(h, _pipeline_config(args))
    with hio.atomic_output(args.out) as fh:
        hio.write_embeddings(fh, emb)
    if args.out_nodes:
        with hio.atomic_output(args.out_nodes) as fh:
            hio.write_embeddings(fh, emb[:h.num_nodes], ids=original_ids)
    if args.report:
        with hio.atomic_output(args.report) as fh:
            report.to_csv(fh)
    print(report.format_table())
    return 0


def cmd_eval_nodes(args) -> int:
    with open(args.embeddings, encoding="utf-8") as fh:
        ids, values = hio.read_embeddings(fh)
    with open(args.labels, encoding="utf-8") as fh:
        table = hio.parse_labels(fh)

    _, counts = np.unique(ids, return_counts=True)
    if np.any(counts > 1):
        raise DataError("embedding file repeats vertex ids")
    row_of = {int(v): i for i, v in enumerate(ids)}
    missing = [int(v) for v in table.ids if int(v) not in row_of]
    if missing:
        raise DataError(f"labeled ids missing from embedding file: {missing[:10]}")
    X = values[[row_of[int(v)] for v in table.ids]]

    report = evaluate_classification(X, table.labels, num_splits=args.splits,
                                     fraction=args.train_frac, seed=args.seed,
                                     learning_rate=args.rate,
                                     epochs=args.clf_epochs, l2=args.l2)
    _write_csv(args.out, report.to_csv)
    print(f"accuracy mean={report.mean:.4f} std={report.std:.4f} "
          f"over {args.splits} splits", file=sys.stderr)
    return 0


def cmd_eval_hyperedges(args) -> int:
    h, _ = _load_hypergraph(args)
    visible, hidden_ids = split_hyperedge_holdout(h, args.hidden_frac, args.seed)
    emb, _ = run_pipeline(visible, _pipeline_config(args))
    report = evaluate_hyperedge_prediction(
        h, emb, hidden_fraction=args.hidden_frac, ratio=args.neg_ratio,
        seed=args.seed, hidden_ids=hidden_ids, learning_rate=args.rate,
        epochs=args.clf_epochs, l2=args.l2)
    _write_csv(args.out, report.to_csv)
    print(f"hyperedge prediction auc={report.auc:.4f} "
          f"({report.num_positives} positives, {report.num_negatives} negatives)",
          file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = PipelineReport.from_csv(fh)
    print(report.format_table())
    return 0


def _write_csv(path, writer):
    if path:
        with hio.atomic_output(path) as fh:
            writer(fh)
    else:
        writer(sys.stdout)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        _setup(args)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
