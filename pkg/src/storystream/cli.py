"""Command-line surface.

Subcommands: train, cluster, evaluate, fit-tfidf, export-features,
inspect-bundle.  A ``--config`` file (flat ``key = value`` lines, keys named
after the long options with underscores) supplies defaults; explicit flags
override it.  Exit codes: 0 success, 1 usage error, 2 data/file error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .core import FEATURE_LABELS, N_FEATURES, feature_index
from .dataio import (
    load_bundle,
    load_embeddings,
    load_miranda,
    load_tdt,
    load_tfidf_models,
    read_config,
    save_bundle,
    save_tfidf_models,
)
from .engine import cluster_stream, pred_partition, read_assignments, write_assignments
from .errors import MissingGoldLabel, StoryStreamError
from .metrics import METRIC_NAMES, evaluate_all, format_report, fragmentation_report
from .represent import EmbeddingStore, fit_all_units
from .similarity import SimilarityParams
from .training import (
    TrainConfig,
    cross_validate,
    default_grid,
    make_creation_samples,
    make_svm_triplets,
    save_samples,
    simulate_gold_stream,
    train_bundle,
    train_linear_svm,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 1."""

    def error(self, message: str):
        raise _UsageError(message)


# Named feature subsets for --features (ablation configurations).
FEATURE_PRESETS = {
    "all": tuple(FEATURE_LABELS),
    "tfidf": tuple(FEATURE_LABELS[:9]),
    "tfidf+time": tuple(FEATURE_LABELS[:9]) + ("ts_min", "ts_max", "ts_mean"),
    "dense+time": ("dense", "ts_min", "ts_max", "ts_mean"),
}


def parse_feature_mask(spec: str) -> tuple[bool, ...]:
    """Resolve a preset name or comma-separated feature labels to a mask."""
    labels = FEATURE_PRESETS.get(spec.strip().lower())
    if labels is None:
        labels = tuple(part.strip() for part in spec.split(",") if part.strip())
        for label in labels:
            if label not in FEATURE_LABELS:
                raise _UsageError(
                    f"unknown feature {label!r} (choose from {', '.join(FEATURE_LABELS)})"
                )
    if not labels:
        raise _UsageError("feature list must not be empty")
    mask = [False] * N_FEATURES
    for label in labels:
        mask[feature_index(label)] = True
    return tuple(mask)


def parse_grid(spec: str) -> list[TrainConfig]:
    """Grid syntax: "C1,C2,..:S1,S2,.." (SVM C values : sigma values)."""
    try:
        c_part, s_part = spec.split(":")
        cs = [float(v) for v in c_part.split(",") if v.strip()]
        sigmas = [float(v) for v in s_part.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --grid value {spec!r}: expected 'C,..:SIGMA,..'") from exc
    if not cs or not sigmas:
        raise _UsageError("grid needs at least one C and one sigma")
    return [TrainConfig(svm_c=c, sigma=s) for c in cs for s in sigmas]


def _load_corpus(args):
    if args.format == "miranda":
        return load_miranda(args.corpus, language=args.language or "eng")
    if args.format == "tdt":
        return load_tdt(args.corpus, split=args.split), None
    raise _UsageError(f"unknown corpus format {args.format!r}")


def _load_store(args, default_dim: int = 1) -> EmbeddingStore:
    if args.embeddings:
        return load_embeddings(args.embeddings)
    return EmbeddingStore.zeros(dim=default_dim)


def _add_corpus_args(sub) -> None:
    sub.add_argument("--corpus", required=True, help="corpus file (line-delimited JSON)")
    sub.add_argument("--format", default="miranda", choices=("miranda", "tdt"))
    sub.add_argument("--split", default="train",
                     help="tdt only: train, test, or a split-file path")
    sub.add_argument("--language", default=None,
                     help="miranda only: language filter (default eng)")
    sub.add_argument("--embeddings", default=None,
                     help="embedding file; omitted = zero vectors (mask 'dense')")
    sub.add_argument("--tfidf", default=None,
                     help="TF-IDF table file; omitted = corpus-provided or fitted")


def _resolve_models(args, docs, corpus_models):
    if args.tfidf:
        return load_tfidf_models(args.tfidf)
    if corpus_models is not None:
        return corpus_models
    return fit_all_units(docs)


def build_parser() -> _Parser:
    parser = _Parser(prog="storystream",
                     description="Online news-stream clustering pipeline.")
    parser.add_argument("--config", default=None, help="key = value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model bundle")
    _add_corpus_args(p_train)
    p_train.add_argument("--out", required=True, help="bundle output path")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--svm-c", type=float, default=1.0)
    p_train.add_argument("--mu", type=float, default=0.0)
    p_train.add_argument("--sigma", type=float, default=3.0)
    p_train.add_argument("--smote-k", type=int, default=5)
    p_train.add_argument("--features", default="all",
                         help="preset (all, tfidf, tfidf+time, dense+time) or label list")
    p_train.add_argument("--cv-folds", type=int, default=0,
                         help="0 = train directly with the given hyper-parameters")
    p_train.add_argument("--grid", default=None,
                         help="cross-validation grid 'C,..:SIGMA,..' (default built-in)")

    p_cluster = sub.add_parser("cluster", help="run the online clustering pass")
    _add_corpus_args(p_cluster)
    p_cluster.add_argument("--bundle", required=True)
    p_cluster.add_argument("--out", required=True, help="assignment TSV output path")
    p_cluster.add_argument("--order", default="timestamp", choices=("timestamp", "given"))

    p_eval = sub.add_parser("evaluate", help="score assignments against gold labels")
    _add_corpus_args(p_eval)
    p_eval.add_argument("--pred", required=True, help="assignment TSV from cluster")
    p_eval.add_argument("--metrics", default=None,
                        help=f"comma list from: {', '.join(METRIC_NAMES)}")
    p_eval.add_argument("--baseline-count", type=int, default=None,
                        help="baseline cluster count for the excess-reduction line")

    p_fit = sub.add_parser("fit-tfidf", help="fit TF-IDF tables and save them")
    _add_corpus_args(p_fit)
    p_fit.add_argument("--out", required=True)

    p_export = sub.add_parser("export-features", help="emit training-sample TSVs")
    _add_corpus_args(p_export)
    p_export.add_argument("--kind", required=True, choices=("svm", "creation"))
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--seed", type=int, default=0)
    p_export.add_argument("--svm-c", type=float, default=1.0)
    p_export.add_argument("--mu", type=float, default=0.0)
    p_export.add_argument("--sigma", type=float, default=3.0)
    p_export.add_argument("--bundle", default=None,
                          help="creation only: reuse this bundle's merge weights")

    p_inspect = sub.add_parser("inspect-bundle", help="print a bundle summary")
    p_inspect.add_argument("--bundle", required=True)
    return parser


def _cmd_train(args) -> int:
    docs, corpus_models = _load_corpus(args)
    models = _resolve_models(args, docs, corpus_models)
    store = _load_store(args)
    mask = parse_feature_mask(args.features)
    if args.cv_folds > 0:
        base = parse_grid(args.grid) if args.grid else default_grid()
        grid = [
            TrainConfig(svm_c=c.svm_c, mu=args.mu, sigma=c.sigma,
                        smote_k=args.smote_k, feature_mask=mask)
            for c in base
        ]
        config, results = cross_validate(
            docs, store, grid=grid, folds=args.cv_folds,
            rng_seed=args.seed, models=models,
        )
        for res in results:
            print(f"cv\tC={res.config.svm_c}\tsigma={res.config.sigma}\t"
                  f"mean_f1={res.mean_f1:.4f}")
        print(f"selected\tC={config.svm_c}\tsigma={config.sigma}")
    else:
        config = TrainConfig(svm_c=args.svm_c, mu=args.mu, sigma=args.sigma,
                             smote_k=args.smote_k, feature_mask=mask)
    bundle = train_bundle(docs, store, config, rng_seed=args.seed, models=models)
    save_bundle(bundle, args.out)
    print(f"wrote bundle to {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    docs, corpus_models = _load_corpus(args)
    models = _resolve_models(args, docs, corpus_models)
    bundle = load_bundle(args.bundle)
    store = _load_store(args, default_dim=bundle.embedding_dim)
    _, assignments = cluster_stream(docs, bundle, models, store, order=args.order)
    write_assignments(assignments, args.out)
    n_clusters = len({a.cluster_id for a in assignments})
    print(f"wrote {len(assignments)} assignments ({n_clusters} clusters) to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    docs, _ = _load_corpus(args)
    gold = {}
    for doc in docs:
        if doc.gold_cluster is None:
            raise MissingGoldLabel(f"document {doc.id!r} has no gold cluster")
        gold[doc.id] = doc.gold_cluster
    pred = pred_partition(read_assignments(args.pred))
    names = None
    if args.metrics:
        names = [n.strip() for n in args.metrics.split(",") if n.strip()]
        unknown = [n for n in names if n not in METRIC_NAMES]
        if unknown:
            raise _UsageError(f"unknown metrics: {', '.join(unknown)}")
    results = evaluate_all(pred, gold, names=names)
    print(format_report(results))
    if args.baseline_count is not None:
        frag = fragmentation_report(pred, gold)
        reduction = frag.excess_reduction_vs(args.baseline_count)
        if reduction is None:
            print("excess_reduction\tn/a (baseline has no excess clusters)")
        else:
            print(f"excess_reduction\t{100 * reduction:.1f}")
    return 0


def _cmd_fit_tfidf(args) -> int:
    docs, _ = _load_corpus(args)
    save_tfidf_models(fit_all_units(docs), args.out)
    print(f"wrote TF-IDF tables for {len(docs)} documents to {args.out}")
    return 0


def _cmd_export_features(args) -> int:
    docs, corpus_models = _load_corpus(args)
    models = _resolve_models(args, docs, corpus_models)
    store = _load_store(args)
    params = SimilarityParams(mu=args.mu, sigma=args.sigma)
    trace = simulate_gold_stream(docs, models, store)
    triplets = make_svm_triplets(trace, params, rng_seed=args.seed)
    if args.kind == "svm":
        save_samples(triplets, args.out)
        print(f"wrote {len(triplets)} SVM samples to {args.out}")
        return 0
    if args.bundle:
        weights = load_bundle(args.bundle).weights
    else:
        weights = train_linear_svm(triplets, C=args.svm_c)
    creation = make_creation_samples(trace, weights, params)
    save_samples(creation, args.out)
    print(f"wrote {len(creation)} creation samples to {args.out}")
    return 0


def _cmd_inspect_bundle(args) -> int:
    bundle = load_bundle(args.bundle)
    print(f"format_version\t{bundle.format_version}")
    print(f"embedding_dim\t{bundle.embedding_dim}")
    print(f"sim_params\tmu={bundle.sim_params.mu}\tsigma={bundle.sim_params.sigma}")
    active = [label for label, on in zip(FEATURE_LABELS, bundle.feature_mask) if on]
    print(f"features\t{','.join(active)}")
    for label, w in zip(FEATURE_LABELS, bundle.weights):
        print(f"weight\t{label}\t{w!r}")
    net = bundle.creation_net
    print(f"creation_net\thidden={net.w1.shape[0]}\tinputs={net.w1.shape[1]}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "cluster": _cmd_cluster,
    "evaluate": _cmd_evaluate,
    "fit-tfidf": _cmd_fit_tfidf,
    "export-features": _cmd_export_features,
    "inspect-bundle": _cmd_inspect_bundle,
}

# Options that accept config-file defaults, per subcommand dest name.
_CONFIG_KEYS = {
    "corpus", "format", "split", "language", "embeddings", "tfidf", "out",
    "seed", "svm_c", "mu", "sigma", "smote_k", "features", "cv_folds", "grid",
    "bundle", "order", "pred", "metrics", "baseline_count", "kind",
}


def _apply_config(parser: _Parser, argv: Sequence[str]) -> None:
    """Seed parser defaults from --config so explicit flags still win."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    raw = read_config(known.config)
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise _UsageError(f"unknown config keys: {', '.join(unknown)}")
    typed: dict[str, object] = {}
    for key, value in raw.items():
        if key in ("seed", "cv_folds", "smote_k", "baseline_count"):
            typed[key] = int(value)
        elif key in ("svm_c", "mu", "sigma"):
            typed[key] = float(value)
        else:
            typed[key] = value
    parser.set_defaults(**typed)
    for action in parser._subparsers._group_actions:  # push into subparsers too
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in typed.items()
                               if any(a.dest == k for a in sp._actions)})


def cli(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StoryStreamError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        code = exc.code if isinstance(exc.code, int) else 0
        return code


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
