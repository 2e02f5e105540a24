"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 stage failure, 4 I/O
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import analytics, ann, baselines, clusters, io, metrics, pairs as pairs_mod, pipeline
from .core import ConsensusPolicy, Label, PipelineParams, validate_dataset
from .errors import ClaimClusterError, IdSetMismatch, ParseError
from .pipeline import RunConfig, ValidationFailure


def _globals_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="run config JSON")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker pool size")
    return p


def _log(args):
    if getattr(args, "quiet", False):
        return lambda *_a, **_k: None
    return print


def _seed(args) -> int:
    return args.seed if args.seed is not None else 0


def _out_path(args, name: str) -> str:
    out = args.out if args.out is not None else "."
    io.ensure_dir(out)
    return os.path.join(out, name)


def _config(args) -> RunConfig | None:
    path = getattr(args, "config", None)
    return pipeline.load_config(path) if path else None


def _annotators(args) -> list[pairs_mod.AnnotatorSpec]:
    config = _config(args)
    if config is None or not config.annotators:
        raise ValidationFailure("this command needs annotators; supply them via --config")
    return config.annotators


def _params(args) -> PipelineParams:
    config = _config(args)
    return config.params if config else PipelineParams()


# -- command handlers ---------------------------------------------------

def cmd_validate(args) -> int:
    claims = io.read_claims(args.claims)
    report = validate_dataset(list(claims.values()))
    _log(args)(report.summary())
    return 0 if report.valid else 2


def cmd_index_build(args) -> int:
    embeddings = io.read_embeddings(args.embeddings)
    params = ann.HnswParams(seed=_seed(args))
    index = None
    if args.cache and os.path.exists(args.cache):
        index = ann.load_index(args.cache, embeddings, params)
    if index is None:
        index = ann.build(embeddings, params)
        if args.cache:
            ann.save_index(index, embeddings, args.cache)
    _log(args)(f"indexed {len(index)} vectors (dim {index.dim}, entry {index.entry_point})")
    return 0


def cmd_pairs_generate(args) -> int:
    embeddings = io.read_embeddings(args.embeddings)
    index = ann.build(embeddings, ann.HnswParams(seed=_seed(args)))
    threads = getattr(args, "threads", None) or 1
    found = pipeline.generate_pairs_threaded(embeddings, index, args.k, threads)
    path = _out_path(args, "candidate_pairs.tsv")
    io.write_pairs(found, path)
    _log(args)(f"{len(found)} candidate pairs -> {path}")
    return 0


def cmd_pairs_annotate_requests(args) -> int:
    pairs = io.read_pairs(args.pairs)
    claims = io.read_claims(args.claims)
    annotators = _annotators(args)
    paths = pairs_mod.write_annotation_requests(pairs, annotators, claims, stage=args.stage)
    for p in paths:
        _log(args)(f"wrote {p}")
    if not paths:
        _log(args)("no external annotators configured; nothing to write")
    return 0


def cmd_pairs_consensus(args) -> int:
    pairs = io.read_pairs(args.pairs)
    claims = io.read_claims(args.claims)
    annotators = _annotators(args)
    policy = ConsensusPolicy(args.policy) if args.policy else _params(args).consensus
    auto_labeled, remaining = pairs_mod.auto_label_exact_duplicates(pairs, claims)
    verdicts = pairs_mod.collect_verdicts(remaining, annotators, claims, stage=args.stage)
    consensus = pairs_mod.aggregate_consensus(
        verdicts, policy, annotators=[a.name for a in annotators]
    )
    path = _out_path(args, "labeled_pairs.jsonl")
    io.write_labeled_pairs(auto_labeled + consensus, path)
    n_similar = sum(1 for lp in auto_labeled + consensus if lp.label is Label.SIMILAR)
    _log(args)(f"{n_similar} similar of {len(pairs)} pairs -> {path}")
    return 0


def cmd_clusters_build(args) -> int:
    labeled = io.read_labeled_pairs(args.pairs)
    claims = io.read_claims(args.claims)
    similar = [lp for lp in labeled if lp.label is Label.SIMILAR]
    partition = clusters.build_subclusters(similar, set(claims))
    path = _out_path(args, "partition.tsv")
    io.write_partition(partition, path)
    _log(args)(f"{partition.n_clusters()} clusters over {len(partition)} claims -> {path}")
    return 0


def cmd_clusters_merge(args) -> int:
    partition = io.read_partition(args.partition)
    embeddings = io.read_embeddings(args.embeddings)
    claims = io.read_claims(args.claims)
    annotators = _annotators(args)
    params = _params(args)
    candidates = clusters.propose_merge_candidates(
        partition, embeddings, params, ann.HnswParams(seed=_seed(args))
    )
    pairs_mod.write_annotation_requests(
        [pairs_mod.ClaimPair(c.representative_a, c.representative_b) for c in candidates],
        annotators,
        claims,
        stage=args.stage,
    )
    merged = clusters.merge_pass(
        partition, candidates, annotators, params.consensus, claims, stage=args.stage
    )
    path = _out_path(args, "partition.tsv")
    io.write_partition(merged, path)
    _log(args)(
        f"{len(candidates)} candidates, {partition.n_clusters()} -> "
        f"{merged.n_clusters()} clusters -> {path}"
    )
    return 0


def cmd_clusters_review(args) -> int:
    partition = io.read_partition(args.partition)
    embeddings = io.read_embeddings(args.embeddings)
    claims = io.read_claims(args.claims)
    rows, audit = clusters.propose_manual_merges(
        partition, embeddings, claims, threshold=args.threshold
    )
    review_path = _out_path(args, "review.tsv")
    audit_path = _out_path(args, "audit.tsv")
    io.write_review(rows, review_path)
    io.write_audit(audit, audit_path)
    _log(args)(f"{len(rows)} review rows -> {review_path}; {len(audit)} oversized clusters -> {audit_path}")
    return 0


def cmd_clusters_apply_merges(args) -> int:
    partition = io.read_partition(args.partition)
    decisions = io.read_decisions(args.decisions)
    merged = clusters.apply_manual_merges(partition, decisions)
    path = _out_path(args, "partition.tsv")
    io.write_partition(merged, path)
    _log(args)(f"{partition.n_clusters()} -> {merged.n_clusters()} clusters -> {path}")
    return 0


def cmd_baseline_agglomerative(args) -> int:
    embeddings = io.read_embeddings(args.embeddings)
    config = baselines.AgglomerativeConfig(
        linkage=baselines.Linkage(args.linkage),
        distance_threshold=args.distance_threshold,
        metric=args.metric,
    )
    started = time.time()
    partition = baselines.agglomerative_cluster(embeddings, config)
    wall = time.time() - started
    path = _out_path(args, "partition.tsv")
    io.write_partition(partition, path)
    io.write_json(
        {
            "algorithm": "agglomerative",
            "config": {
                "linkage": config.linkage.value,
                "distance_threshold": config.distance_threshold,
                "metric": config.metric,
            },
            "wall_time_s": round(wall, 3),
            "n_clusters": partition.n_clusters(),
        },
        _out_path(args, "run_manifest.json"),
    )
    _log(args)(f"{partition.n_clusters()} clusters in {wall:.2f}s -> {path}")
    return 0


def cmd_baseline_affinity(args) -> int:
    embeddings = io.read_embeddings(args.embeddings)
    config = baselines.AffinityPropagationConfig(
        damping=args.damping,
        preference=args.preference,
        max_iterations=args.max_iterations,
        convergence_window=args.convergence_window,
    )
    started = time.time()
    result = baselines.affinity_propagation(embeddings, config)
    wall = time.time() - started
    path = _out_path(args, "partition.tsv")
    io.write_partition(result.partition, path)
    io.write_json(
        {
            "algorithm": "affinity_propagation",
            "config": {
                "damping": config.damping,
                "preference": config.preference,
                "max_iterations": config.max_iterations,
                "convergence_window": config.convergence_window,
            },
            "wall_time_s": round(wall, 3),
            "n_clusters": result.partition.n_clusters(),
            "converged": result.converged,
            "n_iterations": result.n_iterations,
        },
        _out_path(args, "run_manifest.json"),
    )
    if not result.converged:
        _log(args)("warning: affinity propagation did not converge")
    _log(args)(f"{result.partition.n_clusters()} clusters in {wall:.2f}s -> {path}")
    return 0


def cmd_eval(args) -> int:
    pred = io.read_partition(args.pred)
    truth = io.read_partition(args.truth)
    report = metrics.evaluate(pred, truth, algorithm=args.algorithm)
    path = _out_path(args, "metrics.json")
    io.write_metric_report(report, path)
    _log(args)(metrics.MetricReport.table_header())
    _log(args)(report.table_row())
    return 0


def cmd_stats(args) -> int:
    partition = io.read_partition(args.partition)
    claims = io.read_claims(args.claims)
    part = analytics.partition_stats(partition, claims)
    multi = analytics.multilingual_stats(partition, claims)
    temporal = analytics.temporal_repetition(partition, claims)
    io.write_json(
        {
            "partition": vars(part),
            "multilingual": vars(multi),
            "temporal": {
                "n_repeats": len(temporal.offsets),
                "p50_days": temporal.p50,
                "p75_days": temporal.p75,
                "n_undated": temporal.n_undated,
            },
        },
        _out_path(args, "stats.json"),
    )
    io.write_csv_histogram(temporal.histogram, _out_path(args, "temporal_histogram.csv"))
    io.write_csv_language_counts(
        analytics.language_counts(claims), _out_path(args, "language_counts.csv")
    )
    log = _log(args)
    log(analytics.stats_tables(part, multi))
    if temporal.p50 is not None:
        log(
            f"\n{len(temporal.offsets)} repeats; p50 {temporal.p50:.1f} days, "
            f"p75 {temporal.p75:.1f} days ({temporal.n_undated} undated claims skipped)"
        )
    else:
        log(f"\nno repeated dated claims ({temporal.n_undated} undated claims skipped)")
    return 0


def cmd_pipeline_run(args) -> int:
    config = _config(args)
    if config is None:
        raise ValidationFailure("pipeline run needs --config")
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.threads is not None:
        config.threads = args.threads
    run_log = _log(args)
    partition, _manifest = pipeline.run_pipeline(config, log=run_log)
    run_log(f"final clusters: {partition.n_clusters()}")
    return 0


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parent = _globals_parent()
    parser = argparse.ArgumentParser(prog="claimcluster")
    parser.set_defaults(config=None, seed=None, out=None, quiet=False, threads=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[parent], help="validate a claims file")
    p.add_argument("--claims", required=True)
    p.set_defaults(func=cmd_validate)

    index = sub.add_parser("index", help="ANN index operations").add_subparsers(
        dest="subcommand", required=True
    )
    p = index.add_parser("build", parents=[parent])
    p.add_argument("--embeddings", required=True)
    p.add_argument("--cache", help="binary index cache path")
    p.set_defaults(func=cmd_index_build)

    pairs = sub.add_parser("pairs", help="candidate pair operations").add_subparsers(
        dest="subcommand", required=True
    )
    p = pairs.add_parser("generate", parents=[parent])
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_pairs_generate)
    p = pairs.add_parser("annotate-requests", parents=[parent])
    p.add_argument("--pairs", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--stage", default="pairs")
    p.set_defaults(func=cmd_pairs_annotate_requests)
    p = pairs.add_parser("consensus", parents=[parent])
    p.add_argument("--pairs", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--policy", choices=["unanimous", "majority"])
    p.add_argument("--stage", default="pairs")
    p.set_defaults(func=cmd_pairs_consensus)

    cl = sub.add_parser("clusters", help="cluster operations").add_subparsers(
        dest="subcommand", required=True
    )
    p = cl.add_parser("build", parents=[parent])
    p.add_argument("--pairs", required=True, help="labeled pairs JSONL")
    p.add_argument("--claims", required=True)
    p.set_defaults(func=cmd_clusters_build)
    p = cl.add_parser("merge", parents=[parent])
    p.add_argument("--partition", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--stage", default="merge-1")
    p.set_defaults(func=cmd_clusters_merge)
    p = cl.add_parser("review", parents=[parent])
    p.add_argument("--partition", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--threshold", type=float, default=0.75)
    p.set_defaults(func=cmd_clusters_review)
    p = cl.add_parser("apply-merges", parents=[parent])
    p.add_argument("--partition", required=True)
    p.add_argument("--decisions", required=True)
    p.set_defaults(func=cmd_clusters_apply_merges)

    base = sub.add_parser("baseline", help="clustering baselines").add_subparsers(
        dest="subcommand", required=True
    )
    p = base.add_parser("agglomerative", parents=[parent])
    p.add_argument("--embeddings", required=True)
    p.add_argument("--linkage", choices=[l.value for l in baselines.Linkage], default="ward")
    p.add_argument("--distance-threshold", type=float, default=1.0)
    p.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    p.set_defaults(func=cmd_baseline_agglomerative)
    p = base.add_parser("affinity", parents=[parent])
    p.add_argument("--embeddings", required=True)
    p.add_argument("--damping", type=float, default=0.9)
    p.add_argument("--preference", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--convergence-window", type=int, default=50)
    p.set_defaults(func=cmd_baseline_affinity)

    p = sub.add_parser("eval", parents=[parent], help="score a partition against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--algorithm", default="external")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", parents=[parent], help="dataset and temporal statistics")
    p.add_argument("--partition", required=True)
    p.add_argument("--claims", required=True)
    p.set_defaults(func=cmd_stats)

    pl = sub.add_parser("pipeline", help="end-to-end runs").add_subparsers(
        dest="subcommand", required=True
    )
    p = pl.add_parser("run", parents=[parent])
    p.set_defaults(func=cmd_pipeline_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValidationFailure, IdSetMismatch, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ClaimClusterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
