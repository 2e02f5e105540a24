"""End-to-end pipeline runner: nearest-neighbor pair generation,
exact-duplicate auto-labels, annotator consensus, union-find sub-cluster
formation, and the configured number of centroid merge passes.

Every stage persists its artifact under the output directory before the
next one starts, so an aborted run (for example one waiting on external
annotator response files) can be resumed by running again."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import ann, clusters, io, pairs as pairs_mod
from .core import ClaimPair, ConsensusPolicy, Label, Partition, PipelineParams, validate_dataset
from .errors import ClaimClusterError, ParseError
from .pairs import AnnotatorKind, AnnotatorSpec


class StageFailure(ClaimClusterError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class ValidationFailure(ClaimClusterError):
    pass


@dataclass
class RunConfig:
    claims: str
    embeddings: str
    out: str
    seed: int = 0
    threads: int | None = None
    params: PipelineParams = field(default_factory=PipelineParams)
    annotators: list[AnnotatorSpec] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "RunConfig":
        def respath(p):
            return p if os.path.isabs(p) else os.path.join(base_dir, p)

        params_raw = raw.get("params", {})
        params = PipelineParams(
            knn_candidates=params_raw.get("knn_candidates", 1),
            merge_top_k=params_raw.get("merge_top_k", 20),
            merge_sim_threshold=params_raw.get("merge_sim_threshold", 0.75),
            consensus=ConsensusPolicy(params_raw.get("consensus", "unanimous")),
            merge_passes=params_raw.get("merge_passes", 1),
        )
        annotators = []
        for a in raw.get("annotators", []):
            kind = AnnotatorKind(a["kind"])
            partition = None
            if kind is AnnotatorKind.ORACLE:
                partition = io.read_partition(respath(a["partition"]))
            prefix = a.get("path_prefix")
            if prefix is not None and not os.path.isabs(prefix):
                prefix = os.path.join(base_dir, prefix)
            annotators.append(
                AnnotatorSpec(name=a["name"], kind=kind, partition=partition, path_prefix=prefix)
            )
        return cls(
            claims=respath(raw["claims"]),
            embeddings=respath(raw["embeddings"]),
            out=respath(raw.get("out", "run-output")),
            seed=raw.get("seed", 0),
            threads=raw.get("threads"),
            params=params,
            annotators=annotators,
        )

    def to_dict(self) -> dict:
        return {
            "claims": self.claims,
            "embeddings": self.embeddings,
            "out": self.out,
            "seed": self.seed,
            "threads": self.threads,
            "params": {
                "knn_candidates": self.params.knn_candidates,
                "merge_top_k": self.params.merge_top_k,
                "merge_sim_threshold": self.params.merge_sim_threshold,
                "consensus": self.params.consensus.value,
                "merge_passes": self.params.merge_passes,
            },
            "annotators": [
                {"name": a.name, "kind": a.kind.value, "path_prefix": a.path_prefix}
                for a in self.annotators
            ],
        }


def generate_pairs_threaded(embeddings, index, k: int, threads: int) -> list[ClaimPair]:
    """Candidate pairs with index queries fanned out over a worker pool;
    the frozen index supports unlimited concurrent readers."""
    if threads <= 1:
        return pairs_mod.generate_candidate_pairs(embeddings, index, k)

    def neighbors(cid):
        return [n for n, _ in ann.query_knn(index, embeddings.vector(cid), k, exclude=cid)]

    keys = set()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for cid, found in zip(embeddings.ids, pool.map(neighbors, embeddings.ids)):
            for neighbor in found:
                keys.add(ClaimPair(cid, neighbor).key)
    return [ClaimPair(a, b) for a, b in sorted(keys)]


def run_pipeline(config: RunConfig, log=print) -> tuple[Partition, dict]:
    """Run every stage, writing artifacts and the manifest under
    config.out; returns the final partition and the manifest."""
    started = time.time()
    io.ensure_dir(config.out)
    threads = config.threads or os.cpu_count() or 1
    manifest: dict = {
        "config": config.to_dict(),
        "seed": config.seed,
        "threads": threads,
        "stages": {},
        "merge_passes": [],
    }
    stage = "load"

    def out(name: str) -> str:
        return os.path.join(config.out, name)

    def checkpoint():
        io.write_json(manifest, out("manifest.json"))

    try:
        claims = io.read_claims(config.claims)
        embeddings = io.read_embeddings(config.embeddings)
        if not claims:
            raise ValidationFailure("no claims to cluster")
        report = validate_dataset(list(claims.values()))
        if not report.valid:
            raise ValidationFailure(f"claims failed validation: {report.summary()}")
        if set(claims) != set(embeddings.ids):
            missing = sorted(set(claims) - set(embeddings.ids))[:10]
            extra = sorted(set(embeddings.ids) - set(claims))[:10]
            raise ValidationFailure(
                f"embeddings do not cover claims (missing {missing}, extra {extra})"
            )
        manifest["stages"]["claims"] = len(claims)
        log(f"[load] {len(claims)} claims, dim {embeddings.dim}")

        stage = "index"
        index = ann.build(embeddings, ann.HnswParams(seed=config.seed))
        log(f"[index] {len(index)} vectors indexed")

        stage = "pairs"
        candidates = generate_pairs_threaded(
            embeddings, index, config.params.knn_candidates, threads
        )
        io.write_pairs(candidates, out("candidate_pairs.tsv"))
        manifest["stages"]["pairs_generated"] = len(candidates)
        checkpoint()
        log(f"[pairs] {len(candidates)} candidate pairs")

        stage = "auto_label"
        auto_labeled, remaining = pairs_mod.auto_label_exact_duplicates(candidates, claims)
        io.write_labeled_pairs(auto_labeled, out("auto_labeled.jsonl"))
        manifest["stages"]["pairs_auto_similar"] = len(auto_labeled)
        manifest["stages"]["pairs_for_annotation"] = len(remaining)
        checkpoint()
        log(f"[auto_label] {len(auto_labeled)} exact duplicates, {len(remaining)} to annotate")

        stage = "verdicts"
        pairs_mod.write_annotation_requests(remaining, config.annotators, claims, stage="pairs")
        verdicts = pairs_mod.collect_verdicts(remaining, config.annotators, claims, stage="pairs")
        io.write_verdicts(verdicts, out("verdicts.pairs.jsonl"))
        checkpoint()
        log(f"[verdicts] {len(verdicts)} verdicts from {len(config.annotators)} annotators")

        stage = "consensus"
        consensus = pairs_mod.aggregate_consensus(
            verdicts, config.params.consensus, annotators=[a.name for a in config.annotators]
        )
        io.write_labeled_pairs(consensus, out("consensus.pairs.jsonl"))
        similar = [lp for lp in auto_labeled + consensus if lp.label is Label.SIMILAR]
        manifest["stages"]["pairs_similar"] = len(similar)
        checkpoint()
        log(f"[consensus] {len(similar)} similar pairs after {config.params.consensus.value}")

        stage = "subclusters"
        partition = clusters.build_subclusters(similar, set(claims))
        io.write_partition(partition, out("subclusters.tsv"))
        manifest["stages"]["subclusters"] = partition.n_clusters()
        checkpoint()
        log(f"[subclusters] {partition.n_clusters()} sub-clusters")

        for p in range(1, config.params.merge_passes + 1):
            stage = f"merge-{p}"
            before = partition.n_clusters()
            merge_candidates = clusters.propose_merge_candidates(
                partition, embeddings, config.params, ann.HnswParams(seed=config.seed)
            )
            rep_pairs = [
                ClaimPair(c.representative_a, c.representative_b) for c in merge_candidates
            ]
            pairs_mod.write_annotation_requests(rep_pairs, config.annotators, claims, stage=stage)
            partition = clusters.merge_pass(
                partition,
                merge_candidates,
                config.annotators,
                config.params.consensus,
                claims,
                stage=stage,
            )
            io.write_partition(partition, out(f"partition.{stage}.tsv"))
            manifest["merge_passes"].append(
                {
                    "pass": p,
                    "candidates": len(merge_candidates),
                    "clusters_before": before,
                    "clusters_after": partition.n_clusters(),
                }
            )
            checkpoint()
            log(
                f"[{stage}] {len(merge_candidates)} candidates, "
                f"{before} -> {partition.n_clusters()} clusters"
            )

        stage = "write"
        io.write_partition(partition, out("partition.tsv"))
        manifest["stages"]["clusters_final"] = partition.n_clusters()
        manifest["wall_time_s"] = round(time.time() - started, 3)
        checkpoint()
        log(f"[done] partition written to {out('partition.tsv')}")
        return partition, manifest

    except (ValidationFailure, ParseError, OSError):
        raise
    except Exception as exc:
        manifest["failed_stage"] = stage
        manifest["error"] = str(exc)
        try:
            checkpoint()
        except OSError:
            pass
        raise StageFailure(stage, exc) from exc


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return RunConfig.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))
