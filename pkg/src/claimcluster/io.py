"""Readers and writers for every on-disk format.

All files are UTF-8; JSON-lines files end with a newline. Parse errors
carry the offending line number and nothing is silently skipped.
"""

from __future__ import annotations

import json
import os
from typing import Any

from .core import Claim, ClaimPair, Label, LabeledPair, Partition, Provenance, Verdict
from .errors import ParseError
from .vecmath import EmbeddingSet


def _jsonl_rows(path: str) -> list[tuple[int, dict]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(row, dict):
                raise ParseError(path, lineno, "expected a JSON object")
            rows.append((lineno, row))
    return rows


def _require(row: dict, key: str, path: str, lineno: int) -> Any:
    if key not in row:
        raise ParseError(path, lineno, f"missing field {key!r}")
    return row[key]


# -- claims ------------------------------------------------------------

def read_claims(path: str) -> dict[str, Claim]:
    claims: dict[str, Claim] = {}
    for lineno, row in _jsonl_rows(path):
        cid = _require(row, "id", path, lineno)
        if not isinstance(cid, str):
            raise ParseError(path, lineno, "id must be a string")
        if cid in claims:
            raise ParseError(path, lineno, f"duplicate claim id {cid!r}")
        claims[cid] = Claim(
            id=cid,
            text=str(_require(row, "text", path, lineno)),
            text_en=row.get("text_en"),
            language=str(_require(row, "language", path, lineno)),
            published_at=row.get("published_at"),
            source=row.get("source"),
        )
    return claims


def write_claims(claims: dict[str, Claim], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cid in sorted(claims):
            c = claims[cid]
            fh.write(
                json.dumps(
                    {
                        "id": c.id,
                        "text": c.text,
                        "text_en": c.text_en,
                        "language": c.language,
                        "published_at": c.published_at,
                        "source": c.source,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


# -- embeddings --------------------------------------------------------

def read_embeddings(path: str) -> EmbeddingSet:
    rows = _jsonl_rows(path)
    if not rows:
        raise ParseError(path, 1, "embeddings file is empty")
    header_lineno, header = rows[0]
    dim = header.get("dim")
    if not isinstance(dim, int) or dim <= 0:
        raise ParseError(path, header_lineno, "first line must be a {\"dim\": D} header")
    vectors: dict[str, list[float]] = {}
    for lineno, row in rows[1:]:
        cid = _require(row, "id", path, lineno)
        vec = _require(row, "vector", path, lineno)
        if not isinstance(vec, list) or len(vec) != dim:
            raise ParseError(
                path, lineno, f"vector has {len(vec) if isinstance(vec, list) else '?'} "
                f"components, header says {dim}"
            )
        if cid in vectors:
            raise ParseError(path, lineno, f"duplicate embedding id {cid!r}")
        vectors[cid] = vec
    return EmbeddingSet(dim, vectors)


def write_embeddings(embeddings: EmbeddingSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": embeddings.dim}) + "\n")
        for cid, vec in embeddings.items():
            fh.write(json.dumps({"id": cid, "vector": [float(x) for x in vec]}) + "\n")


# -- partitions --------------------------------------------------------

def read_partition(path: str) -> Partition:
    assignment: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != ["claim_id", "cluster_id"]:
            raise ParseError(path, 1, "expected header 'claim_id\\tcluster_id'")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected two tab-separated columns")
            claim_id, cluster_id = parts
            if claim_id in assignment:
                raise ParseError(path, lineno, f"duplicate claim id {claim_id!r}")
            assignment[claim_id] = cluster_id
    return Partition(assignment)


def write_partition(partition: Partition, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("claim_id\tcluster_id\n")
        for claim_id in sorted(partition.assignment):
            fh.write(f"{claim_id}\t{partition.assignment[claim_id]}\n")


# -- verdicts and labeled pairs ----------------------------------------

def read_verdicts(path: str) -> list[Verdict]:
    verdicts = []
    for lineno, row in _jsonl_rows(path):
        label = _require(row, "label", path, lineno)
        if label not in (Label.SIMILAR.value, Label.DISSIMILAR.value):
            raise ParseError(path, lineno, f"label {label!r} is not 'similar' or 'dissimilar'")
        pair = ClaimPair(
            _require(row, "pair_a", path, lineno), _require(row, "pair_b", path, lineno)
        )
        verdicts.append(Verdict(pair.key, _require(row, "annotator", path, lineno), Label(label)))
    return verdicts


def write_verdicts(verdicts: list[Verdict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in sorted(verdicts, key=lambda v: (v.pair_key, v.annotator)):
            fh.write(
                json.dumps(
                    {
                        "pair_a": v.pair_key[0],
                        "pair_b": v.pair_key[1],
                        "annotator": v.annotator,
                        "label": v.label.value,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_labeled_pairs(path: str) -> list[LabeledPair]:
    out = []
    for lineno, row in _jsonl_rows(path):
        label = _require(row, "label", path, lineno)
        if label not in (Label.SIMILAR.value, Label.DISSIMILAR.value):
            raise ParseError(path, lineno, f"label {label!r} is not 'similar' or 'dissimilar'")
        out.append(
            LabeledPair(
                ClaimPair(
                    _require(row, "pair_a", path, lineno),
                    _require(row, "pair_b", path, lineno),
                ),
                Label(label),
                Provenance(_require(row, "provenance", path, lineno)),
            )
        )
    return out


def write_labeled_pairs(labeled: list[LabeledPair], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lp in sorted(labeled, key=lambda lp: lp.pair.key):
            fh.write(
                json.dumps(
                    {
                        "pair_a": lp.pair.a,
                        "pair_b": lp.pair.b,
                        "label": lp.label.value,
                        "provenance": lp.provenance.value,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


# -- candidate pairs ---------------------------------------------------

def read_pairs(path: str) -> list[ClaimPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != ["pair_a", "pair_b"]:
            raise ParseError(path, 1, "expected header 'pair_a\\tpair_b'")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected two tab-separated columns")
            pairs.append(ClaimPair(parts[0], parts[1]))
    return pairs


def write_pairs(pairs: list[ClaimPair], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("pair_a\tpair_b\n")
        for pair in sorted(pairs, key=lambda p: p.key):
            a, b = pair.key
            fh.write(f"{a}\t{b}\n")


# -- review / decisions ------------------------------------------------

def write_review(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("cluster_a\tcluster_b\tsimilarity\tsample_text_a\tsample_text_b\n")
        for r in rows:
            fh.write(
                f"{r.cluster_a}\t{r.cluster_b}\t{r.similarity:.6f}"
                f"\t{_tsv_safe(r.sample_text_a)}\t{_tsv_safe(r.sample_text_b)}\n"
            )


def write_audit(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("cluster_id\tsize\n")
        for r in rows:
            fh.write(f"{r.cluster_id}\t{r.size}\n")


def read_decisions(path: str) -> list[tuple[str, str]]:
    decisions = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != ["cluster_a", "cluster_b"]:
            raise ParseError(path, 1, "expected header 'cluster_a\\tcluster_b'")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected two tab-separated columns")
            decisions.append((parts[0], parts[1]))
    return decisions


def _tsv_safe(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


# -- metric reports ----------------------------------------------------

def write_metric_report(report, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")


def read_metric_report(path: str):
    from .metrics import AMI_CONVENTION, MetricReport

    raw = read_json(path)
    try:
        return MetricReport(
            algorithm=raw["algorithm"],
            n_clusters=raw["n_clusters"],
            ari=raw["ari"],
            ami=raw["ami"],
            homogeneity=raw["homogeneity"],
            completeness=raw["completeness"],
            v_measure=raw["v_measure"],
            purity=raw["purity"],
            ami_convention=raw.get("ami_convention", AMI_CONVENTION),
        )
    except KeyError as exc:
        raise ParseError(path, 1, f"metric report missing field {exc.args[0]!r}") from None


# -- misc --------------------------------------------------------------

def write_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv_histogram(histogram: list[tuple[int, int]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("day,count\n")
        for day, count in histogram:
            fh.write(f"{day},{count}\n")


def write_csv_language_counts(counts: list[tuple[str, int]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("language,count\n")
        for lang, count in counts:
            fh.write(f"{lang},{count}\n")


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
