"""Candidate-pair generation, exact-duplicate auto-labeling, annotator
verdict collection, and consensus aggregation."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass

from . import ann
from .core import (
    Claim,
    ClaimPair,
    ConsensusPolicy,
    Label,
    LabeledPair,
    PairKey,
    Partition,
    Provenance,
    Verdict,
    normalize_text,
)
from .errors import (
    EmptyIndex,
    IncompleteVerdicts,
    MalformedVerdict,
    MissingVerdict,
    UnknownClaimId,
)
from .vecmath import EmbeddingSet


class AnnotatorKind(str, enum.Enum):
    EXACT_DUP = "exact_dup"
    ORACLE = "oracle"
    EXTERNAL = "external"


@dataclass(frozen=True)
class AnnotatorSpec:
    """One annotator in a run.

    ORACLE answers from a reference partition; EXACT_DUP answers from
    normalized-text equality; EXTERNAL answers through batch files under
    `path_prefix` (one request/response file per annotator per stage).
    """

    name: str
    kind: AnnotatorKind
    partition: Partition | None = None
    path_prefix: str | None = None

    def request_path(self, stage: str) -> str:
        return f"{self.path_prefix}{self.name}.{stage}.requests.jsonl"

    def response_path(self, stage: str) -> str:
        return f"{self.path_prefix}{self.name}.{stage}.responses.jsonl"


def _resolve(claims: dict[str, Claim], claim_id: str) -> Claim:
    try:
        return claims[claim_id]
    except KeyError:
        raise UnknownClaimId(f"claim id {claim_id!r} not in dataset") from None


def comparable_text(claim: Claim) -> str:
    """Normalized text used for exact-duplicate checks: the English
    translation when present, the original text otherwise."""
    return normalize_text(claim.display_text())


def generate_candidate_pairs(
    embeddings: EmbeddingSet, index: ann.HnswIndex, k: int = 1
) -> list[ClaimPair]:
    """Each claim's top-k neighbors (self excluded) become candidate
    pairs; mutually-nearest duplicates collapse via the canonical key."""
    if len(index) == 0:
        raise EmptyIndex("candidate generation needs a built index")
    if set(index.ids) != set(embeddings.ids):
        raise ValueError("index was not built over exactly the embedding ids")
    keys: set[PairKey] = set()
    for cid, vec in embeddings.items():
        for neighbor, _sim in ann.query_knn(index, vec, k, exclude=cid):
            keys.add(ClaimPair(cid, neighbor).key)
    return [ClaimPair(a, b) for a, b in sorted(keys)]


def auto_label_exact_duplicates(
    pairs: list[ClaimPair], claims: dict[str, Claim]
) -> tuple[list[LabeledPair], list[ClaimPair]]:
    """Split pairs into exact-duplicate SIMILAR labels and the remainder."""
    labeled: list[LabeledPair] = []
    remaining: list[ClaimPair] = []
    for pair in pairs:
        ta = comparable_text(_resolve(claims, pair.a))
        tb = comparable_text(_resolve(claims, pair.b))
        if ta == tb:
            labeled.append(LabeledPair(pair, Label.SIMILAR, Provenance.AUTO_EXACT))
        else:
            remaining.append(pair)
    return labeled, remaining


def write_annotation_requests(
    pairs: list[ClaimPair],
    annotators: list[AnnotatorSpec],
    claims: dict[str, Claim],
    stage: str,
) -> list[str]:
    """Write one request file per EXTERNAL annotator; returns the paths.

    Existing request files are rewritten (they are derived data)."""
    paths = []
    for spec in annotators:
        if spec.kind is not AnnotatorKind.EXTERNAL:
            continue
        path = spec.request_path(stage)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for pair in pairs:
                ca = _resolve(claims, pair.a)
                cb = _resolve(claims, pair.b)
                fh.write(
                    json.dumps(
                        {
                            "pair_a": pair.a,
                            "pair_b": pair.b,
                            "text_a": ca.display_text(),
                            "text_b": cb.display_text(),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        paths.append(path)
    return paths


def _read_external_verdicts(
    spec: AnnotatorSpec, pairs: list[ClaimPair], stage: str
) -> list[Verdict]:
    path = spec.response_path(stage)
    if not os.path.exists(path):
        raise MissingVerdict(
            f"annotator {spec.name!r} has no response file {path}; "
            f"request file is on disk for the adapter"
        )
    answers: dict[PairKey, Label] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            label = row.get("label")
            if label not in (Label.SIMILAR.value, Label.DISSIMILAR.value):
                raise MalformedVerdict(
                    f"{path}:{lineno}: label {label!r} is not 'similar' or 'dissimilar'"
                )
            key = ClaimPair(row["pair_a"], row["pair_b"]).key
            answers[key] = Label(label)
    verdicts = []
    for pair in pairs:
        if pair.key not in answers:
            raise MissingVerdict(
                f"response file {path} lacks a verdict for pair {pair.key}"
            )
        verdicts.append(Verdict(pair.key, spec.name, answers[pair.key]))
    return verdicts


def collect_verdicts(
    pairs: list[ClaimPair],
    annotators: list[AnnotatorSpec],
    claims: dict[str, Claim],
    stage: str = "pairs",
) -> list[Verdict]:
    """One verdict per (pair, annotator)."""
    if not annotators:
        raise ValueError("at least one annotator is required")
    names = [a.name for a in annotators]
    if len(set(names)) != len(names):
        raise ValueError(f"annotator names must be unique within a run: {names}")
    verdicts: list[Verdict] = []
    for spec in annotators:
        if spec.kind is AnnotatorKind.ORACLE:
            assignment = spec.partition.assignment
            for pair in pairs:
                try:
                    same = assignment[pair.a] == assignment[pair.b]
                except KeyError as exc:
                    raise UnknownClaimId(
                        f"oracle partition for {spec.name!r} lacks claim {exc.args[0]!r}"
                    ) from None
                label = Label.SIMILAR if same else Label.DISSIMILAR
                verdicts.append(Verdict(pair.key, spec.name, label))
        elif spec.kind is AnnotatorKind.EXACT_DUP:
            for pair in pairs:
                ta = comparable_text(_resolve(claims, pair.a))
                tb = comparable_text(_resolve(claims, pair.b))
                label = Label.SIMILAR if ta == tb else Label.DISSIMILAR
                verdicts.append(Verdict(pair.key, spec.name, label))
        elif spec.kind is AnnotatorKind.EXTERNAL:
            verdicts.extend(_read_external_verdicts(spec, pairs, stage))
    return verdicts


def aggregate_consensus(
    verdicts: list[Verdict],
    policy: ConsensusPolicy,
    annotators: list[str] | None = None,
) -> list[LabeledPair]:
    """Fold per-annotator verdicts into one label per pair.

    UNANIMOUS labels SIMILAR only when every annotator agreed; MAJORITY
    when strictly more than half did."""
    roster = set(annotators) if annotators is not None else {v.annotator for v in verdicts}
    by_pair: dict[PairKey, dict[str, Label]] = {}
    for v in verdicts:
        by_pair.setdefault(v.pair_key, {})[v.annotator] = v.label
    labeled = []
    for key in sorted(by_pair):
        votes = by_pair[key]
        missing = roster - set(votes)
        if missing:
            raise IncompleteVerdicts(
                f"pair {key} lacks verdicts from {sorted(missing)}"
            )
        n_similar = sum(1 for label in votes.values() if label is Label.SIMILAR)
        if policy is ConsensusPolicy.UNANIMOUS:
            similar = n_similar == len(roster)
        else:
            similar = n_similar * 2 > len(roster)
        labeled.append(
            LabeledPair(
                ClaimPair(*key),
                Label.SIMILAR if similar else Label.DISSIMILAR,
                Provenance.CONSENSUS,
            )
        )
    return labeled
