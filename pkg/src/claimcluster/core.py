"""Domain types and canonical text/pair normalization.

Everything here is an immutable value object; validation is a pure
function that reports problems instead of raising.
"""

from __future__ import annotations

import datetime
import enum
import unicodedata
from dataclasses import dataclass, field

from .errors import IdenticalIds

PairKey = tuple[str, str]


class Label(str, enum.Enum):
    SIMILAR = "similar"
    DISSIMILAR = "dissimilar"


class Provenance(str, enum.Enum):
    AUTO_EXACT = "auto_exact"
    CONSENSUS = "consensus"
    ORACLE = "oracle"


class ConsensusPolicy(str, enum.Enum):
    UNANIMOUS = "unanimous"
    MAJORITY = "majority"


@dataclass(frozen=True)
class Claim:
    """One fact-checked claim.

    ``published_at`` is kept as the raw "YYYY-MM-DD" string so that a
    malformed date can be loaded and then reported by validation rather
    than exploding at parse time.
    """

    id: str
    text: str
    text_en: str | None = None
    language: str = ""
    published_at: str | None = None
    source: str | None = None

    def published_date(self) -> datetime.date | None:
        """Parsed calendar date, or None when absent or malformed."""
        if self.published_at is None:
            return None
        try:
            return datetime.date.fromisoformat(self.published_at)
        except ValueError:
            return None

    def display_text(self) -> str:
        """English translation when available, original text otherwise."""
        return self.text_en if self.text_en else self.text


@dataclass(frozen=True)
class ClaimPair:
    """A canonical unordered candidate pair."""

    a: str
    b: str

    @property
    def key(self) -> PairKey:
        return canonical_pair_key(self.a, self.b)


@dataclass(frozen=True)
class Verdict:
    pair_key: PairKey
    annotator: str
    label: Label


@dataclass(frozen=True)
class LabeledPair:
    pair: ClaimPair
    label: Label
    provenance: Provenance


@dataclass(frozen=True)
class PipelineParams:
    """Knobs of the pair-generation / merge pipeline; defaults reproduce
    the reference procedure (1 neighbor, top-20 merge retrieval at 0.75,
    unanimous consensus, a single merge pass)."""

    knn_candidates: int = 1
    merge_top_k: int = 20
    merge_sim_threshold: float = 0.75
    consensus: ConsensusPolicy = ConsensusPolicy.UNANIMOUS
    merge_passes: int = 1

    def __post_init__(self):
        if self.knn_candidates < 1:
            raise ValueError("knn_candidates must be >= 1")
        if self.merge_top_k < 1:
            raise ValueError("merge_top_k must be >= 1")
        if not 0.0 <= self.merge_sim_threshold <= 1.0:
            raise ValueError("merge_sim_threshold must be in [0, 1]")
        if self.merge_passes < 0:
            raise ValueError("merge_passes must be >= 0")


class Partition:
    """A total assignment of claim ids to cluster ids.

    The canonical form names every cluster after its lexicographically
    smallest member, which makes outputs deterministic across runs.
    """

    def __init__(self, assignment: dict[str, str]):
        self.assignment = dict(assignment)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Partition) and self.assignment == other.assignment

    def __len__(self) -> int:
        return len(self.assignment)

    def ids(self) -> set[str]:
        return set(self.assignment)

    def clusters(self) -> dict[str, list[str]]:
        """cluster id -> sorted member claim ids."""
        out: dict[str, list[str]] = {}
        for claim_id, cluster_id in self.assignment.items():
            out.setdefault(cluster_id, []).append(claim_id)
        for members in out.values():
            members.sort()
        return out

    def n_clusters(self) -> int:
        return len(set(self.assignment.values()))

    def canonicalize(self) -> "Partition":
        """Rename every cluster to its smallest member id (a fixpoint)."""
        smallest: dict[str, str] = {}
        for claim_id, cluster_id in self.assignment.items():
            cur = smallest.get(cluster_id)
            if cur is None or claim_id < cur:
                smallest[cluster_id] = claim_id
        return Partition({cid: smallest[cl] for cid, cl in self.assignment.items()})

    @classmethod
    def from_clusters(cls, clusters: dict[str, list[str]]) -> "Partition":
        assignment = {}
        for cluster_id, members in clusters.items():
            for claim_id in members:
                assignment[claim_id] = cluster_id
        return cls(assignment)


@dataclass
class ValidationReport:
    empty_ids: list[str] = field(default_factory=list)
    duplicate_ids: list[str] = field(default_factory=list)
    empty_texts: list[str] = field(default_factory=list)
    bad_dates: list[str] = field(default_factory=list)
    bad_languages: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (
            self.empty_ids
            or self.duplicate_ids
            or self.empty_texts
            or self.bad_dates
            or self.bad_languages
        )

    def summary(self) -> str:
        if self.valid:
            return "dataset valid"
        parts = []
        for name, ids in [
            ("empty id", self.empty_ids),
            ("duplicate id", self.duplicate_ids),
            ("empty text", self.empty_texts),
            ("malformed date", self.bad_dates),
            ("bad language code", self.bad_languages),
        ]:
            if ids:
                parts.append(f"{len(ids)} {name}(s): {ids[:5]}")
        return "; ".join(parts)


def normalize_text(s: str) -> str:
    """Canonical caseless form: compatibility-normalize, case-fold, and
    collapse whitespace runs to single spaces.

    The normalize+casefold step is iterated to a fixpoint; a single pass
    is not idempotent for a few exotic combining sequences.
    """
    prev = None
    out = s
    for _ in range(8):
        if out == prev:
            break
        prev = out
        out = unicodedata.normalize("NFKC", out).casefold()
    return " ".join(out.split())


def canonical_pair_key(a: str, b: str) -> PairKey:
    """Order a pair of ids so both orientations map to the same key.

    UTF-8 preserves code-point order, so plain string comparison is
    byte-order comparison here.
    """
    if a == b:
        raise IdenticalIds(f"cannot pair claim {a!r} with itself")
    return (a, b) if a < b else (b, a)


def validate_dataset(claims: list[Claim]) -> ValidationReport:
    """Check dataset-level invariants; problems go into the report."""
    report = ValidationReport()
    seen: set[str] = set()
    for claim in claims:
        if not claim.id.strip():
            report.empty_ids.append(claim.id)
        if claim.id in seen:
            report.duplicate_ids.append(claim.id)
        seen.add(claim.id)
        if not claim.text.strip():
            report.empty_texts.append(claim.id)
        if claim.published_at is not None and claim.published_date() is None:
            report.bad_dates.append(claim.id)
        lang = claim.language
        if not lang or lang != lang.lower() or not lang.isascii():
            report.bad_languages.append(claim.id)
    return report
