"""Dataset and partition statistics: cluster-size and language tables
plus the temporal-repetition profile."""

from __future__ import annotations

from dataclasses import dataclass

from .core import Claim, Partition
from .errors import IdSetMismatch


@dataclass
class PartitionStats:
    n_clusters: int
    n_claims: int
    avg_cluster_size: float
    max_cluster_size: int
    n_languages: int


@dataclass
class MultilingualStats:
    n_monolingual: int
    n_multilingual: int
    avg_unique_languages_in_multilingual: float
    avg_defined: bool  # False when there is no multilingual cluster


@dataclass
class TemporalStats:
    offsets: list[int]  # sorted day offsets of repeated claims
    p50: float | None
    p75: float | None
    n_undated: int
    histogram: list[tuple[int, int]]  # (day, count) for days 0..100


def _check_cover(partition: Partition, claims: dict[str, Claim]) -> None:
    part_ids = partition.ids()
    claim_ids = set(claims)
    if part_ids != claim_ids:
        raise IdSetMismatch(
            "partition and claim set cover different ids",
            part_ids - claim_ids,
            claim_ids - part_ids,
        )


def partition_stats(partition: Partition, claims: dict[str, Claim]) -> PartitionStats:
    _check_cover(partition, claims)
    clusters = partition.clusters()
    sizes = [len(m) for m in clusters.values()]
    return PartitionStats(
        n_clusters=len(clusters),
        n_claims=len(partition),
        avg_cluster_size=len(partition) / len(clusters),
        max_cluster_size=max(sizes),
        n_languages=len({c.language for c in claims.values()}),
    )


def multilingual_stats(partition: Partition, claims: dict[str, Claim]) -> MultilingualStats:
    """A cluster is multilingual when its members span at least two
    distinct languages; the language average runs over those only."""
    _check_cover(partition, claims)
    mono = 0
    multi_lang_counts = []
    for members in partition.clusters().values():
        langs = {claims[cid].language for cid in members}
        if len(langs) >= 2:
            multi_lang_counts.append(len(langs))
        else:
            mono += 1
    if multi_lang_counts:
        avg = sum(multi_lang_counts) / len(multi_lang_counts)
        return MultilingualStats(mono, len(multi_lang_counts), avg, True)
    return MultilingualStats(mono, 0, 0.0, False)


def _lower_quantile(sorted_values: list[int], q: float) -> float:
    idx = int(q * (len(sorted_values) - 1))
    return float(sorted_values[idx])


def temporal_repetition(partition: Partition, claims: dict[str, Claim]) -> TemporalStats:
    """Per cluster, every non-first dated claim contributes its day
    offset from the cluster's earliest date. Undated claims are skipped
    and counted; clusters with fewer than two dated claims contribute
    nothing."""
    _check_cover(partition, claims)
    n_undated = sum(1 for c in claims.values() if c.published_date() is None)
    offsets: list[int] = []
    for members in partition.clusters().values():
        dates = sorted(
            d for cid in members if (d := claims[cid].published_date()) is not None
        )
        if len(dates) < 2:
            continue
        first = dates[0]
        offsets.extend((d - first).days for d in dates[1:])
    offsets.sort()

    p50 = _lower_quantile(offsets, 0.50) if offsets else None
    p75 = _lower_quantile(offsets, 0.75) if offsets else None

    counts = [0] * 101
    for off in offsets:
        if 0 <= off <= 100:
            counts[off] += 1
    histogram = list(enumerate(counts))
    return TemporalStats(offsets, p50, p75, n_undated, histogram)


def language_counts(claims: dict[str, Claim]) -> list[tuple[str, int]]:
    counts: dict[str, int] = {}
    for claim in claims.values():
        counts[claim.language] = counts.get(claim.language, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def stats_tables(part: PartitionStats, multi: MultilingualStats) -> str:
    """Aligned text rendering of the two statistics tables."""
    lines = [
        f"{'# Clusters':>12}{'# Claims':>10}{'Avg. Size':>11}{'Max Size':>10}{'# Language':>12}",
        f"{part.n_clusters:>12}{part.n_claims:>10}{part.avg_cluster_size:>11.2f}"
        f"{part.max_cluster_size:>10}{part.n_languages:>12}",
        "",
        f"{'Monolingual':>12}{'Multilingual':>14}{'Avg. Unique Languages':>23}",
        f"{multi.n_monolingual:>12}{multi.n_multilingual:>14}"
        + (
            f"{multi.avg_unique_languages_in_multilingual:>23.2f}"
            if multi.avg_defined
            else f"{'n/a':>23}"
        ),
    ]
    return "\n".join(lines)
