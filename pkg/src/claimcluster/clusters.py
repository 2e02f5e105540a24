"""Sub-cluster formation from similar pairs and the centroid merge pass.

Clusters are the connected components of the similar-pair graph. Merging
represents each cluster by its centroid embedding, retrieves candidate
neighbor clusters, and unions the ones whose representative claim pair
reaches a similar consensus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ann, pairs as pairs_mod
from .core import Claim, ClaimPair, ConsensusPolicy, Label, LabeledPair, Partition, PipelineParams
from .errors import UnknownClaimId, UnknownClusterId, ZeroVector
from .vecmath import EmbeddingSet


class UnionFind:
    """Disjoint sets over arbitrary hashable ids, with path compression
    and union by rank."""

    def __init__(self):
        self.parent: dict = {}
        self.rank: dict = {}

    def find(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0
            return x
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> bool:
        px, py = self.find(x), self.find(y)
        if px == py:
            return False
        if self.rank[px] < self.rank[py]:
            px, py = py, px
        self.parent[py] = px
        if self.rank[px] == self.rank[py]:
            self.rank[px] += 1
        return True

    def groups(self) -> dict:
        out: dict = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


@dataclass(frozen=True)
class MergeCandidate:
    cluster_a: str
    cluster_b: str
    centroid_similarity: float
    representative_a: str
    representative_b: str


@dataclass(frozen=True)
class ReviewRow:
    cluster_a: str
    cluster_b: str
    similarity: float
    sample_text_a: str
    sample_text_b: str


@dataclass(frozen=True)
class AuditRow:
    cluster_id: str
    size: int


def build_subclusters(similar_pairs: list[LabeledPair], universe: set[str]) -> Partition:
    """Connected components of the similar-pair graph; claims touched by
    no pair become singleton clusters so the partition stays total."""
    uf = UnionFind()
    for cid in universe:
        uf.find(cid)
    for lp in similar_pairs:
        if lp.label is not Label.SIMILAR:
            continue
        for cid in (lp.pair.a, lp.pair.b):
            if cid not in universe:
                raise UnknownClaimId(f"pair references {cid!r} outside the claim universe")
        uf.union(lp.pair.a, lp.pair.b)
    assignment = {cid: uf.find(cid) for cid in universe}
    return Partition(assignment).canonicalize()


def _cluster_centroids(
    partition: Partition, embeddings: EmbeddingSet
) -> tuple[dict[str, list[str]], dict[str, np.ndarray]]:
    clusters = partition.clusters()
    centroids: dict[str, np.ndarray] = {}
    for cluster_id, members in clusters.items():
        for cid in members:
            if cid not in embeddings:
                raise UnknownClaimId(f"claim {cid!r} has no embedding")
        centroids[cluster_id] = embeddings.subset_matrix(members).mean(axis=0)
    return clusters, centroids


def _representatives(
    clusters: dict[str, list[str]],
    centroids: dict[str, np.ndarray],
    embeddings: EmbeddingSet,
) -> dict[str, str]:
    """Per cluster, the member most cosine-similar to the centroid
    (ties by smallest claim id). Members are unit vectors, so ranking by
    the raw dot product against the centroid is ranking by cosine."""
    reps: dict[str, str] = {}
    for cluster_id, members in clusters.items():
        c = centroids[cluster_id]
        if float(np.linalg.norm(c)) == 0.0:
            raise ZeroVector(f"cluster {cluster_id!r} has a zero centroid")
        sims = embeddings.subset_matrix(members) @ c
        best = min(range(len(members)), key=lambda i: (-sims[i], members[i]))
        reps[cluster_id] = members[best]
    return reps


# exact centroid scan is used below this cluster count; past it the ANN
# index is faster and the approximation noise is acceptable
ANN_CENTROID_CUTOFF = 5000


def propose_merge_candidates(
    partition: Partition,
    embeddings: EmbeddingSet,
    params: PipelineParams,
    ann_params: ann.HnswParams | None = None,
) -> list[MergeCandidate]:
    """Top merge_top_k centroid neighbors per cluster, self excluded,
    filtered at merge_sim_threshold; each unordered cluster pair once."""
    clusters, centroids = _cluster_centroids(partition, embeddings)
    reps = _representatives(clusters, centroids, embeddings)
    cluster_ids = sorted(clusters)
    if len(cluster_ids) < 2:
        return []

    seen: dict[tuple[str, str], float] = {}
    if len(cluster_ids) > ANN_CENTROID_CUTOFF:
        centroid_set = EmbeddingSet(embeddings.dim, centroids)
        index = ann.build(centroid_set, ann_params or ann.HnswParams())
        for cluster_id in cluster_ids:
            hits = ann.query_knn(
                index, centroid_set.vector(cluster_id), params.merge_top_k, exclude=cluster_id
            )
            for other, sim in hits:
                if sim < params.merge_sim_threshold:
                    continue
                key = (cluster_id, other) if cluster_id < other else (other, cluster_id)
                seen.setdefault(key, sim)
    else:
        mat = np.stack([centroids[c] for c in cluster_ids])
        norms = np.linalg.norm(mat, axis=1)
        if np.any(norms == 0.0):
            bad = cluster_ids[int(np.argmin(norms))]
            raise ZeroVector(f"cluster {bad!r} has a zero centroid")
        unit = mat / norms[:, None]
        sims = np.clip(unit @ unit.T, -1.0, 1.0)
        np.fill_diagonal(sims, -np.inf)
        k = min(params.merge_top_k, len(cluster_ids) - 1)
        for i, cluster_id in enumerate(cluster_ids):
            row = sims[i]
            top = sorted(range(len(cluster_ids)), key=lambda j: (-row[j], cluster_ids[j]))[:k]
            for j in top:
                sim = float(row[j])
                if sim < params.merge_sim_threshold:
                    continue
                other = cluster_ids[j]
                key = (cluster_id, other) if cluster_id < other else (other, cluster_id)
                seen.setdefault(key, sim)

    out = [
        MergeCandidate(a, b, sim, reps[a], reps[b]) for (a, b), sim in seen.items()
    ]
    out.sort(key=lambda c: (-c.centroid_similarity, c.cluster_a, c.cluster_b))
    return out


def merge_pass(
    partition: Partition,
    candidates: list[MergeCandidate],
    annotators: list[pairs_mod.AnnotatorSpec],
    policy: ConsensusPolicy,
    claims: dict[str, Claim],
    stage: str = "merge-1",
) -> Partition:
    """Union every candidate whose representative pair reaches a SIMILAR
    consensus; the output coarsens the input (never splits)."""
    if not candidates:
        return partition.canonicalize()
    pair_to_clusters: dict[tuple[str, str], list[MergeCandidate]] = {}
    rep_pairs = []
    for cand in candidates:
        pair = ClaimPair(cand.representative_a, cand.representative_b)
        if pair.key not in pair_to_clusters:
            rep_pairs.append(pair)
        pair_to_clusters.setdefault(pair.key, []).append(cand)

    verdicts = pairs_mod.collect_verdicts(rep_pairs, annotators, claims, stage=stage)
    consensus = pairs_mod.aggregate_consensus(
        verdicts, policy, annotators=[a.name for a in annotators]
    )

    uf = UnionFind()
    for cluster_id in partition.clusters():
        uf.find(cluster_id)
    for lp in consensus:
        if lp.label is not Label.SIMILAR:
            continue
        for cand in pair_to_clusters[lp.pair.key]:
            uf.union(cand.cluster_a, cand.cluster_b)

    merged = {cid: uf.find(cluster_id) for cid, cluster_id in partition.assignment.items()}
    return Partition(merged).canonicalize()


def propose_manual_merges(
    partition: Partition,
    embeddings: EmbeddingSet,
    claims: dict[str, Claim],
    threshold: float = 0.75,
    audit_size: int = 20,
) -> tuple[list[ReviewRow], list[AuditRow]]:
    """Offline-review artifacts: cluster pairs strictly above the
    similarity threshold (descending) and an audit list of clusters with
    more than `audit_size` members. Never mutates the partition."""
    clusters, centroids = _cluster_centroids(partition, embeddings)
    reps = _representatives(clusters, centroids, embeddings)
    cluster_ids = sorted(clusters)

    rows: list[ReviewRow] = []
    if len(cluster_ids) >= 2:
        mat = np.stack([centroids[c] for c in cluster_ids])
        norms = np.linalg.norm(mat, axis=1)
        if np.any(norms == 0.0):
            bad = cluster_ids[int(np.argmin(norms))]
            raise ZeroVector(f"cluster {bad!r} has a zero centroid")
        unit = mat / norms[:, None]
        sims = np.clip(unit @ unit.T, -1.0, 1.0)
        for i in range(len(cluster_ids)):
            for j in range(i + 1, len(cluster_ids)):
                sim = float(sims[i, j])
                if sim > threshold:
                    a, b = cluster_ids[i], cluster_ids[j]
                    rows.append(
                        ReviewRow(
                            a,
                            b,
                            sim,
                            claims[reps[a]].display_text(),
                            claims[reps[b]].display_text(),
                        )
                    )
    rows.sort(key=lambda r: (-r.similarity, r.cluster_a, r.cluster_b))

    audit = [
        AuditRow(cluster_id, len(members))
        for cluster_id, members in sorted(clusters.items())
        if len(members) > audit_size
    ]
    audit.sort(key=lambda r: (-r.size, r.cluster_id))
    return rows, audit


def apply_manual_merges(
    partition: Partition, decisions: list[tuple[str, str]]
) -> Partition:
    """Union the decided cluster pairs (transitively) and re-canonicalize."""
    existing = set(partition.clusters())
    uf = UnionFind()
    for cluster_id in existing:
        uf.find(cluster_id)
    for a, b in decisions:
        for cluster_id in (a, b):
            if cluster_id not in existing:
                raise UnknownClusterId(f"cluster {cluster_id!r} not in partition")
        uf.union(a, b)
    merged = {cid: uf.find(cluster_id) for cid, cluster_id in partition.assignment.items()}
    return Partition(merged).canonicalize()
