"""Clustering baselines that do not need the cluster count up front:
hierarchical agglomerative clustering with a distance threshold, and
affinity propagation.

The agglomerative merge loop is the generic Lance-Williams scheme over a
dense distance matrix with a nearest-neighbor cache: O(n^2) memory and
between O(n^2) and O(n^3) time. That is fine up to roughly 20K points
and keeps the merge order fully deterministic (ties break on the
smallest cluster-id pair), so results are invariant under input
permutation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Partition
from .errors import EmptyInput, WardMetricViolation
from .vecmath import EmbeddingSet


class Linkage(str, enum.Enum):
    WARD = "ward"
    COMPLETE = "complete"
    AVERAGE = "average"
    SINGLE = "single"


@dataclass(frozen=True)
class AgglomerativeConfig:
    linkage: Linkage = Linkage.WARD
    distance_threshold: float = 1.0
    metric: str = "euclidean"  # "euclidean" (over unit vectors) or "cosine"

    def __post_init__(self):
        if self.distance_threshold <= 0:
            raise ValueError("distance_threshold must be positive")
        if self.linkage is Linkage.WARD and self.metric != "euclidean":
            raise WardMetricViolation("ward linkage requires the euclidean metric")


@dataclass(frozen=True)
class AffinityPropagationConfig:
    damping: float = 0.9
    preference: float | None = None  # None: median pairwise similarity
    max_iterations: int = 500
    convergence_window: int = 50

    def __post_init__(self):
        if not 0.5 <= self.damping < 1.0:
            raise ValueError("damping must be in [0.5, 1)")


@dataclass
class AffinityResult:
    partition: Partition
    converged: bool
    n_iterations: int
    exemplars: list[str]


def _pairwise_distances(matrix: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        sq = np.sum(matrix**2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (matrix @ matrix.T)
        return np.sqrt(np.clip(d2, 0.0, None))
    if metric == "cosine":
        return 1.0 - np.clip(matrix @ matrix.T, -1.0, 1.0)
    raise ValueError(f"unknown metric {metric!r}")


def agglomerative_cluster(
    embeddings: EmbeddingSet, config: AgglomerativeConfig = AgglomerativeConfig()
) -> Partition:
    """Bottom-up merging until the cheapest remaining merge would cost
    more than the distance threshold (merges at the threshold proceed)."""
    n = len(embeddings)
    if n == 0:
        raise EmptyInput("cannot cluster zero vectors")
    ids = list(embeddings.ids)
    if n == 1:
        return Partition({ids[0]: ids[0]})

    dist = _pairwise_distances(embeddings.matrix, config.metric)
    np.fill_diagonal(dist, np.inf)

    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    labels = list(ids)  # slot -> smallest member id
    members: list[list[str]] = [[cid] for cid in ids]
    nn_dist = dist.min(axis=1)
    nn_idx = dist.argmin(axis=1)

    threshold = config.distance_threshold
    linkage = config.linkage

    for _ in range(n - 1):
        m = nn_dist[active].min()
        if m > threshold:
            break
        # all slot pairs achieving the minimum, tie-broken on labels
        best_pair = None
        best_labels = None
        for i in np.flatnonzero(active & (nn_dist == m)):
            for j in np.flatnonzero(dist[i] == m):
                la, lb = sorted((labels[i], labels[int(j)]))
                if best_labels is None or (la, lb) < best_labels:
                    best_labels = (la, lb)
                    best_pair = (int(i), int(j))
        i, j = best_pair

        d_ij = dist[i, j]
        others = active.copy()
        others[i] = others[j] = False
        d_i = dist[i, others]
        d_j = dist[j, others]
        if linkage is Linkage.SINGLE:
            new = np.minimum(d_i, d_j)
        elif linkage is Linkage.COMPLETE:
            new = np.maximum(d_i, d_j)
        elif linkage is Linkage.AVERAGE:
            new = (sizes[i] * d_i + sizes[j] * d_j) / (sizes[i] + sizes[j])
        else:  # ward
            nk = sizes[others]
            na, nb = sizes[i], sizes[j]
            new = np.sqrt(
                np.clip(
                    ((na + nk) * d_i**2 + (nb + nk) * d_j**2 - nk * d_ij**2)
                    / (na + nb + nk),
                    0.0,
                    None,
                )
            )

        dist[i, others] = new
        dist[others, i] = new
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        dist[i, i] = np.inf
        active[j] = False
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        members[j] = []
        labels[i] = min(labels[i], labels[j])

        nn_dist[j] = np.inf
        if active.sum() == 1:
            break
        nn_dist[i] = dist[i].min()
        nn_idx[i] = dist[i].argmin()
        # refresh rows that either got closer to the merged cluster or
        # whose cached nearest neighbor was one of the merged slots
        for pos, k in enumerate(np.flatnonzero(others)):
            if new[pos] <= nn_dist[k]:
                nn_dist[k] = new[pos]
                nn_idx[k] = i
            elif nn_idx[k] == i or nn_idx[k] == j:
                nn_dist[k] = dist[k].min()
                nn_idx[k] = dist[k].argmin()

    assignment = {}
    for slot in np.flatnonzero(active):
        for cid in members[slot]:
            assignment[cid] = labels[slot]
    return Partition(assignment).canonicalize()


def affinity_propagation(
    embeddings: EmbeddingSet, config: AffinityPropagationConfig = AffinityPropagationConfig()
) -> AffinityResult:
    """Responsibility/availability message passing over the cosine
    similarity matrix until the exemplar set is stable for the
    convergence window (or the iteration budget runs out; that case is
    flagged, not fatal)."""
    n = len(embeddings)
    if n == 0:
        raise EmptyInput("cannot cluster zero vectors")
    ids = list(embeddings.ids)
    if n == 1:
        return AffinityResult(Partition({ids[0]: ids[0]}), True, 0, [ids[0]])

    S = np.clip(embeddings.matrix @ embeddings.matrix.T, -1.0, 1.0)
    off_diag = S[~np.eye(n, dtype=bool)]
    preference = float(np.median(off_diag)) if config.preference is None else config.preference
    np.fill_diagonal(S, preference)

    R = np.zeros((n, n))
    A = np.zeros((n, n))
    damping = config.damping
    idx = np.arange(n)

    stable_for = 0
    last_indicator: np.ndarray | None = None
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        AS = A + S
        first_idx = AS.argmax(axis=1)
        first = AS[idx, first_idx]
        AS[idx, first_idx] = -np.inf
        second = AS.max(axis=1)
        R_new = S - first[:, None]
        R_new[idx, first_idx] = S[idx, first_idx] - second
        R = damping * R + (1.0 - damping) * R_new

        Rp = np.maximum(R, 0.0)
        np.fill_diagonal(Rp, R.diagonal())
        A_new = Rp.sum(axis=0)[None, :] - Rp
        dA = A_new.diagonal().copy()
        A_new = np.minimum(A_new, 0.0)
        np.fill_diagonal(A_new, dA)
        A = damping * A + (1.0 - damping) * A_new

        indicator = (R.diagonal() + A.diagonal()) > 0
        if last_indicator is not None and np.array_equal(indicator, last_indicator):
            stable_for += 1
        else:
            stable_for = 0
        last_indicator = indicator
        if stable_for >= config.convergence_window and indicator.any():
            converged = True
            break

    evidence = R.diagonal() + A.diagonal()
    exemplar_rows = np.flatnonzero(evidence > 0)
    if exemplar_rows.size == 0:
        exemplar_rows = np.array([int(np.argmax(evidence))])

    # each point goes to its most similar exemplar (argmax takes the
    # first, i.e. smallest-id, exemplar on ties); exemplars self-assign
    choice = np.argmax(S[:, exemplar_rows], axis=1)
    assignment_rows = exemplar_rows[choice]
    assignment_rows[exemplar_rows] = exemplar_rows
    partition = Partition(
        {ids[k]: ids[int(assignment_rows[k])] for k in range(n)}
    ).canonicalize()
    exemplars = sorted(ids[int(e)] for e in exemplar_rows)
    return AffinityResult(partition, converged, iterations, exemplars)
