from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from claimcluster.core import Claim, Partition
from claimcluster.vecmath import EmbeddingSet


def make_planted(
    n_points: int,
    n_groups: int,
    dim: int,
    seed: int,
    noise: float = 0.15,
) -> tuple[EmbeddingSet, Partition]:
    """Well-separated planted clusters: orthonormal group centers plus
    small spherical noise, renormalized. Group sizes differ by at most
    one and every group has at least two members."""
    assert n_groups <= dim and n_points >= 2 * n_groups
    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    truth: dict[str, str] = {}
    sizes = [n_points // n_groups] * n_groups
    for i in range(n_points % n_groups):
        sizes[i] += 1
    point = 0
    for g in range(n_groups):
        center = np.zeros(dim)
        center[g] = 1.0
        for _ in range(sizes[g]):
            cid = f"c{point:04d}"
            direction = rng.normal(size=dim)
            direction /= np.linalg.norm(direction)
            vec = center + noise * direction
            vectors[cid] = vec / np.linalg.norm(vec)
            truth[cid] = f"g{g:02d}"
            point += 1
    return EmbeddingSet(dim, vectors), Partition(truth).canonicalize()


def planted_claims(embeddings: EmbeddingSet) -> dict[str, Claim]:
    return {
        cid: Claim(id=cid, text=f"claim text {cid}", text_en=None, language="en")
        for cid in embeddings.ids
    }


@pytest.fixture(scope="session")
def planted_500():
    """The 500-point, 60-group recovery fixture; construction asserts
    the separation margins it promises."""
    embeddings, truth = make_planted(500, 60, 64, seed=20240817)
    matrix = embeddings.matrix
    sims = matrix @ matrix.T
    groups = truth.clusters()
    intra_min = 1.0
    inter_max = -1.0
    row = {cid: i for i, cid in enumerate(embeddings.ids)}
    for members in groups.values():
        idx = [row[m] for m in members]
        block = sims[np.ix_(idx, idx)]
        intra_min = min(intra_min, float(block.min()))
    labels = np.array([truth.assignment[cid] for cid in embeddings.ids])
    for i, cid in enumerate(embeddings.ids):
        other = labels != labels[i]
        inter_max = max(inter_max, float(sims[i, other].max()))
    assert intra_min > 0.9, intra_min
    assert inter_max < 0.3, inter_max
    return embeddings, truth
