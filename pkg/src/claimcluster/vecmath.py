"""Dense-vector primitives: cosine similarity, normalization, centroids."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, ZeroVector

Vector = np.ndarray


def as_vector(v: Sequence[float] | Vector) -> Vector:
    return np.asarray(v, dtype=np.float64)


def l2_normalize(v: Sequence[float] | Vector) -> Vector:
    """Scale to unit length; direction preserved."""
    vec = as_vector(v)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return vec / norm


def cosine_similarity(u: Sequence[float] | Vector, v: Sequence[float] | Vector) -> float:
    """dot(u,v) / (|u||v|), clamped to [-1, 1] against rounding."""
    uu = as_vector(u)
    vv = as_vector(v)
    if uu.shape != vv.shape:
        raise DimensionMismatch(f"dimensions {uu.shape[0]} and {vv.shape[0]} differ")
    nu = float(np.linalg.norm(uu))
    nv = float(np.linalg.norm(vv))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    sim = float(np.dot(uu, vv) / (nu * nv))
    return max(-1.0, min(1.0, sim))


def centroid(vectors: Iterable[Sequence[float] | Vector]) -> Vector:
    """Component-wise mean. Not re-normalized: similarity computations
    normalize lazily, so a degenerate zero centroid only errors when it
    is actually compared."""
    mats = [as_vector(v) for v in vectors]
    if not mats:
        raise EmptyInput("centroid of zero vectors")
    dim = mats[0].shape[0]
    for m in mats[1:]:
        if m.shape[0] != dim:
            raise DimensionMismatch(f"dimensions {dim} and {m.shape[0]} differ")
    return np.mean(np.stack(mats), axis=0)


class EmbeddingSet:
    """Unit-norm vectors keyed by claim id, fixed dimension.

    Vectors are L2-normalized on ingest. Internally a dense matrix with
    a stable (sorted) id order, so matrix-level operations and iteration
    are deterministic.
    """

    def __init__(self, dim: int, vectors: Mapping[str, Sequence[float] | Vector]):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.ids: list[str] = sorted(vectors)
        self._row: dict[str, int] = {cid: i for i, cid in enumerate(self.ids)}
        matrix = np.zeros((len(self.ids), dim), dtype=np.float64)
        for cid, vec in vectors.items():
            arr = as_vector(vec)
            if arr.shape != (dim,):
                raise DimensionMismatch(
                    f"vector for {cid!r} has dimension {arr.shape[0]}, expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {cid!r} has non-finite components")
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise ZeroVector(f"vector for {cid!r} is zero")
            matrix[self._row[cid]] = arr / norm
        self.matrix = matrix

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, claim_id: str) -> bool:
        return claim_id in self._row

    def vector(self, claim_id: str) -> Vector:
        return self.matrix[self._row[claim_id]]

    def items(self) -> Iterable[tuple[str, Vector]]:
        for cid in self.ids:
            yield cid, self.matrix[self._row[cid]]

    def subset_matrix(self, claim_ids: Sequence[str]) -> Vector:
        rows = [self._row[cid] for cid in claim_ids]
        return self.matrix[rows]
