"""Approximate nearest-neighbor search over claim embeddings.

A multilayer proximity graph searched greedily from the top layer down,
plus an exhaustive-scan twin with the identical contract that serves as
the exactness oracle. Distance is 1 - cosine similarity; embeddings are
unit-norm, so that is 1 - dot.

Construction is fully deterministic: node levels are drawn from a seeded
generator as floor(-ln(u) * level_multiplier), and insertion follows the
sorted claim-id order of the embedding set.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import pickle
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyIndex, EmptyInput, ZeroVector
from .vecmath import EmbeddingSet, Vector, as_vector


@dataclass(frozen=True)
class HnswParams:
    m: int = 16
    ef_construction: int = 200
    ef_search: int = 100
    seed: int = 0

    @property
    def level_multiplier(self) -> float:
        return 1.0 / math.log(self.m)

    @property
    def m0(self) -> int:
        # layer 0 keeps the standard doubled degree allowance
        return 2 * self.m


class HnswIndex:
    """Frozen after build(); queries are pure reads."""

    def __init__(self, dim: int, params: HnswParams):
        self.dim = dim
        self.params = params
        self.ids: list[str] = []
        self._row: dict[str, int] = {}
        self._matrix = np.zeros((0, dim), dtype=np.float64)
        # per node: one neighbor list per layer 0..level
        self._neighbors: list[list[list[int]]] = []
        self._levels: list[int] = []
        self._entry: int | None = None
        self._max_level: int = -1
        self._rng = np.random.default_rng(params.seed)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def entry_point(self) -> str | None:
        return None if self._entry is None else self.ids[self._entry]

    def _draw_level(self) -> int:
        u = 1.0 - float(self._rng.random())  # in (0, 1]
        return int(math.floor(-math.log(u) * self.params.level_multiplier))

    def _distances(self, q: Vector, rows: list[int]) -> np.ndarray:
        return 1.0 - self._matrix[rows] @ q

    def _search_layer(
        self, q: Vector, entry_rows: list[int], layer: int, ef: int
    ) -> list[tuple[float, int]]:
        """Beam search at one layer; returns (distance, row) sorted ascending.

        With ef >= number of nodes the beam never prunes, so the search
        degenerates to an exact scan of the layer's connected component.
        """
        visited = set(entry_rows)
        dists = self._distances(q, entry_rows)
        candidates: list[tuple[float, int]] = []  # min-heap
        best: list[tuple[float, int]] = []  # max-heap via negated distance
        for row, d in zip(entry_rows, dists):
            heapq.heappush(candidates, (float(d), row))
            heapq.heappush(best, (-float(d), row))

        while candidates:
            d_c, c = heapq.heappop(candidates)
            if len(best) >= ef and d_c > -best[0][0]:
                break
            fresh = [r for r in self._neighbors[c][layer] if r not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            for row, d in zip(fresh, self._distances(q, fresh)):
                d = float(d)
                if len(best) < ef:
                    heapq.heappush(candidates, (d, row))
                    heapq.heappush(best, (-d, row))
                elif d < -best[0][0]:
                    heapq.heappush(candidates, (d, row))
                    heapq.heappushpop(best, (-d, row))
        out = [(-nd, row) for nd, row in best]
        out.sort()
        return out

    def _select_neighbors(self, candidates: list[tuple[float, int]], m: int) -> list[int]:
        """Diversity-aware selection: keep a candidate only when it is
        closer to the query than to everything already kept, then fill
        back the nearest pruned ones up to m."""
        if len(candidates) <= m:
            return [row for _, row in candidates]
        kept: list[int] = []
        pruned: list[tuple[float, int]] = []
        for d_e, e in sorted(candidates):
            if len(kept) >= m:
                break
            if not kept:
                kept.append(e)
                continue
            d_to_kept = float(np.min(self._distances(self._matrix[e], kept)))
            if d_e < d_to_kept:
                kept.append(e)
            else:
                pruned.append((d_e, e))
        for d_e, e in pruned:
            if len(kept) >= m:
                break
            kept.append(e)
        return kept

    def insert(self, claim_id: str, vector: Vector) -> None:
        if claim_id in self._row:
            raise ValueError(f"duplicate id {claim_id!r}")
        vec = as_vector(vector)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector has dimension {vec.shape[0]}, index expects {self.dim}"
            )
        row = len(self.ids)
        self.ids.append(claim_id)
        self._row[claim_id] = row
        self._matrix = np.vstack([self._matrix, vec[None, :]])
        level = self._draw_level()
        self._levels.append(level)
        self._neighbors.append([[] for _ in range(level + 1)])

        if self._entry is None:
            self._entry = row
            self._max_level = level
            return

        ep = [self._entry]
        for layer in range(self._max_level, level, -1):
            ep = [r for _, r in self._search_layer(vec, ep, layer, 1)]

        for layer in range(min(level, self._max_level), -1, -1):
            found = self._search_layer(vec, ep, layer, self.params.ef_construction)
            cap = self.params.m0 if layer == 0 else self.params.m
            chosen = self._select_neighbors(found, self.params.m)
            self._neighbors[row][layer] = list(chosen)
            for nb in chosen:
                nb_list = self._neighbors[nb][layer]
                nb_list.append(row)
                if len(nb_list) > cap:
                    cand = list(zip(self._distances(self._matrix[nb], nb_list), nb_list))
                    cand = [(float(d), r) for d, r in cand]
                    self._neighbors[nb][layer] = self._select_neighbors(cand, cap)
            ep = chosen if chosen else ep

        if level > self._max_level:
            self._entry = row
            self._max_level = level

    def query(
        self, q: Vector, k: int, exclude: str | None = None, ef_search: int | None = None
    ) -> list[tuple[str, float]]:
        if not self.ids:
            raise EmptyIndex("query against an empty index")
        vec = as_vector(q)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"query has dimension {vec.shape[0]}, index expects {self.dim}"
            )
        ef = max(ef_search if ef_search is not None else self.params.ef_search, k + 1)
        ep = [self._entry]
        for layer in range(self._max_level, 0, -1):
            ep = [r for _, r in self._search_layer(vec, ep, layer, 1)]
        found = self._search_layer(vec, ep, 0, ef)
        results = [
            (self.ids[row], max(-1.0, min(1.0, 1.0 - d)))
            for d, row in found
            if exclude is None or self.ids[row] != exclude
        ]
        results.sort(key=lambda t: (-t[1], t[0]))
        return results[:k]


def build(embeddings: EmbeddingSet, params: HnswParams = HnswParams()) -> HnswIndex:
    """Index every embedding; insertion order is the sorted id order, so
    equal seeds give bit-identical graphs."""
    if len(embeddings) == 0:
        raise EmptyInput("cannot build an index over zero vectors")
    index = HnswIndex(embeddings.dim, params)
    for cid, vec in embeddings.items():
        index.insert(cid, vec)
    return index


def query_knn(
    index: HnswIndex,
    q: Vector,
    k: int,
    exclude: str | None = None,
    ef_search: int | None = None,
) -> list[tuple[str, float]]:
    """Top-k ids by similarity (non-increasing, ties by ascending id);
    `exclude` is never returned; result clamped to the index size."""
    return index.query(q, k, exclude=exclude, ef_search=ef_search)


def brute_force_knn(
    embeddings: EmbeddingSet, q: Vector, k: int, exclude: str | None = None
) -> list[tuple[str, float]]:
    """Same contract as query_knn, exact by exhaustive scan."""
    if len(embeddings) == 0:
        raise EmptyInput("cannot scan an empty embedding set")
    vec = as_vector(q)
    if vec.shape != (embeddings.dim,):
        raise DimensionMismatch(
            f"query has dimension {vec.shape[0]}, embeddings have {embeddings.dim}"
        )
    qn = float(np.linalg.norm(vec))
    if qn == 0.0:
        raise ZeroVector("query vector is zero")
    sims = embeddings.matrix @ (vec / qn)
    scored = [
        (cid, max(-1.0, min(1.0, float(s))))
        for cid, s in zip(embeddings.ids, sims)
        if cid != exclude
    ]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def embeddings_digest(embeddings: EmbeddingSet) -> str:
    """Content hash used to key the optional index cache."""
    h = hashlib.sha256()
    h.update(str(embeddings.dim).encode())
    for cid, vec in embeddings.items():
        h.update(cid.encode())
        h.update(np.asarray(vec, dtype=np.float32).tobytes())
    return h.hexdigest()


def save_index(index: HnswIndex, embeddings: EmbeddingSet, path: str) -> None:
    """Binary cache keyed by (embeddings digest, params, seed); purely an
    optimization, correctness never depends on it."""
    payload = {
        "digest": embeddings_digest(embeddings),
        "params": index.params,
        "index": index,
    }
    with open(path, "wb") as fh:
        pickle.dump(payload, fh)


def load_index(
    path: str, embeddings: EmbeddingSet, params: HnswParams
) -> HnswIndex | None:
    """Return the cached index when the key matches, else None."""
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError):
        return None
    if payload.get("digest") != embeddings_digest(embeddings):
        return None
    if payload.get("params") != params:
        return None
    return payload["index"]
