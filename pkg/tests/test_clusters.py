from __future__ import annotations

import numpy as np
import pytest

from claimcluster.clusters import (
    UnionFind,
    apply_manual_merges,
    build_subclusters,
    merge_pass,
    propose_manual_merges,
    propose_merge_candidates,
)
from claimcluster.core import (
    Claim,
    ClaimPair,
    ConsensusPolicy,
    Label,
    LabeledPair,
    Partition,
    PipelineParams,
    Provenance,
)
from claimcluster.errors import UnknownClaimId, UnknownClusterId, ZeroVector
from claimcluster.pairs import AnnotatorKind, AnnotatorSpec
from claimcluster.vecmath import EmbeddingSet
from oracles import connected_components


def similar(a: str, b: str) -> LabeledPair:
    return LabeledPair(ClaimPair(a, b), Label.SIMILAR, Provenance.CONSENSUS)


def claims_for(ids):
    return {cid: Claim(id=cid, text=f"text {cid}", language="en") for cid in ids}


class TestUnionFind:
    def test_basic(self):
        uf = UnionFind()
        assert uf.union("a", "b")
        assert not uf.union("b", "a")
        assert uf.find("a") == uf.find("b")
        assert uf.find("c") == "c"

    def test_transitive(self):
        uf = UnionFind()
        uf.union("a", "b")
        uf.union("b", "c")
        assert uf.find("a") == uf.find("c")


class TestBuildSubclusters:
    def test_chain_links_three_claims(self):
        part = build_subclusters(
            [similar("A", "B"), similar("B", "C")], {"A", "B", "C", "D"}
        )
        assert part.clusters() == {"A": ["A", "B", "C"], "D": ["D"]}

    def test_no_pairs_all_singletons(self):
        part = build_subclusters([], {"a", "b", "c"})
        assert part.n_clusters() == 3

    def test_dissimilar_pairs_ignored(self):
        pair = LabeledPair(ClaimPair("a", "b"), Label.DISSIMILAR, Provenance.CONSENSUS)
        part = build_subclusters([pair], {"a", "b"})
        assert part.n_clusters() == 2

    def test_matches_traversal_oracle_on_random_graphs(self):
        rng = np.random.default_rng(3)
        universe = {f"n{i:03d}" for i in range(200)}
        ids = sorted(universe)
        for _ in range(10):
            n_edges = int(rng.integers(0, 300))
            raw = set()
            while len(raw) < n_edges:
                i, j = rng.integers(0, 200, size=2)
                if i != j:
                    raw.add((ids[min(i, j)], ids[max(i, j)]))
            pairs = [similar(a, b) for a, b in raw]
            part = build_subclusters(pairs, universe)
            assert part.assignment == connected_components(list(raw), universe)

    def test_unknown_claim(self):
        with pytest.raises(UnknownClaimId):
            build_subclusters([similar("a", "ghost")], {"a", "b"})


class TestProposeMergeCandidates:
    def test_two_singletons_at_cos_08(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [0.8, 0.6]})
        part = Partition({"a": "a", "b": "b"})
        cands = propose_merge_candidates(part, emb, PipelineParams())
        assert len(cands) == 1
        cand = cands[0]
        assert (cand.cluster_a, cand.cluster_b) == ("a", "b")
        assert cand.centroid_similarity == pytest.approx(0.8, abs=1e-9)
        assert (cand.representative_a, cand.representative_b) == ("a", "b")

    def test_below_threshold_dropped(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [0.6, 0.8]})
        part = Partition({"a": "a", "b": "b"})
        assert propose_merge_candidates(part, emb, PipelineParams()) == []

    def test_single_cluster_empty(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [0.9, 0.1]})
        part = Partition({"a": "a", "b": "a"})
        assert propose_merge_candidates(part, emb, PipelineParams()) == []

    def test_zero_centroid_raises(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [-1.0, 0.0], "c": [0.0, 1.0]})
        part = Partition({"a": "a", "b": "a", "c": "c"})
        with pytest.raises(ZeroVector):
            propose_merge_candidates(part, emb, PipelineParams())

    def test_missing_embedding(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0]})
        part = Partition({"a": "a", "b": "b"})
        with pytest.raises(UnknownClaimId):
            propose_merge_candidates(part, emb, PipelineParams())

    def test_representative_is_centroid_nearest(self):
        # b sits between a and c, so it is nearest the cluster centroid
        emb = EmbeddingSet(
            2, {"a": [1.0, 0.0], "b": [0.924, 0.383], "c": [0.707, 0.707], "z": [0.0, 1.0]}
        )
        part = Partition({"a": "a", "b": "a", "c": "a", "z": "z"})
        cands = propose_merge_candidates(
            part, emb, PipelineParams(merge_sim_threshold=0.0)
        )
        assert cands[0].representative_a == "b"


def oracle_annotators(truth: Partition, n: int = 3) -> list[AnnotatorSpec]:
    return [
        AnnotatorSpec(f"oracle{i}", AnnotatorKind.ORACLE, partition=truth) for i in range(n)
    ]


class TestMergePass:
    def setup_method(self):
        self.emb = EmbeddingSet(
            2,
            {
                "a": [1.0, 0.0],
                "b": [0.98, 0.2],
                "c": [0.95, 0.31],
                "d": [0.0, 1.0],
            },
        )
        self.claims = claims_for(["a", "b", "c", "d"])

    def test_similar_consensus_unions(self):
        part = Partition({"a": "a", "b": "b", "c": "c", "d": "d"})
        truth = Partition({"a": "g", "b": "g", "c": "g", "d": "h"})
        cands = propose_merge_candidates(part, self.emb, PipelineParams())
        merged = merge_pass(
            part, cands, oracle_annotators(truth), ConsensusPolicy.UNANIMOUS, self.claims
        )
        assert merged.clusters() == {"a": ["a", "b", "c"], "d": ["d"]}

    def test_dissimilar_consensus_leaves_partition(self):
        part = Partition({"a": "a", "b": "b", "c": "c", "d": "d"})
        truth = Partition({"a": "1", "b": "2", "c": "3", "d": "4"})
        cands = propose_merge_candidates(part, self.emb, PipelineParams())
        merged = merge_pass(
            part, cands, oracle_annotators(truth), ConsensusPolicy.UNANIMOUS, self.claims
        )
        assert merged == part.canonicalize()

    def test_chain_unions_transitively(self):
        part = Partition({"a": "a", "b": "b", "c": "c", "d": "d"})
        truth = Partition({"a": "g", "b": "g", "c": "g", "d": "h"})
        # force a sparse candidate list (a~b, b~c but not a~c)
        cands = [
            c
            for c in propose_merge_candidates(part, self.emb, PipelineParams())
            if (c.cluster_a, c.cluster_b) != ("a", "c")
        ]
        merged = merge_pass(
            part, cands, oracle_annotators(truth), ConsensusPolicy.UNANIMOUS, self.claims
        )
        assert merged.clusters()["a"] == ["a", "b", "c"]

    def test_output_coarsens_input(self):
        rng = np.random.default_rng(11)
        vectors = {f"p{i:02d}": rng.normal(size=4) for i in range(24)}
        emb = EmbeddingSet(4, vectors)
        ids = sorted(vectors)
        part = Partition({cid: ids[i // 3 * 3] for i, cid in enumerate(ids)}).canonicalize()
        truth = Partition({cid: ids[i // 6 * 6] for i, cid in enumerate(ids)}).canonicalize()
        cands = propose_merge_candidates(
            part, emb, PipelineParams(merge_sim_threshold=0.0, merge_top_k=5)
        )
        merged = merge_pass(
            part, cands, oracle_annotators(truth), ConsensusPolicy.UNANIMOUS,
            claims_for(ids),
        )
        assert merged.n_clusters() <= part.n_clusters()
        merged_of = merged.assignment
        for members in part.clusters().values():
            assert len({merged_of[m] for m in members}) == 1


class TestManualMerges:
    def test_review_rows_above_threshold(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [0.9, 0.436], "c": [0.0, 1.0]})
        part = Partition({"a": "a", "b": "b", "c": "c"})
        rows, audit = propose_manual_merges(part, emb, claims_for(["a", "b", "c"]), 0.75)
        assert [(r.cluster_a, r.cluster_b) for r in rows] == [("a", "b")]
        assert rows[0].similarity == pytest.approx(0.9, abs=1e-3)
        assert audit == []

    def test_all_below_threshold_empty(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [0.0, 1.0]})
        part = Partition({"a": "a", "b": "b"})
        rows, _ = propose_manual_merges(part, emb, claims_for(["a", "b"]), 0.75)
        assert rows == []

    def test_threshold_is_strict(self):
        emb = EmbeddingSet(2, {"a": [1.0, 0.0], "b": [0.75, np.sqrt(1 - 0.75**2)]})
        part = Partition({"a": "a", "b": "b"})
        rows, _ = propose_manual_merges(part, emb, claims_for(["a", "b"]), 0.75)
        assert rows == []  # similarity == threshold is not strictly greater

    def test_audit_lists_oversized_clusters(self):
        rng = np.random.default_rng(2)
        ids = [f"c{i:02d}" for i in range(25)]
        emb = EmbeddingSet(3, {cid: rng.normal(size=3) for cid in ids})
        part = Partition({cid: "c00" for cid in ids})
        _, audit = propose_manual_merges(part, emb, claims_for(ids), 0.75)
        assert [(a.cluster_id, a.size) for a in audit] == [("c00", 25)]

    def test_apply_decisions(self):
        part = Partition({"a": "a", "b": "b", "c": "c"})
        merged = apply_manual_merges(part, [("a", "b")])
        assert merged.n_clusters() == 2
        assert apply_manual_merges(part, []) == part.canonicalize()

    def test_apply_chain_transitive(self):
        part = Partition({"a": "a", "b": "b", "c": "c"})
        merged = apply_manual_merges(part, [("a", "b"), ("b", "c")])
        assert merged.n_clusters() == 1

    def test_apply_unknown_cluster(self):
        with pytest.raises(UnknownClusterId):
            apply_manual_merges(Partition({"a": "a"}), [("a", "ghost")])
