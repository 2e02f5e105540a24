from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from claimcluster.core import (
    Claim,
    Partition,
    canonical_pair_key,
    normalize_text,
    validate_dataset,
)
from claimcluster.errors import IdenticalIds


class TestNormalizeText:
    def test_casefold_and_collapse(self):
        # U+2011 non-breaking hyphen compatibility-normalizes to U+2010
        assert normalize_text("  COVID‑19   Vaccine ") == "covid‐19 vaccine"

    def test_empty(self):
        assert normalize_text("") == ""

    def test_tab_collapses(self):
        assert normalize_text("Graphene\tOXIDE") == "graphene oxide"

    @given(st.text(max_size=60))
    def test_idempotent(self, s):
        once = normalize_text(s)
        assert normalize_text(once) == once

    @given(st.text(max_size=60))
    def test_no_leading_trailing_or_double_spaces(self, s):
        out = normalize_text(s)
        assert out == out.strip()
        assert "  " not in out


class TestCanonicalPairKey:
    def test_orders_lexicographically(self):
        assert canonical_pair_key("c9", "c2") == ("c2", "c9")

    def test_already_ordered(self):
        assert canonical_pair_key("c2", "c9") == ("c2", "c9")

    def test_identical_ids(self):
        with pytest.raises(IdenticalIds):
            canonical_pair_key("x", "x")

    @given(st.text(min_size=1, max_size=20), st.text(min_size=1, max_size=20))
    def test_symmetric(self, a, b):
        if a == b:
            return
        assert canonical_pair_key(a, b) == canonical_pair_key(b, a)


class TestValidateDataset:
    def _claim(self, cid="c1", **kw):
        base = dict(id=cid, text="some text", language="en")
        base.update(kw)
        return Claim(**base)

    def test_duplicate_ids(self):
        report = validate_dataset([self._claim("c1"), self._claim("c1")])
        assert report.duplicate_ids == ["c1"]
        assert not report.valid

    def test_well_formed(self):
        claims = [self._claim(f"c{i}", published_at="2022-01-05") for i in range(3)]
        report = validate_dataset(claims)
        assert report.valid

    def test_bad_date(self):
        report = validate_dataset([self._claim(published_at="2022-13-40")])
        assert report.bad_dates == ["c1"]

    def test_empty_text_and_language(self):
        report = validate_dataset([self._claim(text="   ", language="EN")])
        assert report.empty_texts == ["c1"]
        assert report.bad_languages == ["c1"]

    def test_empty_id(self):
        report = validate_dataset([self._claim(cid="  ")])
        assert report.empty_ids == ["  "]


class TestClaim:
    def test_published_date_parses(self):
        claim = Claim(id="c", text="t", language="en", published_at="2021-06-05")
        assert str(claim.published_date()) == "2021-06-05"

    def test_published_date_malformed_is_none(self):
        claim = Claim(id="c", text="t", language="en", published_at="not-a-date")
        assert claim.published_date() is None

    def test_display_text_prefers_translation(self):
        claim = Claim(id="c", text="hola", text_en="hello", language="es")
        assert claim.display_text() == "hello"
        assert Claim(id="c", text="hola", language="es").display_text() == "hola"


class TestPartition:
    def test_canonicalize_uses_smallest_member(self):
        part = Partition({"b": "x", "a": "x", "z": "y"}).canonicalize()
        assert part.assignment == {"a": "a", "b": "a", "z": "z"}

    @given(
        st.dictionaries(
            st.text(min_size=1, max_size=6),
            st.integers(min_value=0, max_value=5),
            min_size=1,
            max_size=30,
        )
    )
    def test_canonicalize_is_a_fixpoint(self, raw):
        part = Partition({k: str(v) for k, v in raw.items()}).canonicalize()
        assert part.canonicalize() == part

    def test_clusters_and_counts(self):
        part = Partition({"a": "a", "b": "a", "c": "c"})
        assert part.clusters() == {"a": ["a", "b"], "c": ["c"]}
        assert part.n_clusters() == 2
        assert len(part) == 3
