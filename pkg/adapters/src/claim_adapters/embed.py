"""Sentence-embedding exporter.

Reads a claims JSON-lines file and writes the toolkit's embeddings
format: a {"dim": D} header line followed by one {"id", "vector"} row
per claim, every vector L2-normalized. Encoders are deterministic given
the model and text selector.

Two backends: any sentence-transformers model by name, and a built-in
feature-hashing encoder (`hash/<dim>`) that needs no model download and
keeps the protocol testable offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_WORD = re.compile(r"\w+", re.UNICODE)


class AdapterError(Exception):
    pass


@dataclass(frozen=True)
class EmbedderSpec:
    model: str
    text_field: str = "english"  # "english" (text_en, falling back) or "original"
    batch_size: int = 32
    device: str | None = None

    def __post_init__(self):
        if self.text_field not in ("english", "original"):
            raise ValueError("text_field must be 'english' or 'original'")


class HashingEncoder:
    """Signed feature hashing over casefolded words and character
    trigrams. Not a learned model, but deterministic, language-agnostic,
    and similarity-preserving enough to exercise the pipeline."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def _features(self, text: str) -> list[str]:
        folded = " ".join(text.casefold().split())
        words = _WORD.findall(folded)
        grams = [folded[i : i + 3] for i in range(max(0, len(folded) - 2))]
        return words + grams

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for feature in self._features(text):
                digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
                value = int.from_bytes(digest, "big")
                bucket = value % self.dim
                sign = 1.0 if (value >> 63) & 1 else -1.0
                out[row, bucket] += sign
            norm = np.linalg.norm(out[row])
            if norm == 0.0:
                out[row, 0] = 1.0  # empty text still needs a direction
            else:
                out[row] /= norm
        return out


class SentenceTransformerEncoder:
    def __init__(self, model_name: str, batch_size: int, device: str | None):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise AdapterError("sentence-transformers is not installed") from exc
        try:
            self._model = SentenceTransformer(model_name, device=device)
        except Exception as exc:
            raise AdapterError(f"could not load model {model_name!r}: {exc}") from exc
        self._batch_size = batch_size
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = self._model.encode(
            texts,
            batch_size=self._batch_size,
            normalize_embeddings=True,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float64)


def build_encoder(spec: EmbedderSpec):
    if spec.model.startswith("hash/"):
        return HashingEncoder(int(spec.model.split("/", 1)[1]))
    return SentenceTransformerEncoder(spec.model, spec.batch_size, spec.device)


def _read_claims_rows(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            for key in ("id", "text", "language"):
                if key not in row:
                    raise AdapterError(f"{path}:{lineno}: claim missing {key!r}")
            rows.append(row)
    return rows


def select_text(row: dict, text_field: str) -> tuple[str, bool]:
    """Returns (text, fell_back). The english selector falls back to the
    original text when no translation is present."""
    if text_field == "original":
        return row["text"], False
    text_en = row.get("text_en")
    if text_en:
        return text_en, False
    return row["text"], True


def embed_claims(claims_path: str, spec: EmbedderSpec, out_path: str) -> dict:
    """Encode every claim and write the embeddings file; returns counts
    for the run log."""
    rows = _read_claims_rows(claims_path)
    encoder = build_encoder(spec)
    texts = []
    fallbacks = 0
    for row in rows:
        text, fell_back = select_text(row, spec.text_field)
        texts.append(text)
        fallbacks += fell_back
    if fallbacks:
        logger.info("%d claims lacked a translation; used original text", fallbacks)

    vectors = np.zeros((0, 0))
    pieces = []
    for start in range(0, len(texts), spec.batch_size):
        pieces.append(encoder.encode(texts[start : start + spec.batch_size]))
    if pieces:
        vectors = np.vstack(pieces)
    dim = vectors.shape[1] if len(rows) else getattr(encoder, "dim", 0)

    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": int(dim)}) + "\n")
        for row, vec in zip(rows, vectors):
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise AdapterError(f"encoder produced a zero vector for {row['id']!r}")
            unit = (vec / norm).tolist()
            fh.write(json.dumps({"id": row["id"], "vector": unit}) + "\n")
    return {"n_claims": len(rows), "dim": int(dim), "fallbacks": fallbacks}
