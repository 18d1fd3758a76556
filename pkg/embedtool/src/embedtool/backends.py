"""Embedding backends: the transformer model and an offline hashing fallback.

Both emit unit-norm float vectors with a constant dimension, so downstream
consumers cannot tell them apart structurally.  The hashing backend exists so
pipelines (and this package's tests) run with no model download at all.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_MODEL = "all-MiniLM-L6-v2"


class ModelUnavailable(RuntimeError):
    pass


class HashingBackend:
    """Deterministic token feature hashing, L2-normalized.

    Not semantically meaningful, but stable across runs and platforms, which
    is what fixture-driven tests need.
    """

    def __init__(self, dim: int = 384):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim

    @property
    def name(self) -> str:
        return f"hashing-{self.dim}"

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in text.split():
                digest = hashlib.sha256(token.encode("utf-8")).digest()
                idx = int.from_bytes(digest[:8], "big") % self.dim
                sign = 1.0 if digest[8] & 1 else -1.0
                out[row, idx] += sign
            norm = float(np.sqrt(np.sum(out[row] * out[row])))
            if norm == 0.0:
                out[row, 0] = 1.0
            else:
                out[row] /= norm
        return out


class TransformerBackend:
    """sentence-transformers wrapper; raises ModelUnavailable if it cannot load."""

    def __init__(self, model_name: str = DEFAULT_MODEL):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise ModelUnavailable(f"sentence-transformers not installed: {e}") from e
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as e:  # model resolution/download failures vary widely
            raise ModelUnavailable(f"cannot load model {model_name!r}: {e}") from e
        self.model_name = model_name

    @property
    def name(self) -> str:
        return self.model_name

    def encode(self, texts: list[str]) -> np.ndarray:
        vecs = self._model.encode(texts, convert_to_numpy=True,
                                  normalize_embeddings=True, show_progress_bar=False)
        return np.asarray(vecs, dtype=np.float64)


def make_backend(kind: str, model_name: str = DEFAULT_MODEL, dim: int = 384):
    if kind == "transformer":
        return TransformerBackend(model_name)
    if kind == "hash":
        return HashingBackend(dim)
    raise ValueError(f"backend must be 'transformer' or 'hash', not {kind!r}")
