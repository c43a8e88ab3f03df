"""Text-to-vector encoders behind a pluggable interface.

Two providers: a deterministic feature-hashing embedder for self-contained
runs, and a store of precomputed vectors (e.g. transformer embeddings
produced out of process) looked up by claim/engagement id.
"""

from __future__ import annotations

import hashlib
import json
import re
from typing import Protocol

import numpy as np

from .errors import FormatError, MissingEmbeddingError

_TOKEN_RE = re.compile(r"\w+")


class TextEncoder(Protocol):
    """Resolves an (id, text) pair to a fixed-dimension float64 vector."""

    dim: int

    def vector_for(self, owner_id: str, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Bag-of-tokens feature hashing: each token maps to a signed index.

    Deterministic for a fixed seed; token order does not matter. Empty text
    maps to the zero vector, anything else is L2-normalized.
    """

    def __init__(self, dim: int = 768, seed: int = 0):
        if dim < 1:
            raise FormatError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self.seed = seed
        self._salt = int(seed).to_bytes(8, "little", signed=False)

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=9, salt=self._salt
            ).digest()
            index = int.from_bytes(digest[:8], "little") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[index] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def vector_for(self, owner_id: str, text: str) -> np.ndarray:
        return self.embed(text)


class PrecomputedStore:
    """Vectors keyed by claim/engagement id, loaded from a JSONL file."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray]):
        self.dim = dim
        self._vectors = vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def lookup(self, owner_id: str) -> np.ndarray:
        vec = self._vectors.get(owner_id)
        if vec is None:
            raise MissingEmbeddingError(f"no precomputed embedding for id {owner_id!r}")
        return vec

    def vector_for(self, owner_id: str, text: str) -> np.ndarray:
        return self.lookup(owner_id)


def load_precomputed(path) -> PrecomputedStore:
    """Read an embeddings file: a {"dim": D} header line, then id/vector rows."""
    with open(path, encoding="utf-8") as handle:
        header_line = handle.readline()
        try:
            header = json.loads(header_line)
            dim = int(header["dim"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
            raise FormatError(f"{path}:1: expected a {{\"dim\": D}} header") from err
        if dim < 1:
            raise FormatError(f"{path}:1: dim must be positive, got {dim}")
        vectors: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                owner_id = str(row["id"])
                values = row["v"]
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise FormatError(f"{path}:{line_no}: malformed embedding row") from err
            if owner_id in vectors:
                raise FormatError(f"{path}:{line_no}: duplicate id {owner_id!r}")
            vec = np.asarray(values, dtype=np.float64)
            if vec.shape != (dim,):
                raise FormatError(
                    f"{path}:{line_no}: vector length {vec.size} != header dim {dim}"
                )
            if not np.isfinite(vec).all():
                raise FormatError(f"{path}:{line_no}: non-finite vector entries")
            vectors[owner_id] = vec
    return PrecomputedStore(dim=dim, vectors=vectors)


class EncoderBundle:
    """Encoder slots for claims and comments; by default they share one."""

    def __init__(self, claim_encoder: TextEncoder, comment_encoder: TextEncoder | None = None):
        self.claim_encoder = claim_encoder
        self.comment_encoder = comment_encoder or claim_encoder
        if self.claim_encoder.dim != self.comment_encoder.dim:
            raise FormatError(
                f"claim/comment encoder dims differ: "
                f"{self.claim_encoder.dim} vs {self.comment_encoder.dim}"
            )

    @property
    def dim(self) -> int:
        return self.claim_encoder.dim

    def claim_vector(self, claim) -> np.ndarray:
        return self.claim_encoder.vector_for(claim.id, claim.text)

    def comment_vector(self, node) -> np.ndarray:
        return self.comment_encoder.vector_for(node.id, node.text)
