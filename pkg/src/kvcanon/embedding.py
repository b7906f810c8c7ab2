"""Key embedding providers: a deterministic hashed-bigram default and a file-backed one."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .corpus import fnv1a64
from .errors import ValidationError


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.values))
        if not math.isclose(norm, 1.0, abs_tol=1e-9):
            raise ValidationError(f"embedding vector not unit length (norm={norm})")


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, key: str) -> EmbeddingVector: ...


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    return float(np.dot(a.values, b.values))


def centroid(vectors: Iterable[EmbeddingVector]) -> EmbeddingVector:
    """Unit-renormalized mean of unit vectors."""
    stack = np.stack([v.values for v in vectors])
    mean = stack.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise ValidationError("degenerate centroid (zero vector)")
    return EmbeddingVector(values=mean / norm, dim=stack.shape[1])


class HashedBigramProvider:
    """Character bigrams (with ^/$ boundary sentinels) hashed into fixed buckets.

    Bucket index is FNV-1a over the bigram's UTF-8 bytes modulo ``dim``;
    bucket counts are L2-normalized. Fully deterministic across runs and
    platforms.
    """

    def __init__(self, dim: int = 256):
        if dim <= 0:
            raise ValidationError("embedding dim must be positive")
        self.dim = dim
        self._cache: dict[str, EmbeddingVector] = {}

    def bigrams(self, key: str) -> list[str]:
        padded = "^" + key + "$"
        return [padded[i : i + 2] for i in range(len(padded) - 1)]

    def bucket(self, bigram: str) -> int:
        return fnv1a64(bigram.encode("utf-8")) % self.dim

    def embed(self, key: str) -> EmbeddingVector:
        if not key:
            raise ValidationError("cannot embed an empty key")
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        counts = np.zeros(self.dim, dtype=np.float64)
        for bigram in self.bigrams(key):
            counts[self.bucket(bigram)] += 1.0
        vec = EmbeddingVector(values=counts / np.linalg.norm(counts), dim=self.dim)
        if len(self._cache) > 65536:
            self._cache.clear()
        self._cache[key] = vec
        return vec


class FileEmbeddingProvider:
    """Precomputed vectors loaded from a JSONL file of {"key": …, "vector": […]}."""

    def __init__(self, path: str | Path):
        self._vectors: dict[str, np.ndarray] = {}
        dim: int | None = None
        with Path(path).open("r", encoding="utf-8") as fp:
            for line_no, line in enumerate(fp, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                vec = np.asarray(obj["vector"], dtype=np.float64)
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise ValidationError(
                        f"{path}: line {line_no}: vector dim {vec.shape[0]} != {dim}"
                    )
                norm = np.linalg.norm(vec)
                if norm == 0.0:
                    raise ValidationError(f"{path}: line {line_no}: zero vector")
                self._vectors[str(obj["key"])] = vec / norm
        if dim is None:
            raise ValidationError(f"{path}: no vectors found")
        self.dim = dim

    def embed(self, key: str) -> EmbeddingVector:
        try:
            values = self._vectors[key]
        except KeyError:
            raise ValidationError(f"no precomputed embedding for key {key!r}") from None
        return EmbeddingVector(values=values, dim=self.dim)
