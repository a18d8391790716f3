"""Embedding providers and an exact cosine nearest-neighbour index."""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import numpy as np

from .llm import TransportError, http_post_json

DEFAULT_DIM = 384

_TOKEN = re.compile(r"\w+", re.UNICODE)


class EmbeddingError(ValueError):
    pass


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


def _check_text(text: str) -> None:
    if not isinstance(text, str) or not text.strip():
        raise EmbeddingError("cannot embed empty text")


def token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    """The mock's per-token direction: standard normal draws seeded by
    ``sha256(f"{seed}:{token}")`` (first 8 bytes, big-endian)."""
    digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    return rng.standard_normal(dim)


class HashEmbedder:
    """Deterministic mock: sum of per-token random projections, L2-normalised.

    Tokens are lower-cased ``\\w+`` runs; text with no word characters is
    treated as a single token. Identical text always yields a bitwise-equal
    vector, and so does text with the same token multiset.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        _check_text(text)
        tokens = _TOKEN.findall(text.lower()) or [text.strip()]
        vec = np.zeros(self.dim)
        for tok in sorted(tokens):
            cached = self._cache.get(tok)
            if cached is None:
                cached = self._cache[tok] = token_vector(tok, self.dim, self.seed)
            vec += cached
        norm = np.linalg.norm(vec)
        if norm == 0:
            # Tokens can cancel only in pathological cases; fall back to the whole text.
            vec = token_vector(text, self.dim, self.seed)
            norm = np.linalg.norm(vec)
        return vec / norm


class LookupEmbedder:
    """Fixed text -> vector table, for hand-placed test fixtures."""

    def __init__(self, table: Mapping[str, Iterable[float]], fallback: Embedder | None = None):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}
        dims = {v.shape[0] for v in self.table.values()}
        if len(dims) > 1:
            raise ValueError("all table vectors must share a dimension")
        self.dim = dims.pop() if dims else (fallback.dim if fallback else DEFAULT_DIM)
        self.fallback = fallback

    def embed(self, text: str) -> np.ndarray:
        _check_text(text)
        if text in self.table:
            return self.table[text].copy()
        if self.fallback is not None:
            return self.fallback.embed(text)
        raise EmbeddingError(f"no vector for {text[:40]!r}")


class HTTPEmbedder:
    """POSTs ``{"texts": [...]}`` and expects ``{"vectors": [[...], ...]}``."""

    def __init__(
        self,
        endpoint: str,
        dim: int = DEFAULT_DIM,
        *,
        api_key_env: str | None = "MOTIVKG_EMBED_KEY",
        timeout: float = 60.0,
        retries: int = 2,
    ):
        self.endpoint = endpoint
        self.dim = dim
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retries = retries
        self._cache: dict[str, np.ndarray] = {}

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        for t in texts:
            _check_text(t)
        missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            attempts = self.retries + 1
            for attempt in range(1, attempts + 1):
                try:
                    data = http_post_json(self.endpoint, {"texts": missing}, timeout=self.timeout, api_key_env=self.api_key_env)
                    break
                except TransportError as exc:
                    if not exc.retryable or attempt == attempts:
                        raise TransportError(f"embedding endpoint failed: {exc}", attempts=attempt) from exc
            vectors = data.get("vectors") if isinstance(data, dict) else None
            if not isinstance(vectors, list) or len(vectors) != len(missing):
                raise TransportError("embedding response has wrong shape", retryable=False)
            for t, v in zip(missing, vectors):
                arr = np.asarray(v, dtype=float)
                if arr.shape != (self.dim,):
                    raise EmbeddingError(f"endpoint returned dim {arr.shape}, expected {self.dim}")
                self._cache[t] = arr
        return [self._cache[t].copy() for t in texts]

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    if np.array_equal(a, b):
        return 1.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ScoredHit:
    node_id: str
    score: float
    name: str = ""


class VectorIndex:
    """Exact brute-force cosine search.

    Vectors are stored unit-normalised. Writes build a new snapshot and
    swap it in, so concurrent searches always see a consistent matrix.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim
        self._lock = threading.Lock()
        self._ids: list[str] = []
        self._names: list[str] = []
        self._raw: list[np.ndarray] = []
        self._pos: dict[str, int] = {}
        self._snapshot: tuple[list[str], list[str], np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._pos

    def add(self, node_id: str, vector: np.ndarray, name: str = "") -> None:
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (self.dim,):
            raise EmbeddingError(f"vector dim {vec.shape} does not match index dim {self.dim}")
        if not np.all(np.isfinite(vec)) or np.linalg.norm(vec) == 0:
            raise EmbeddingError("vector must be finite and non-zero")
        with self._lock:
            if node_id in self._pos:
                i = self._pos[node_id]
                self._raw[i] = vec
                self._names[i] = name or self._names[i]
            else:
                self._pos[node_id] = len(self._ids)
                self._ids.append(node_id)
                self._names.append(name)
                self._raw.append(vec)
            self._snapshot = None

    def remove(self, node_id: str) -> None:
        with self._lock:
            i = self._pos.pop(node_id, None)
            if i is None:
                return
            del self._ids[i], self._names[i], self._raw[i]
            self._pos = {nid: j for j, nid in enumerate(self._ids)}
            self._snapshot = None

    def vector(self, node_id: str) -> np.ndarray:
        return self._raw[self._pos[node_id]].copy()

    def ids(self) -> list[str]:
        return list(self._ids)

    def _current(self) -> tuple[list[str], list[str], np.ndarray]:
        snap = self._snapshot
        if snap is None:
            with self._lock:
                if self._raw:
                    mat = np.vstack(self._raw)
                    mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
                else:
                    mat = np.zeros((0, self.dim))
                snap = self._snapshot = (list(self._ids), list(self._names), mat)
        return snap

    def scores(self, query: np.ndarray) -> list[ScoredHit]:
        """Every indexed node with its cosine to ``query``, best first."""
        q = np.asarray(query, dtype=float)
        if q.shape != (self.dim,):
            raise EmbeddingError(f"query dim {q.shape} does not match index dim {self.dim}")
        ids, names, mat = self._current()
        if not ids:
            return []
        qn = np.linalg.norm(q)
        if qn == 0:
            raise EmbeddingError("query vector is zero")
        sims = np.clip(mat @ (q / qn), -1.0, 1.0)
        order = sorted(range(len(ids)), key=lambda i: (-sims[i], names[i], ids[i]))
        return [ScoredHit(ids[i], float(sims[i]), names[i]) for i in order]

    def top_k(self, query: np.ndarray, k: int, restrict: Iterable[str] | None = None) -> list[ScoredHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        hits = self.scores(query)
        if restrict is not None:
            allowed = set(restrict)
            hits = [h for h in hits if h.node_id in allowed]
        return hits[:k]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i in sorted(range(len(self._ids)), key=lambda i: self._ids[i]):
                row = {"id": self._ids[i], "name": self._names[i], "vector": [float(x) for x in self._raw[i]]}
                fh.write(json.dumps(row) + "\n")

    @classmethod
    def load(cls, path: str | Path, dim: int | None = None) -> "VectorIndex":
        rows = []
        path = Path(path)
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                rows = [json.loads(line) for line in fh if line.strip()]
        if dim is None:
            dim = len(rows[0]["vector"]) if rows else DEFAULT_DIM
        index = cls(dim)
        for row in rows:
            index.add(row["id"], np.asarray(row["vector"]), row.get("name", ""))
        return index
