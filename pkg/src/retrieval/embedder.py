"""
Text embedders.

MockEmbedder is offline and deterministic: character n-grams are hashed with
a seeded BLAKE2 digest into ``dim`` signed buckets and the result is
L2-normalized, so texts sharing many n-grams land close together.

RemoteEmbedder speaks the OpenAI-embeddings wire format:
POST {"model", "input": [...]} -> {"data": [{"index", "embedding"}]}.
Batches run concurrently up to ``max_concurrent_requests``; output order
always matches input order.
"""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
import requests

from src.core.config import EMBED_API_KEY_ENV, EmbedderSpec
from src.core.http import ServiceError, post_json_with_retry
from src.core.logger import get_logger
from src.retrieval.index import DimensionMismatchError

logger = get_logger(__name__)


class Embedder:
    """Common interface: ``embed(texts)`` returns an (n, dim) float array."""

    def __init__(self, spec: EmbedderSpec):
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def identity(self) -> str:
        return self.spec.identity

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError


class MockEmbedder(Embedder):
    """Seeded character n-gram hashing; embed is a pure function of (text, seed)."""

    def __init__(self, spec: EmbedderSpec):
        super().__init__(spec)
        self._key = spec.seed.to_bytes(8, "little", signed=True)

    def _ngrams(self, text: str) -> List[str]:
        padded = f" {' '.join(text.lower().split())} "
        n = self.spec.ngram_size
        if len(padded) <= n:
            return [padded]
        return [padded[i:i + n] for i in range(len(padded) - n + 1)]

    def embed_one(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dim, dtype=np.float64)
        for gram in self._ngrams(text):
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=self._key).digest()
            value = int.from_bytes(digest, "little")
            bucket = value % self.dim
            sign = 1.0 if (value >> 63) & 1 else -1.0
            vector[bucket] += sign
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            # every n-gram cancelled out
            vector[0] = 1.0
            return vector
        return vector / norm

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        return np.vstack([self.embed_one(text) for text in texts])


class RemoteEmbedder(Embedder):
    """HTTP embeddings client with bounded concurrency and retries."""

    def __init__(self, spec: EmbedderSpec, api_key: Optional[str] = None,
                 session: Optional[requests.Session] = None):
        super().__init__(spec)
        self.api_key = api_key
        self.session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _embed_batch(self, batch_number: int, batch: Sequence[str]) -> np.ndarray:
        try:
            data = post_json_with_retry(
                self.session,
                self.spec.url,
                {"model": self.spec.model, "input": list(batch)},
                headers=self._headers(),
                timeout=self.spec.timeout,
                retry_limit=self.spec.retry_limit,
                backoff_seconds=self.spec.backoff_seconds,
            )
        except ServiceError as e:
            logger.error(
                f"Embedding batch {batch_number} failed: {e}",
                extra={"stage": "retrieval", "operation": "embed", "error": str(e),
                       "attempt": e.attempts, "status": "failed"}
            )
            raise

        items = data.get("data")
        if not isinstance(items, list) or len(items) != len(batch):
            raise ServiceError(f"embedding batch {batch_number}: expected {len(batch)} vectors",
                               status=None, attempts=1)
        ordered = sorted(items, key=lambda item: item.get("index", 0))
        rows = []
        for item in ordered:
            embedding = item.get("embedding")
            if not isinstance(embedding, list) or len(embedding) != self.dim:
                raise DimensionMismatchError(
                    f"embedding of length {len(embedding) if isinstance(embedding, list) else 'n/a'} "
                    f"does not match configured dimension {self.dim}"
                )
            rows.append(embedding)
        return np.asarray(rows, dtype=np.float64)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        size = self.spec.batch_size
        batches = [texts[i:i + size] for i in range(0, len(texts), size)]
        with ThreadPoolExecutor(max_workers=self.spec.max_concurrent_requests) as executor:
            results = list(executor.map(self._embed_batch, range(len(batches)), batches))
        return np.vstack(results)


def build_embedder(spec: EmbedderSpec, session: Optional[requests.Session] = None) -> Embedder:
    """Embedder for ``spec``; the remote API key comes from the environment."""
    if spec.backend == "mock":
        return MockEmbedder(spec)
    return RemoteEmbedder(spec, api_key=os.environ.get(EMBED_API_KEY_ENV), session=session)


def embed(texts: Sequence[str], embedder: Embedder) -> np.ndarray:
    """One vector per text, in input order; an empty list gives a (0, dim) array."""
    return embedder.embed(list(texts))
