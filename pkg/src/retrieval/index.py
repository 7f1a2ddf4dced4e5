"""
Exact flat vector index over token-block embeddings.

Vectors are unit-normalized on insertion so cosine similarity is a dot
product; search is a full linear scan, which doubles as its own oracle.
Persisted indices are JSONL artifacts whose header records the dimension and
the embedder identity; loading under a different identity is a hard error.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.artifacts import read_jsonl
from src.core.logger import get_logger

logger = get_logger(__name__)

BlockKey = Tuple[str, int]

NORM_TOLERANCE = 1e-6


class DimensionMismatchError(ValueError):
    """A vector's length differs from the index (or embedder) dimension."""


class IndexMismatchError(ValueError):
    """A persisted index was built by a different embedder."""


def unit_normalize(vector: Sequence[float], dim: int) -> np.ndarray:
    """
    L2-normalize one vector.

    Raises:
        DimensionMismatchError: If len(vector) != dim
        ValueError: If the vector has non-finite values or zero norm
    """
    array = np.asarray(vector, dtype=np.float64)
    if array.ndim != 1 or array.shape[0] != dim:
        raise DimensionMismatchError(f"vector of length {array.size} does not match dimension {dim}")
    if not np.all(np.isfinite(array)):
        raise ValueError("vector contains non-finite values")
    norm = float(np.linalg.norm(array))
    if norm == 0.0:
        raise ValueError("zero vector cannot be normalized")
    return array / norm


class VectorIndex:
    """
    Ordered (block_key, unit vector) entries with exact top-k cosine search.

    Immutable once built; concurrent searches need no locking.
    """

    def __init__(self, dim: int, embedder_identity: Optional[str] = None):
        if dim < 1:
            raise ValueError(f"index dimension must be positive, got {dim}")
        self.dim = dim
        self.embedder_identity = embedder_identity
        self._keys: List[BlockKey] = []
        self._positions: Dict[BlockKey, int] = {}
        self._rows: List[np.ndarray] = []
        self._matrix: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self._keys)

    @property
    def keys(self) -> List[BlockKey]:
        return list(self._keys)

    def _append(self, key: BlockKey, unit: np.ndarray) -> None:
        key = (str(key[0]), int(key[1]))
        if key in self._positions:
            raise ValueError(f"duplicate block key {key}")
        self._positions[key] = len(self._keys)
        self._keys.append(key)
        self._rows.append(unit)
        self._matrix = None

    def add(self, key: BlockKey, vector: Sequence[float]) -> None:
        self._append(key, unit_normalize(vector, self.dim))

    def add_batch(self, keys: Sequence[BlockKey], vectors: Iterable[Sequence[float]]) -> None:
        vectors = list(vectors)
        if len(keys) != len(vectors):
            raise ValueError(f"{len(keys)} keys for {len(vectors)} vectors")
        for key, vector in zip(keys, vectors):
            self.add(key, vector)

    def vector(self, key: BlockKey) -> np.ndarray:
        return self._rows[self._positions[key]].copy()

    def _stacked(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.vstack(self._rows) if self._rows else np.zeros((0, self.dim))
        return self._matrix

    def search(self, query_vec: Sequence[float], k: int) -> List[Tuple[BlockKey, float]]:
        """
        Exact top-k by cosine similarity.

        Scores descend; equal scores order by ascending block key. k larger
        than the index returns every entry; an empty index returns [].

        Raises:
            DimensionMismatchError: If the query length differs from dim
            ValueError: If k < 1 or the query is zero or non-finite
        """
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        query = unit_normalize(query_vec, self.dim)
        if not self._keys:
            return []
        scores = np.clip(self._stacked() @ query, -1.0, 1.0)
        ranked = sorted(range(len(self._keys)), key=lambda i: (-scores[i], self._keys[i]))
        return [(self._keys[i], float(scores[i])) for i in ranked[:k]]

    def subset(self, doc_id: str) -> "VectorIndex":
        """Entries of one document, in insertion order."""
        part = VectorIndex(self.dim, self.embedder_identity)
        for key, row in zip(self._keys, self._rows):
            if key[0] == doc_id:
                part._append(key, row)
        return part

    # ==========================================================================
    # PERSISTENCE
    # ==========================================================================

    def header(self) -> Dict[str, Any]:
        return {"dim": self.dim, "embedder": self.embedder_identity}

    def to_records(self) -> Iterable[Dict[str, Any]]:
        for (doc_id, block_index), row in zip(self._keys, self._rows):
            yield {"doc_id": doc_id, "block_index": block_index, "vector": [float(v) for v in row]}


def load_index(path: Path, expected_identity: Optional[str] = None) -> VectorIndex:
    """
    Load a persisted index.

    Raises:
        FileNotFoundError: If path does not exist
        IndexMismatchError: If the header's embedder identity differs from
            expected_identity, or the header is missing
        DimensionMismatchError: If a stored vector has the wrong length
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Index file not found: {path}")
    header, records = read_jsonl(path)
    if header is None or "dim" not in header:
        raise IndexMismatchError(f"{path} has no index header")
    identity = header.get("embedder")
    if expected_identity is not None and identity != expected_identity:
        raise IndexMismatchError(
            f"{path} was built with embedder {identity!r}, configured embedder is {expected_identity!r}"
        )
    index = VectorIndex(int(header["dim"]), identity)
    for record in records:
        vector = np.asarray(record["vector"], dtype=np.float64)
        if vector.shape != (index.dim,):
            raise DimensionMismatchError(
                f"{path}: vector for {record['doc_id']}#{record['block_index']} has length {vector.size}"
            )
        if abs(float(np.linalg.norm(vector)) - 1.0) > NORM_TOLERANCE:
            vector = unit_normalize(vector, index.dim)
        index._append((record["doc_id"], record["block_index"]), vector)
    logger.info(
        f"Loaded index with {len(index)} blocks from {path}",
        extra={"stage": "retrieval", "operation": "load_index", "file_path": str(path)}
    )
    return index
