"""
Similarity search over a document's token blocks with contextual expansion.

A query is embedded, the top-k blocks are found in the document's index, and
each hit is expanded with its neighbouring blocks into one segment. Segments
with identical spans are kept once (at their best score).
"""

import threading
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import PipelineConfig
from src.core.logger import get_logger
from src.core.models import Document, EntityKind, Segment, TokenBlock
from src.parsers.segmenter import block_split, expand_block
from src.retrieval.embedder import Embedder
from src.retrieval.index import VectorIndex
from src.retrieval.tfidf import Query

logger = get_logger(__name__)


def build_document_index(blocks: Sequence[TokenBlock], embedder: Embedder) -> VectorIndex:
    """Embed every block of one document into a fresh index."""
    index = VectorIndex(embedder.dim, embedder.identity)
    if blocks:
        vectors = embedder.embed([block.text for block in blocks])
        index.add_batch([(block.doc_id, block.index) for block in blocks], vectors)
    return index


def search_and_expand(
    doc_blocks: Sequence[TokenBlock],
    index: VectorIndex,
    query_vector: np.ndarray,
    k: int,
    radius: int,
    cleaned_text: Optional[str] = None,
) -> List[Segment]:
    """Top-k hits expanded into segments, deduplicated by span, best score first."""
    positions = {(block.doc_id, block.index): i for i, block in enumerate(doc_blocks)}
    segments: Dict[Tuple[int, int], Segment] = {}
    for key, score in index.search(query_vector, k):
        position = positions.get(key)
        if position is None:
            logger.warning(
                f"Index hit {key} is not among the document's blocks",
                extra={"stage": "retrieval", "operation": "retrieve_segments", "doc_id": key[0]}
            )
            continue
        segment = expand_block(doc_blocks, position, radius, cleaned_text)
        segment.score = score
        if segment.char_span not in segments:
            segments[segment.char_span] = segment
    return sorted(segments.values(), key=lambda s: (-s.score, s.char_span))


def retrieve_segments(
    doc_blocks: Sequence[TokenBlock],
    index: VectorIndex,
    query: Query,
    embedder: Embedder,
    k: int,
    radius: int,
    cleaned_text: Optional[str] = None,
) -> List[Segment]:
    """
    Segments for ``query`` from one document.

    Args:
        doc_blocks: The document's blocks, as produced by block_split
        index: Index built over doc_blocks
        query: Query whose text is embedded
        embedder: Embedder that built the index
        k: Blocks retrieved; clamped to the index size
        radius: Neighbouring blocks on each side of a hit
        cleaned_text: Document text the blocks index into

    Returns:
        Expanded segments in descending score order
    """
    query_vector = embedder.embed([query.text])[0]
    return search_and_expand(doc_blocks, index, query_vector, k, radius, cleaned_text)


class RetrievalContext:
    """
    Shared retrieval state for an extraction run.

    Caches each document's blocks and index (built on first use, or split off
    a persisted corpus index) and each kind's query vector. Safe to use from
    several worker threads.
    """

    def __init__(
        self,
        config: PipelineConfig,
        embedder: Embedder,
        queries: Dict[EntityKind, Query],
        corpus_index: Optional[VectorIndex] = None,
    ):
        self.config = config
        self.embedder = embedder
        self.queries = queries
        self.corpus_index = corpus_index
        self._lock = threading.Lock()
        self._blocks: Dict[str, List[TokenBlock]] = {}
        self._indices: Dict[str, VectorIndex] = {}
        self._query_vectors: Dict[EntityKind, np.ndarray] = {}

    def blocks_for(self, doc: Document) -> List[TokenBlock]:
        with self._lock:
            cached = self._blocks.get(doc.id)
        if cached is None:
            cached = block_split(doc, self.config.segmenter)
            with self._lock:
                self._blocks.setdefault(doc.id, cached)
        return cached

    def index_for(self, doc: Document) -> VectorIndex:
        with self._lock:
            cached = self._indices.get(doc.id)
        if cached is None:
            if self.corpus_index is not None:
                cached = self.corpus_index.subset(doc.id)
            else:
                cached = build_document_index(self.blocks_for(doc), self.embedder)
            with self._lock:
                cached = self._indices.setdefault(doc.id, cached)
        return cached

    def query_vector(self, kind: EntityKind) -> np.ndarray:
        with self._lock:
            cached = self._query_vectors.get(kind)
        if cached is None:
            query = self.queries.get(kind)
            if query is None:
                raise KeyError(f"no query available for {kind.value}")
            cached = self.embedder.embed([query.text])[0]
            with self._lock:
                cached = self._query_vectors.setdefault(kind, cached)
        return cached

    def retrieve(self, doc: Document, kind: EntityKind) -> List[Segment]:
        return search_and_expand(
            self.blocks_for(doc),
            self.index_for(doc),
            self.query_vector(kind),
            self.config.retrieval.k,
            self.config.segmenter.expansion_radius,
            doc.cleaned_text,
        )
