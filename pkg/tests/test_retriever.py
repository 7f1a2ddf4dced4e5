"""
Tests for similarity retrieval with block expansion.

These tests verify that:
- A query identical to a block finds that block first
- Hits are expanded with their neighbours and deduplicated by span
- The shared retrieval context caches per document and per kind
"""

import pytest

from src.core.config import EmbedderSpec, SegmenterConfig
from src.core.models import EntityKind, SegmentOrigin
from src.parsers.segmenter import block_split
from src.retrieval.embedder import MockEmbedder
from src.retrieval.index import VectorIndex
from src.retrieval.retriever import (
    RetrievalContext,
    build_document_index,
    retrieve_segments,
    search_and_expand,
)
from src.retrieval.tfidf import Query
from tests.conftest import build_config, make_document

TEXT = (
    "autos caratulados gomez contra transporte "
    "intereses moratorios bancarios desde mora "
    "incapacidad física del veinte por ciento "
    "costas a cargo demandada vencida "
    "daño moral fijado quinientos mil pesos"
)


@pytest.fixture
def embedder():
    return MockEmbedder(EmbedderSpec(dim=128, seed=5))


@pytest.fixture
def blocks():
    return block_split(make_document("f1", TEXT), SegmenterConfig(block_size=6))


class TestRetrieveSegments:
    """Test single-document retrieval."""

    def test_exact_block_text_is_top_hit(self, blocks, embedder):
        index = build_document_index(blocks, embedder)
        query = Query(EntityKind.PHYSICAL_DISABILITY, blocks[2].text)

        segments = retrieve_segments(blocks, index, query, embedder, k=1, radius=0, cleaned_text=TEXT)

        assert len(segments) == 1
        assert segments[0].text == blocks[2].text
        assert segments[0].center_block_index == 2
        assert segments[0].score == pytest.approx(1.0)

    def test_hit_expanded_with_neighbours(self, blocks, embedder):
        index = build_document_index(blocks, embedder)
        query = Query(EntityKind.PHYSICAL_DISABILITY, blocks[2].text)

        segment = retrieve_segments(blocks, index, query, embedder, k=1, radius=1, cleaned_text=TEXT)[0]

        assert segment.origin is SegmentOrigin.EXPANDED_BLOCK
        assert segment.char_span == (blocks[1].char_span[0], blocks[3].char_span[1])
        assert segment.text == TEXT[segment.char_span[0]:segment.char_span[1]]

    def test_scores_descend(self, blocks, embedder):
        index = build_document_index(blocks, embedder)
        query = Query(EntityKind.MORAL_DAMAGE, "daño moral pesos")
        segments = retrieve_segments(blocks, index, query, embedder, k=3, radius=0, cleaned_text=TEXT)
        scores = [s.score for s in segments]
        assert scores == sorted(scores, reverse=True)
        assert len(segments) == 3

    def test_identical_expansions_kept_once(self):
        doc = make_document("f1", "uno dos tres")
        blocks = block_split(doc, SegmenterConfig(block_size=1))
        index = VectorIndex(2)
        index.add_batch([("f1", 0), ("f1", 1), ("f1", 2)], [[1.0, 0.0], [1.0, 0.1], [1.0, 0.2]])

        # radius 2 over three blocks: every hit expands to the whole text
        segments = search_and_expand(blocks, index, [1.0, 0.0], k=3, radius=2, cleaned_text=doc.cleaned_text)

        assert len(segments) == 1
        assert segments[0].text == "uno dos tres"
        assert segments[0].center_block_index == 0

    def test_empty_document(self, embedder):
        index = build_document_index([], embedder)
        query = Query(EntityKind.MORAL_DAMAGE, "daño moral")
        assert retrieve_segments([], index, query, embedder, k=3, radius=1) == []


class TestRetrievalContext:
    """Test the shared per-run retrieval state."""

    def _context(self, tmp_path, embedder, **kwargs):
        config = build_config(tmp_path, segmenter={"block_size": 6}, retrieval={"k": 2})
        queries = {EntityKind.MORAL_DAMAGE: Query(EntityKind.MORAL_DAMAGE, "daño moral fijado")}
        return RetrievalContext(config, embedder, queries, **kwargs)

    def test_retrieve_uses_config(self, tmp_path, embedder):
        context = self._context(tmp_path, embedder)
        segments = context.retrieve(make_document("f1", TEXT), EntityKind.MORAL_DAMAGE)
        assert 1 <= len(segments) <= 2
        assert all(s.doc_id == "f1" for s in segments)

    def test_index_cached(self, tmp_path, embedder):
        context = self._context(tmp_path, embedder)
        doc = make_document("f1", TEXT)
        assert context.index_for(doc) is context.index_for(doc)

    def test_corpus_index_is_split_per_document(self, tmp_path, embedder, blocks):
        corpus_index = build_document_index(blocks, embedder)
        other = block_split(make_document("f2", "otro fallo distinto"), SegmenterConfig(block_size=6))
        corpus_index.add_batch([(b.doc_id, b.index) for b in other], embedder.embed([b.text for b in other]))
        context = self._context(tmp_path, embedder, corpus_index=corpus_index)

        assert context.index_for(make_document("f1", TEXT)).keys == [(b.doc_id, b.index) for b in blocks]

    def test_missing_query(self, tmp_path, embedder):
        context = self._context(tmp_path, embedder)
        with pytest.raises(KeyError):
            context.retrieve(make_document("f1", TEXT), EntityKind.PHYSICAL_DISABILITY)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
