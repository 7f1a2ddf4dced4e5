"""
Document segmentation: token blocks, percent-symbol windows, block expansion.

Offsets are Python string indices into ``Document.cleaned_text``; every
segment's text is the verbatim slice at its span.
"""

import re
from typing import List, Optional, Pattern, Sequence, Union

from src.core.config import SegmenterConfig
from src.core.models import Document, Segment, SegmentOrigin, Span, TokenBlock

_TOKEN = re.compile(r"\S+")


def tokenize(text: str) -> List[Span]:
    """Whitespace tokenizer: one span per maximal run of non-whitespace characters."""
    return [match.span() for match in _TOKEN.finditer(text)]


def block_split(doc: Document, cfg: SegmenterConfig) -> List[TokenBlock]:
    """
    Partition the document's tokens into consecutive runs of block_size.

    The final block holds the remainder. An empty document yields no blocks.
    """
    text = doc.cleaned_text
    spans = tokenize(text)
    blocks: List[TokenBlock] = []
    for index, first in enumerate(range(0, len(spans), cfg.block_size)):
        run = spans[first:first + cfg.block_size]
        start, end = run[0][0], run[-1][1]
        blocks.append(TokenBlock(
            doc_id=doc.id,
            index=index,
            char_span=(start, end),
            token_count=len(run),
            text=text[start:end],
        ))
    return blocks


def merge_spans(spans: Sequence[Span]) -> List[Span]:
    """Merge overlapping or touching spans; input need not be sorted."""
    merged: List[Span] = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def window_segments(doc: Document, positions: Sequence[int], radius: int, merge: bool = True) -> List[Segment]:
    """Character windows of ``radius`` on each side of each position, clamped to the text."""
    text = doc.cleaned_text
    spans = [(max(0, pos - radius), min(len(text), pos + radius)) for pos in positions]
    spans = merge_spans(spans) if merge else sorted(spans)
    return [
        Segment(doc_id=doc.id, text=text[start:end], char_span=(start, end), origin=SegmentOrigin.REGEX_WINDOW)
        for start, end in spans
    ]


def regex_percent_segments(doc: Document, cfg: SegmenterConfig) -> List[Segment]:
    """
    One window per percent-pattern match, centred on the '%' symbol.

    Overlapping windows are merged unless cfg.merge_windows is off. Segments
    come back in ascending char order.
    """
    pattern = re.compile(cfg.percent_pattern)
    positions = [match.end() - 1 for match in pattern.finditer(doc.cleaned_text)]
    return window_segments(doc, positions, cfg.regex_window_chars, merge=cfg.merge_windows)


def regex_keyword_segments(doc: Document, keywords: Sequence[Union[str, Pattern]],
                           cfg: SegmenterConfig) -> List[Segment]:
    """Same windows as regex_percent_segments, centred on case-insensitive keyword hits."""
    positions: List[int] = []
    for keyword in keywords:
        pattern = keyword if isinstance(keyword, re.Pattern) else re.compile(re.escape(keyword), re.IGNORECASE)
        positions.extend(match.start() for match in pattern.finditer(doc.cleaned_text))
    return window_segments(doc, positions, cfg.regex_window_chars, merge=cfg.merge_windows)


def expand_block(blocks: Sequence[TokenBlock], i: int, radius: int,
                 cleaned_text: Optional[str] = None) -> Segment:
    """
    Concatenate block ``i`` with up to ``radius`` neighbours on each side.

    The segment spans from the first token of the leftmost block to the last
    token of the rightmost block. When ``cleaned_text`` is not given the text
    is rebuilt from the blocks, which is exact only when single whitespace
    characters separate them.

    Raises:
        IndexError: If i is outside the block list
    """
    if not 0 <= i < len(blocks):
        raise IndexError(f"block index {i} outside 0..{len(blocks) - 1}")
    first = blocks[max(0, i - radius)]
    last = blocks[min(len(blocks) - 1, i + radius)]
    start, end = first.char_span[0], last.char_span[1]
    if cleaned_text is not None:
        text = cleaned_text[start:end]
    else:
        text = _stitch(blocks[max(0, i - radius):min(len(blocks), i + radius + 1)])
    return Segment(
        doc_id=blocks[i].doc_id,
        text=text,
        char_span=(start, end),
        origin=SegmentOrigin.EXPANDED_BLOCK,
        center_block_index=blocks[i].index,
    )


def _stitch(run: Sequence[TokenBlock]) -> str:
    parts = [run[0].text]
    for previous, block in zip(run, run[1:]):
        gap = block.char_span[0] - previous.char_span[1]
        parts.append(" " * gap + block.text)
    return "".join(parts)


def segment_token_count(segment: Segment) -> int:
    return len(tokenize(segment.text))
