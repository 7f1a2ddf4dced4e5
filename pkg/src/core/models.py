"""
Domain records shared across pipeline stages.

Every stage exchanges these dataclasses and every artifact on disk is one of
them serialized through ``to_dict``/``from_dict``. Keys written by ``to_dict``
are the JSONL field names of the corresponding artifact.
"""

from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

# Half-open [start, end) offsets in code points (Python str indices) into a
# document's cleaned text, not UTF-8 byte offsets. "daño" spans 4, not 5.
Span = Tuple[int, int]


class EntityKind(str, Enum):
    """Entities extracted from a ruling."""

    PHYSICAL_DISABILITY = "physical_disability"
    PSYCHOLOGICAL_DISABILITY = "psychological_disability"
    PSYCHOPHYSICAL_DISABILITY = "psychophysical_disability"
    MORAL_DAMAGE = "moral_damage"

    @property
    def carries_percentage(self) -> bool:
        """Moral damage is an amount only; the disabilities carry a percentage."""
        return self is not EntityKind.MORAL_DAMAGE

    @property
    def order(self) -> int:
        return _KIND_ORDER[self]


_KIND_ORDER = {kind: position for position, kind in enumerate(EntityKind)}


class SegmentOrigin(str, Enum):
    REGEX_WINDOW = "regex_window"
    EXPANDED_BLOCK = "expanded_block"


class ExtractionMethod(str, Enum):
    REGEX = "regex"
    LLM = "llm"


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


# ==============================================================================
# CORPUS
# ==============================================================================

@dataclass
class Document:
    """
    One ruling.

    ``raw_text`` is the file content as loaded; ``cleaned_text`` and ``header``
    stay empty until the clean step runs. ``header`` is always a prefix of
    ``cleaned_text``.
    """
    id: str
    source_path: str
    raw_text: str
    cleaned_text: str = ""
    header: str = ""
    in_scope: bool = False
    ruling_date: Optional[date] = None
    jurisdiction: Optional[str] = None

    @property
    def ruling_month(self) -> Optional[Tuple[int, int]]:
        if self.ruling_date is None:
            return None
        return (self.ruling_date.year, self.ruling_date.month)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "source_path": self.source_path,
            "raw_text": self.raw_text,
            "cleaned_text": self.cleaned_text,
            "header": self.header,
            "in_scope": self.in_scope,
            "ruling_date": self.ruling_date.isoformat() if self.ruling_date else None,
            "jurisdiction": self.jurisdiction,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Document":
        ruling_date = data.get("ruling_date")
        return cls(
            id=data["id"],
            source_path=data.get("source_path", ""),
            raw_text=data.get("raw_text", ""),
            cleaned_text=data.get("cleaned_text", ""),
            header=data.get("header", ""),
            in_scope=bool(data.get("in_scope", False)),
            ruling_date=date.fromisoformat(ruling_date) if ruling_date else None,
            jurisdiction=data.get("jurisdiction"),
        )


# ==============================================================================
# SEGMENTS
# ==============================================================================

@dataclass(frozen=True)
class TokenBlock:
    """A run of ``token_count`` consecutive tokens of one document."""
    doc_id: str
    index: int
    char_span: Span
    token_count: int
    text: str


@dataclass
class Segment:
    """
    A contiguous span of a document's cleaned text offered to an extractor.

    ``text == cleaned_text[char_span[0]:char_span[1]]``. Expanded blocks carry
    the index of the block they were expanded from; regex windows do not.
    """
    doc_id: str
    text: str
    char_span: Span
    origin: SegmentOrigin
    center_block_index: Optional[int] = None
    score: Optional[float] = None

    def to_dict(self, include_text: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "doc_id": self.doc_id,
            "origin": self.origin.value,
            "char_start": self.char_span[0],
            "char_end": self.char_span[1],
            "center_block": self.center_block_index,
            "score": self.score,
        }
        if include_text:
            data["text"] = self.text
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], doc_id: Optional[str] = None) -> "Segment":
        text = data.get("text", "")
        start = data.get("char_start")
        end = data.get("char_end")
        return cls(
            doc_id=data.get("doc_id") or doc_id or "",
            text=text,
            char_span=(int(start) if start is not None else 0,
                       int(end) if end is not None else len(text)),
            origin=SegmentOrigin(data.get("origin", SegmentOrigin.REGEX_WINDOW.value)),
            center_block_index=data.get("center_block"),
            score=_optional_float(data.get("score")),
        )


# ==============================================================================
# EXTRACTIONS
# ==============================================================================

@dataclass
class Extraction:
    """
    One extracted entity, or an error-marked record when ``error`` is set.

    Provenance segments are serialized as references (span, origin, score)
    without their text.
    """
    doc_id: str
    kind: EntityKind
    percentage: Optional[float] = None
    amount: Optional[float] = None
    method: ExtractionMethod = ExtractionMethod.LLM
    provenance: List[Segment] = field(default_factory=list)
    token_probs: Optional[List[float]] = None
    min_prob: Optional[float] = None
    flagged_hallucination: Optional[bool] = None
    error: Optional[str] = None

    @property
    def is_error(self) -> bool:
        return self.error is not None

    @property
    def is_empty(self) -> bool:
        return self.percentage is None and self.amount is None

    @property
    def is_answered(self) -> bool:
        """A parse-success prediction carrying at least one value."""
        return not self.is_error and not self.is_empty

    @property
    def key(self) -> Tuple[str, EntityKind]:
        return (self.doc_id, self.kind)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "kind": self.kind.value,
            "percentage": self.percentage,
            "amount": self.amount,
            "method": self.method.value,
            "provenance": [segment.to_dict(include_text=False) for segment in self.provenance],
            "token_probs": self.token_probs,
            "min_prob": self.min_prob,
            "flagged_hallucination": self.flagged_hallucination,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Extraction":
        doc_id = data["doc_id"]
        probs = data.get("token_probs")
        return cls(
            doc_id=doc_id,
            kind=EntityKind(data["kind"]),
            percentage=_optional_float(data.get("percentage")),
            amount=_optional_float(data.get("amount")),
            method=ExtractionMethod(data.get("method", ExtractionMethod.LLM.value)),
            provenance=[Segment.from_dict(ref, doc_id=doc_id) for ref in data.get("provenance") or []],
            token_probs=[float(p) for p in probs] if probs is not None else None,
            min_prob=_optional_float(data.get("min_prob")),
            flagged_hallucination=data.get("flagged_hallucination"),
            error=data.get("error"),
        )


def sort_extractions(extractions: List[Extraction]) -> List[Extraction]:
    """Order by (doc_id, kind) with kinds in declaration order."""
    return sorted(extractions, key=lambda e: (e.doc_id, e.kind.order))
