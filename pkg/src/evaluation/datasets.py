"""
Gold datasets and Dataset-2 curation.

Gold JSONL lines: {"doc_id", "kind", "gold_percentage", "gold_amount",
"segments": [{"text", ...}], "reviewed"}. Dataset 1 is every labelled sample;
Dataset 2 keeps only samples whose gold values can actually be read in the
segments offered to the extractor.

A gold value "occurs" in a segment when some numeral in the segment text
normalizes (Argentine separators) to the same number, so "$ 500.000" in the
text matches a gold amount of 500000.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from src.core.artifacts import read_jsonl
from src.core.logger import get_logger
from src.core.models import EntityKind, Extraction, Segment
from src.parsers.regex_extractor import extract_numerals

logger = get_logger(__name__)

PRESENCE_TOLERANCE = 1e-6


@dataclass
class LabeledSample:
    doc_id: str
    kind: EntityKind
    gold_percentage: Optional[float] = None
    gold_amount: Optional[float] = None
    offered_segments: List[Segment] = field(default_factory=list)
    entity_present_in_segments: bool = False
    reviewed: bool = True

    @property
    def key(self) -> Tuple[str, EntityKind]:
        return (self.doc_id, self.kind)

    @property
    def has_gold(self) -> bool:
        """True when the entity is present in the ruling (any gold value)."""
        return self.gold_percentage is not None or self.gold_amount is not None

    def gold_values(self) -> List[float]:
        return [v for v in (self.gold_percentage, self.gold_amount) if v is not None]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "kind": self.kind.value,
            "gold_percentage": self.gold_percentage,
            "gold_amount": self.gold_amount,
            "segments": [segment.to_dict() for segment in self.offered_segments],
            "reviewed": self.reviewed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LabeledSample":
        doc_id = str(data["doc_id"])
        kind = EntityKind(data["kind"])
        percentage = data.get("gold_percentage")
        amount = data.get("gold_amount")
        sample = cls(
            doc_id=doc_id,
            kind=kind,
            gold_percentage=None if percentage is None or not kind.carries_percentage else float(percentage),
            gold_amount=None if amount is None else float(amount),
            offered_segments=[Segment.from_dict(s, doc_id=doc_id) for s in data.get("segments") or []],
            reviewed=bool(data.get("reviewed", True)),
        )
        sample.entity_present_in_segments = entity_present(sample.gold_values(), sample.offered_segments)
        return sample


def value_in_text(value: float, text: str, tolerance: float = PRESENCE_TOLERANCE) -> bool:
    return any(abs(number - value) <= tolerance for number in extract_numerals(text))


def entity_present(values: Sequence[float], segments: Sequence[Segment]) -> bool:
    """
    Every gold value occurs in at least one segment.

    Vacuously true for an empty value list (entity absent from the ruling).
    """
    texts = [segment.text for segment in segments]
    return all(any(value_in_text(value, text) for text in texts) for value in values)


def load_gold(path: Path) -> List[LabeledSample]:
    """
    Read a gold JSONL file.

    Raises:
        FileNotFoundError: If path does not exist
        ValueError: On duplicate (doc_id, kind) or a malformed line
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Gold dataset not found: {path}")
    _, records = read_jsonl(path)
    samples: List[LabeledSample] = []
    seen = set()
    for number, record in enumerate(records, start=1):
        try:
            sample = LabeledSample.from_dict(record)
        except (KeyError, ValueError, TypeError) as e:
            raise ValueError(f"{path}: bad gold record {number}: {e}") from e
        if sample.key in seen:
            raise ValueError(f"{path}: duplicate gold sample {sample.doc_id}/{sample.kind.value}")
        seen.add(sample.key)
        samples.append(sample)
    return samples


def filter_dataset2(samples: Sequence[LabeledSample]) -> List[LabeledSample]:
    """Samples whose gold values occur in their offered segments, order kept."""
    return [sample for sample in samples if sample.entity_present_in_segments]


def discarded_by_dataset2(samples: Sequence[LabeledSample]) -> List[LabeledSample]:
    return [sample for sample in samples if not sample.entity_present_in_segments]


def retained_fraction(samples: Sequence[LabeledSample]) -> Optional[float]:
    if not samples:
        return None
    return len(filter_dataset2(samples)) / len(samples)


def gold_segments(samples: Iterable[LabeledSample]) -> Dict[Tuple[str, EntityKind], List[Segment]]:
    return {sample.key: list(sample.offered_segments) for sample in samples}


def label_assist_records(extractions: Sequence[Extraction]) -> List[Dict[str, Any]]:
    """
    Gold-format records pre-filled from extractions, for manual correction.

    Error records become unlabelled samples (both values null). Every record
    is marked ``reviewed: false``.
    """
    records = []
    for extraction in extractions:
        sample = LabeledSample(
            doc_id=extraction.doc_id,
            kind=extraction.kind,
            gold_percentage=None if extraction.is_error else extraction.percentage,
            gold_amount=None if extraction.is_error else extraction.amount,
            offered_segments=list(extraction.provenance),
            reviewed=False,
        )
        records.append(sample.to_dict())
    return records
