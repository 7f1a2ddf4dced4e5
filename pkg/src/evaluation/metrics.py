"""
Extraction scoring and segmentation QA.

Definitions used throughout:

- answered: a prediction that parsed and carries at least one value
- correct: an answered prediction whose gold-present fields match within
  tolerance and whose gold-absent fields are absent
- accuracy = correct / answered (how reliable a delivered value is)
- recall = correct / samples whose entity is present in the ruling

An empty prediction on a sample with no gold values is a correct
abstention; it is counted separately and enters neither ratio.
"""

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.core.config import EvalConfig
from src.core.logger import get_logger
from src.core.models import EntityKind, Extraction, Segment
from src.evaluation.datasets import LabeledSample, entity_present

logger = get_logger(__name__)

PARSE_FAILURE_PREFIX = "parse failure"


def _field_matches(predicted: Optional[float], gold: Optional[float], tolerance: float) -> bool:
    if gold is None:
        return predicted is None
    return predicted is not None and abs(predicted - gold) <= tolerance


def is_correct(prediction: Optional[Extraction], sample: LabeledSample, tolerances: EvalConfig) -> bool:
    """Field-wise match for an answered prediction; unanswered is never correct."""
    if prediction is None or not prediction.is_answered or not sample.has_gold:
        return False
    return (_field_matches(prediction.percentage, sample.gold_percentage, tolerances.percentage_tolerance)
            and _field_matches(prediction.amount, sample.gold_amount, tolerances.amount_tolerance))


@dataclass
class KindReport:
    n_samples: int = 0
    n_gold_present: int = 0
    n_answered: int = 0
    n_correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_answered if self.n_answered else 0.0

    @property
    def recall(self) -> float:
        return self.n_correct / self.n_gold_present if self.n_gold_present else 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data.update(accuracy=self.accuracy, recall=self.recall)
        return data


@dataclass
class EvalReport:
    n_samples: int
    n_gold_present: int
    n_answered: int
    n_correct: int
    accuracy: float
    recall: float
    accuracy_defined: bool
    n_parse_failures: int
    n_errors: int
    n_correct_abstentions: int
    n_unmatched_predictions: int
    per_kind: Dict[str, KindReport] = field(default_factory=dict)
    dataset: str = "1"
    retained_fraction: Optional[float] = None
    hallucination_rate: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_samples": self.n_samples,
            "n_gold_present": self.n_gold_present,
            "n_answered": self.n_answered,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "accuracy_defined": self.accuracy_defined,
            "accuracy_definition": "correct / answered",
            "recall": self.recall,
            "n_parse_failures": self.n_parse_failures,
            "n_errors": self.n_errors,
            "n_correct_abstentions": self.n_correct_abstentions,
            "n_unmatched_predictions": self.n_unmatched_predictions,
            "retained_fraction": self.retained_fraction,
            "hallucination_rate": self.hallucination_rate,
            "per_kind": {kind: report.to_dict() for kind, report in sorted(self.per_kind.items())},
        }


def index_predictions(preds: Sequence[Extraction]) -> Dict[Tuple[str, EntityKind], Extraction]:
    """
    Raises:
        ValueError: If two predictions share (doc_id, kind)
    """
    indexed: Dict[Tuple[str, EntityKind], Extraction] = {}
    for prediction in preds:
        if prediction.key in indexed:
            raise ValueError(f"duplicate prediction for {prediction.doc_id}/{prediction.kind.value}")
        indexed[prediction.key] = prediction
    return indexed


def score_extractions(preds: Sequence[Extraction], gold: Sequence[LabeledSample],
                      tolerances: EvalConfig, dataset: str = "1") -> EvalReport:
    """
    Join predictions to gold on (doc_id, kind) and score them.

    Gold samples without a prediction count as unanswered; predictions
    without a gold sample are ignored (reported as unmatched).

    Raises:
        ValueError: On duplicate predictions
    """
    indexed = index_predictions(preds)
    gold_keys = {sample.key for sample in gold}

    per_kind: Dict[str, KindReport] = {}
    n_parse_failures = n_errors = n_abstentions = 0
    for sample in gold:
        report = per_kind.setdefault(sample.kind.value, KindReport())
        report.n_samples += 1
        report.n_gold_present += int(sample.has_gold)
        prediction = indexed.get(sample.key)
        if prediction is None:
            continue
        if prediction.is_error:
            n_errors += 1
            n_parse_failures += int(prediction.error.startswith(PARSE_FAILURE_PREFIX))
            continue
        if prediction.is_empty:
            n_abstentions += int(not sample.has_gold)
            continue
        report.n_answered += 1
        report.n_correct += int(is_correct(prediction, sample, tolerances))

    n_answered = sum(r.n_answered for r in per_kind.values())
    n_correct = sum(r.n_correct for r in per_kind.values())
    n_gold_present = sum(r.n_gold_present for r in per_kind.values())
    if n_answered == 0:
        logger.warning("No answered predictions; accuracy reported as 0",
                       extra={"stage": "eval", "operation": "score_extractions"})

    return EvalReport(
        n_samples=len(gold),
        n_gold_present=n_gold_present,
        n_answered=n_answered,
        n_correct=n_correct,
        accuracy=n_correct / n_answered if n_answered else 0.0,
        recall=n_correct / n_gold_present if n_gold_present else 0.0,
        accuracy_defined=n_answered > 0,
        n_parse_failures=n_parse_failures,
        n_errors=n_errors,
        n_correct_abstentions=n_abstentions,
        n_unmatched_predictions=sum(1 for key in indexed if key not in gold_keys),
        per_kind=per_kind,
        dataset=dataset,
    )


def segmentation_qa(samples: Sequence[LabeledSample],
                    retriever: Callable[[LabeledSample], List[Segment]]) -> float:
    """
    Fraction of samples whose retrieved segments contain every gold value.

    Only samples with gold values take part.

    Raises:
        ValueError: If no sample has a gold value
    """
    scored = [sample for sample in samples if sample.has_gold]
    if not scored:
        raise ValueError("segmentation QA needs at least one sample with gold values")
    hits = sum(1 for sample in scored if entity_present(sample.gold_values(), retriever(sample)))
    return hits / len(scored)


def format_report(report: EvalReport) -> str:
    """Human-readable table for standard output."""
    lines = [
        "=" * 70,
        f"EXTRACTION EVALUATION (dataset {report.dataset})",
        "=" * 70,
        f"  samples:            {report.n_samples}",
        f"  entity present:     {report.n_gold_present}",
        f"  answered:           {report.n_answered}",
        f"  correct:            {report.n_correct}",
        f"  accuracy:           {report.accuracy:.4f}  (correct / answered)"
        + ("" if report.accuracy_defined else "  [undefined: nothing answered]"),
        f"  recall:             {report.recall:.4f}  (correct / entity present)",
        f"  parse failures:     {report.n_parse_failures}",
        f"  other errors:       {report.n_errors - report.n_parse_failures}",
        f"  correct abstentions:{report.n_correct_abstentions:>4}",
    ]
    if report.retained_fraction is not None:
        lines.append(f"  retained (dataset 2): {report.retained_fraction:.4f}")
    if report.hallucination_rate is not None:
        lines.append(f"  hallucination rate: {report.hallucination_rate:.4f}")
    lines.append("-" * 70)
    lines.append(f"  {'kind':<28}{'n':>5}{'answered':>10}{'correct':>9}{'accuracy':>10}{'recall':>8}")
    for kind, kind_report in sorted(report.per_kind.items()):
        lines.append(
            f"  {kind:<28}{kind_report.n_samples:>5}{kind_report.n_answered:>10}"
            f"{kind_report.n_correct:>9}{kind_report.accuracy:>10.4f}{kind_report.recall:>8.4f}"
        )
    lines.append("=" * 70)
    return "\n".join(lines)
