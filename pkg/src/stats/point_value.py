"""
Point value per ruling and its monthly aggregation.

    PV = PSI_a / PSI_p + (PI_a + MD_a) / PI_p

PSI is the psychological disability (amount, percentage), PI the physical
disability and MD_a the moral-damage amount. Moral damage only ever enters
through the physical term. A term whose percentage is missing or zero is
omitted with a warning; a ruling with no computable term has no point value.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import StatsConfig
from src.core.logger import get_logger
from src.core.models import Document, EntityKind, Extraction, ExtractionMethod

logger = get_logger(__name__)

Month = Tuple[int, int]


class NoPointValue(ValueError):
    """No term of the point-value formula can be computed for a ruling."""


@dataclass
class PointValueRecord:
    doc_id: str
    ruling_month: Optional[Month]
    pv: float
    psi_term: Optional[float] = None
    pi_term: Optional[float] = None
    inputs: Dict[str, Optional[float]] = field(default_factory=dict)

    def as_row(self) -> tuple:
        year, month = self.ruling_month if self.ruling_month else (None, None)
        return (self.doc_id, year, month, self.pv, self.psi_term, self.pi_term)


PV_COLUMNS = ("doc_id", "year", "month", "pv", "psi_term", "pi_term")


@dataclass
class MonthlyPointValue:
    mean: float
    median: float
    n: int


def _warn(message: str, doc_id: str) -> None:
    logger.warning(message, extra={"stage": "stats", "operation": "point_value", "doc_id": doc_id})


def _by_kind(extractions: Sequence[Extraction]) -> Dict[EntityKind, Extraction]:
    found: Dict[EntityKind, Extraction] = {}
    for extraction in extractions:
        if not extraction.is_error and extraction.kind not in found:
            found[extraction.kind] = extraction
    return found


def point_value(extractions: Sequence[Extraction], ruling_month: Optional[Month] = None,
                psychophysical_as_physical: bool = False) -> PointValueRecord:
    """
    Point value of one ruling from its extractions.

    With psychophysical_as_physical, a psychophysical disability stands in
    for the physical one when the ruling has no physical extraction.

    Raises:
        NoPointValue: If neither term can be computed
        ValueError: If extractions span several documents
    """
    doc_ids = {e.doc_id for e in extractions}
    if len(doc_ids) > 1:
        raise ValueError(f"point_value expects one document, got {sorted(doc_ids)}")
    doc_id = next(iter(doc_ids)) if doc_ids else ""

    kinds = _by_kind(extractions)
    physical = kinds.get(EntityKind.PHYSICAL_DISABILITY)
    if physical is None and psychophysical_as_physical:
        physical = kinds.get(EntityKind.PSYCHOPHYSICAL_DISABILITY)
    psychological = kinds.get(EntityKind.PSYCHOLOGICAL_DISABILITY)
    moral = kinds.get(EntityKind.MORAL_DAMAGE)

    psi_a = psychological.amount if psychological else None
    psi_p = psychological.percentage if psychological else None
    pi_a = physical.amount if physical else None
    pi_p = physical.percentage if physical else None
    md_a = moral.amount if moral else None

    psi_term = None
    if psi_a is not None:
        if psi_p is not None and psi_p > 0:
            psi_term = psi_a / psi_p
        else:
            _warn(f"Psychological percentage {psi_p} for {doc_id}; term omitted", doc_id)

    pi_term = None
    if pi_a is not None or md_a is not None:
        if pi_p is not None and pi_p > 0:
            pi_term = ((pi_a or 0.0) + (md_a or 0.0)) / pi_p
        else:
            _warn(f"Physical percentage {pi_p} for {doc_id}; term omitted", doc_id)

    terms = [t for t in (psi_term, pi_term) if t is not None]
    if not terms:
        raise NoPointValue(f"no computable point-value term for {doc_id}")
    return PointValueRecord(
        doc_id=doc_id,
        ruling_month=ruling_month,
        pv=sum(terms),
        psi_term=psi_term,
        pi_term=pi_term,
        inputs={"psi_a": psi_a, "psi_p": psi_p, "pi_a": pi_a, "pi_p": pi_p, "md_a": md_a},
    )


def _selected(doc: Optional[Document], cfg: StatsConfig) -> bool:
    if doc is None:
        return not cfg.jurisdictions and cfg.year is None
    if cfg.jurisdictions and doc.jurisdiction not in cfg.jurisdictions:
        return False
    if cfg.year is not None and (doc.ruling_date is None or doc.ruling_date.year != cfg.year):
        return False
    return True


def compute_point_values(
    extractions: Sequence[Extraction],
    documents: Dict[str, Document],
    cfg: StatsConfig,
) -> Tuple[List[PointValueRecord], int]:
    """
    Point values for every selected ruling.

    Extractions are restricted to cfg.source_method; rulings outside the
    jurisdiction/year filters are left out.

    Returns:
        (records ordered by doc_id, number of rulings without a point value)
    """
    method = ExtractionMethod(cfg.source_method)
    grouped: Dict[str, List[Extraction]] = {}
    for extraction in extractions:
        if extraction.method is method:
            grouped.setdefault(extraction.doc_id, []).append(extraction)

    records: List[PointValueRecord] = []
    skipped = 0
    for doc_id in sorted(grouped):
        doc = documents.get(doc_id)
        if not _selected(doc, cfg):
            continue
        try:
            records.append(point_value(grouped[doc_id], doc.ruling_month if doc else None,
                                       cfg.psychophysical_as_physical))
        except NoPointValue:
            skipped += 1
    logger.info(
        f"Point values: {len(records)} computed, {skipped} skipped",
        extra={"stage": "stats", "operation": "compute_point_values",
               "metadata": {"computed": len(records), "skipped": skipped}}
    )
    return records, skipped


def monthly_point_value(records: Sequence[PointValueRecord]) -> Dict[Month, MonthlyPointValue]:
    """Mean, median and count per ruling month, in chronological order."""
    grouped: Dict[Month, List[float]] = {}
    undated = 0
    for record in records:
        if record.ruling_month is None:
            undated += 1
            continue
        grouped.setdefault(record.ruling_month, []).append(record.pv)
    if undated:
        logger.warning(f"{undated} point values without ruling month left out of monthly aggregates",
                       extra={"stage": "stats", "operation": "monthly_point_value"})
    return {
        month: MonthlyPointValue(mean=float(np.mean(values)), median=float(np.median(values)), n=len(values))
        for month, values in sorted(grouped.items())
    }
