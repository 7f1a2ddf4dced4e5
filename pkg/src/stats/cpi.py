"""
Monthly point value against a consumer price index series.

CPI CSV: header ``year,month,index``; one row per month, strictly
increasing, positive index values.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.artifacts import read_csv_rows
from src.core.logger import get_logger
from src.stats.point_value import MonthlyPointValue

logger = get_logger(__name__)

Month = Tuple[int, int]


@dataclass
class CpiSeries:
    """(year, month) -> index value, months strictly increasing."""
    values: Dict[Month, float]

    def __post_init__(self):
        months = list(self.values)
        if any(b <= a for a, b in zip(months, months[1:])):
            raise ValueError("CPI months must be strictly increasing")
        for month, value in self.values.items():
            if not value > 0:
                raise ValueError(f"CPI value for {month[0]}-{month[1]:02d} must be positive, got {value}")


def load_cpi(path: Path) -> CpiSeries:
    """
    Raises:
        FileNotFoundError: If path does not exist
        ValueError: On missing columns, bad numbers or ordering/positivity violations
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CPI file not found: {path}")
    values: Dict[Month, float] = {}
    for number, row in enumerate(read_csv_rows(path), start=1):
        try:
            values[(int(row["year"]), int(row["month"]))] = float(row["index"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"{path}: bad CPI row {number}: {e}") from e
    return CpiSeries(values)


@dataclass
class CpiRow:
    month: Month
    pv: float
    cpi: float
    pv_indexed: float

    def as_row(self) -> tuple:
        return (self.month[0], self.month[1], self.pv, self.cpi, self.pv_indexed)


CPI_COLUMNS = ("year", "month", "pv", "cpi", "pv_indexed")


@dataclass
class CpiComparison:
    rows: List[CpiRow] = field(default_factory=list)
    correlation: Optional[float] = None
    aggregate: str = "mean"


def cpi_compare(pv_monthly: Dict[Month, MonthlyPointValue], cpi: CpiSeries,
                aggregate: str = "mean") -> CpiComparison:
    """
    Join monthly point values to CPI on the months both cover.

    pv_indexed is (pv / cpi) normalized so the first shared month is 1.0.
    The Pearson correlation of pv and cpi needs at least two shared months
    and non-constant series; otherwise it is absent.
    """
    months = sorted(set(pv_monthly) & set(cpi.values))
    pv = np.array([getattr(pv_monthly[m], aggregate) for m in months], dtype=np.float64)
    index = np.array([cpi.values[m] for m in months], dtype=np.float64)

    rows: List[CpiRow] = []
    if months:
        ratio = pv / index
        base = ratio[0]
        indexed = ratio / base if base != 0 else np.full_like(ratio, np.nan)
        rows = [CpiRow(m, float(p), float(c), float(i)) for m, p, c, i in zip(months, pv, index, indexed)]

    correlation = None
    if len(months) < 2:
        logger.warning(f"Only {len(months)} month(s) shared with the CPI series; no correlation",
                       extra={"stage": "stats", "operation": "cpi_compare"})
    elif np.std(pv) == 0 or np.std(index) == 0:
        logger.warning("Constant series; correlation undefined",
                       extra={"stage": "stats", "operation": "cpi_compare"})
    else:
        correlation = float(np.clip(np.corrcoef(pv, index)[0, 1], -1.0, 1.0))
    return CpiComparison(rows=rows, correlation=correlation, aggregate=aggregate)
