"""Distribution of disability percentages across rulings."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from src.core.models import Extraction, ExtractionMethod


@dataclass
class Histogram:
    bin_edges: List[float]
    counts: List[int]
    fractions: List[float]

    def as_rows(self) -> List[tuple]:
        return [(low, high, count, fraction) for low, high, count, fraction
                in zip(self.bin_edges, self.bin_edges[1:], self.counts, self.fractions)]


HISTOGRAM_COLUMNS = ("bin_low", "bin_high", "count", "fraction")


@dataclass
class DisabilityDistribution:
    histogram: Histogram
    n: int
    below_threshold: float
    above_threshold: float
    fraction_below: float
    fraction_above: float


def disability_histogram(percentages: Sequence[float], bin_edges: Sequence[float],
                         below: float = 30.0, above: float = 50.0) -> DisabilityDistribution:
    """
    Histogram plus tail fractions.

    Bins are [a, b) except the last, which also includes its upper edge, so
    100% lands in the top bin. Tail fractions use the raw values: strictly
    below ``below`` and strictly above ``above``.

    Raises:
        ValueError: If percentages is empty or a value falls outside the edges
    """
    values = np.asarray(percentages, dtype=np.float64)
    if values.size == 0:
        raise ValueError("disability_histogram needs at least one percentage")
    edges = np.asarray(bin_edges, dtype=np.float64)
    if values.min() < edges[0] or values.max() > edges[-1]:
        raise ValueError(f"percentages must lie within [{edges[0]}, {edges[-1]}]")

    counts, _ = np.histogram(values, bins=edges)
    total = int(counts.sum())
    return DisabilityDistribution(
        histogram=Histogram(
            bin_edges=[float(e) for e in edges],
            counts=[int(c) for c in counts],
            fractions=[float(c) / total for c in counts],
        ),
        n=int(values.size),
        below_threshold=below,
        above_threshold=above,
        fraction_below=float(np.mean(values < below)),
        fraction_above=float(np.mean(values > above)),
    )


def disability_percentages(extractions: Sequence[Extraction], method: ExtractionMethod) -> List[float]:
    """Percentages of every disability extraction produced by ``method``."""
    return [
        e.percentage for e in extractions
        if e.method is method and not e.is_error and e.kind.carries_percentage and e.percentage is not None
    ]
