"""
Tests for point values, the disability distribution and the CPI comparison.

These tests verify that:
- The point value follows PSI_a/PSI_p + (PI_a + MD_a)/PI_p
- Degenerate inputs omit terms instead of dividing by zero
- Histogram counts sum to n and the tails use strict comparisons
- CPI correlation is absent for fewer than two months or a flat series
"""

import logging
from datetime import date

import numpy as np
import pytest

from src.core.config import StatsConfig
from src.core.models import EntityKind, Extraction, ExtractionMethod
from src.stats.cpi import CpiSeries, cpi_compare, load_cpi
from src.stats.distribution import disability_histogram, disability_percentages
from src.stats.point_value import (
    MonthlyPointValue,
    NoPointValue,
    PointValueRecord,
    compute_point_values,
    monthly_point_value,
    point_value,
)
from tests.conftest import make_document

PHYSICAL = EntityKind.PHYSICAL_DISABILITY
PSYCHOLOGICAL = EntityKind.PSYCHOLOGICAL_DISABILITY
PSYCHOPHYSICAL = EntityKind.PSYCHOPHYSICAL_DISABILITY
MORAL = EntityKind.MORAL_DAMAGE


def _e(doc_id, kind, percentage=None, amount=None, method=ExtractionMethod.LLM, error=None):
    return Extraction(doc_id, kind, percentage=percentage, amount=amount, method=method, error=error)


class TestPointValue:
    """Test the per-ruling formula."""

    def test_full_formula(self):
        record = point_value([
            _e("f1", PSYCHOLOGICAL, 10.0, 200000.0),
            _e("f1", PHYSICAL, 20.0, 1500000.0),
            _e("f1", MORAL, amount=500000.0),
        ], ruling_month=(2023, 10))
        assert record.psi_term == pytest.approx(20000.0)
        assert record.pi_term == pytest.approx(100000.0)
        assert record.pv == pytest.approx(120000.0)
        assert record.as_row() == ("f1", 2023, 10, record.pv, record.psi_term, record.pi_term)

    def test_physical_only(self):
        assert point_value([_e("f1", PHYSICAL, 25.0, 1000000.0)]).pv == pytest.approx(40000.0)

    def test_moral_damage_only_enters_physical_term(self):
        record = point_value([_e("f1", PSYCHOLOGICAL, 10.0, 100000.0), _e("f1", MORAL, amount=500000.0)])
        assert record.pi_term is None
        assert record.pv == pytest.approx(10000.0)

    def test_zero_percentage_term_omitted(self, caplog):
        with caplog.at_level(logging.WARNING):
            record = point_value([_e("f1", PSYCHOLOGICAL, 0.0, 100000.0), _e("f1", PHYSICAL, 10.0, 50000.0)])
        assert record.psi_term is None
        assert record.pv == pytest.approx(5000.0)
        assert any("term omitted" in r.getMessage() for r in caplog.records)

    def test_no_term(self):
        with pytest.raises(NoPointValue):
            point_value([_e("f1", MORAL, amount=500000.0)])
        with pytest.raises(NoPointValue):
            point_value([_e("f1", PHYSICAL, 20.0, 1.0, error="parse failure: x")])

    def test_psychophysical_substitution(self):
        extractions = [_e("f1", PSYCHOPHYSICAL, 40.0, 400000.0)]
        with pytest.raises(NoPointValue):
            point_value(extractions)
        assert point_value(extractions, psychophysical_as_physical=True).pv == pytest.approx(10000.0)

    def test_several_documents(self):
        with pytest.raises(ValueError):
            point_value([_e("a", PHYSICAL, 1.0, 1.0), _e("b", PHYSICAL, 1.0, 1.0)])


class TestPointValueProperties:
    """Test the formula against random inputs."""

    @staticmethod
    def _ruling(psi_a, psi_p, pi_a, pi_p, md_a):
        return [
            _e("f1", PSYCHOLOGICAL, float(psi_p), float(psi_a)),
            _e("f1", PHYSICAL, float(pi_p), float(pi_a)),
            _e("f1", MORAL, amount=float(md_a)),
        ]

    def _draw(self, rng):
        return (rng.uniform(1e3, 1e7), rng.uniform(0.5, 100.0), rng.uniform(1e3, 1e7),
                rng.uniform(0.5, 100.0), rng.uniform(0.0, 1e7))

    def test_formula_on_random_rulings(self):
        rng = np.random.default_rng(20231012)
        for _ in range(1000):
            psi_a, psi_p, pi_a, pi_p, md_a = self._draw(rng)
            record = point_value(self._ruling(psi_a, psi_p, pi_a, pi_p, md_a))
            assert record.pv == pytest.approx(psi_a / psi_p + (pi_a + md_a) / pi_p, rel=1e-12)

    def test_linear_in_amounts(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            psi_a, psi_p, pi_a, pi_p, md_a = self._draw(rng)
            other = self._draw(rng)
            c = rng.uniform(0.1, 10.0)
            base = point_value(self._ruling(psi_a, psi_p, pi_a, pi_p, md_a)).pv
            scaled = point_value(self._ruling(c * psi_a, psi_p, c * pi_a, pi_p, c * md_a)).pv
            summed = point_value(self._ruling(psi_a + other[0], psi_p, pi_a + other[2], pi_p, md_a + other[4])).pv
            extra = point_value(self._ruling(other[0], psi_p, other[2], pi_p, other[4])).pv
            assert scaled == pytest.approx(c * base, rel=1e-9)
            assert summed == pytest.approx(base + extra, rel=1e-9)

    def test_joint_scaling_leaves_value_unchanged(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            psi_a, psi_p, pi_a, pi_p, md_a = self._draw(rng)
            c = rng.uniform(0.2, 1.0)
            base = point_value(self._ruling(psi_a, psi_p, pi_a, pi_p, md_a)).pv
            scaled = point_value(self._ruling(c * psi_a, c * psi_p, c * pi_a, c * pi_p, c * md_a)).pv
            assert scaled == pytest.approx(base, rel=1e-9)


class TestComputePointValues:
    """Test corpus point values with filters."""

    def test_method_and_filters(self):
        documents = {
            "a": make_document("a", "x", ruling_date=date(2023, 3, 1), jurisdiction="CABA"),
            "b": make_document("b", "x", ruling_date=date(2022, 3, 1), jurisdiction="CABA"),
            "c": make_document("c", "x", ruling_date=date(2023, 5, 1), jurisdiction="Mendoza"),
            "d": make_document("d", "x", ruling_date=date(2023, 6, 1), jurisdiction="CABA"),
        }
        extractions = [
            _e("a", PHYSICAL, 10.0, 1000.0),
            _e("b", PHYSICAL, 10.0, 1000.0),
            _e("c", PHYSICAL, 10.0, 1000.0),
            _e("d", MORAL, amount=1000.0),
            _e("a", PSYCHOLOGICAL, 10.0, 1000.0, method=ExtractionMethod.REGEX),
        ]
        cfg = StatsConfig(jurisdictions=["CABA"], year=2023)

        records, skipped = compute_point_values(extractions, documents, cfg)

        assert [r.doc_id for r in records] == ["a"]
        assert records[0].pv == pytest.approx(100.0)
        assert records[0].ruling_month == (2023, 3)
        assert skipped == 1

    def test_unknown_document_kept_without_filters(self):
        records, _ = compute_point_values([_e("z", PHYSICAL, 10.0, 1000.0)], {}, StatsConfig())
        assert records[0].ruling_month is None


class TestMonthly:
    """Test monthly aggregation."""

    def test_mean_median_count(self):
        records = [
            PointValueRecord("a", (2023, 2), 10.0),
            PointValueRecord("b", (2023, 1), 1.0),
            PointValueRecord("c", (2023, 1), 2.0),
            PointValueRecord("d", (2023, 1), 9.0),
            PointValueRecord("e", None, 99.0),
        ]
        monthly = monthly_point_value(records)
        assert list(monthly) == [(2023, 1), (2023, 2)]
        assert monthly[(2023, 1)] == MonthlyPointValue(mean=4.0, median=2.0, n=3)


class TestDistribution:
    """Test the disability histogram."""

    def test_counts_sum_and_top_edge(self):
        values = [0.0, 5.0, 10.0, 29.9, 30.0, 55.0, 100.0]
        dist = disability_histogram(values, [0, 10, 20, 30, 50, 100])
        assert sum(dist.histogram.counts) == dist.n == 7
        assert dist.histogram.counts == [2, 1, 1, 1, 2]
        assert sum(dist.histogram.fractions) == pytest.approx(1.0)

    def test_fraction_below_thirty(self):
        values = [5.0] * 9 + [60.0]
        dist = disability_histogram(values, [0, 50, 100])
        assert dist.fraction_below == pytest.approx(0.90)
        assert dist.fraction_above == pytest.approx(0.10)

    def test_mixture_mass_below_thirty(self):
        rng = np.random.default_rng(90)
        low = rng.random(10000) < 0.90
        values = np.where(low, rng.uniform(1.0, 30.0, 10000), rng.uniform(30.5, 100.0, 10000))
        dist = disability_histogram(values.tolist(), [0, 10, 20, 30, 50, 100])
        assert dist.n == 10000
        assert sum(dist.histogram.counts) == 10000
        assert dist.fraction_below == pytest.approx(0.90, abs=0.01)
        assert sum(dist.histogram.counts[:3]) == int(low.sum())

    def test_tails_are_strict(self):
        dist = disability_histogram([30.0, 50.0], [0, 100])
        assert dist.fraction_below == 0.0
        assert dist.fraction_above == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            disability_histogram([], [0, 100])
        with pytest.raises(ValueError):
            disability_histogram([150.0], [0, 100])

    def test_percentages_selection(self):
        extractions = [
            _e("a", PHYSICAL, 20.0),
            _e("a", MORAL, amount=5.0),
            _e("b", PSYCHOLOGICAL, 15.0, method=ExtractionMethod.REGEX),
            _e("c", PHYSICAL, 30.0, error="parse failure: x"),
            _e("d", PSYCHOPHYSICAL, 45.0),
        ]
        assert disability_percentages(extractions, ExtractionMethod.LLM) == [20.0, 45.0]


class TestCpi:
    """Test the CPI join and correlation."""

    def test_perfect_correlation_and_indexing(self):
        pv = {(2023, m): MonthlyPointValue(mean=100.0 * m, median=0.0, n=1) for m in (1, 2, 3)}
        cpi = CpiSeries({(2023, 1): 10.0, (2023, 2): 20.0, (2023, 3): 30.0, (2023, 4): 40.0})

        comparison = cpi_compare(pv, cpi)

        assert comparison.correlation == pytest.approx(1.0)
        assert [row.month for row in comparison.rows] == [(2023, 1), (2023, 2), (2023, 3)]
        assert [row.pv_indexed for row in comparison.rows] == pytest.approx([1.0, 1.0, 1.0])

    def test_single_month_has_no_correlation(self):
        pv = {(2023, 1): MonthlyPointValue(mean=1.0, median=1.0, n=1)}
        comparison = cpi_compare(pv, CpiSeries({(2023, 1): 10.0}))
        assert comparison.correlation is None
        assert len(comparison.rows) == 1

    def test_constant_series_has_no_correlation(self):
        pv = {(2023, m): MonthlyPointValue(mean=5.0, median=5.0, n=1) for m in (1, 2, 3)}
        cpi = CpiSeries({(2023, 1): 10.0, (2023, 2): 11.0, (2023, 3): 12.0})
        assert cpi_compare(pv, cpi).correlation is None

    def test_median_aggregate(self):
        pv = {(2023, m): MonthlyPointValue(mean=1.0, median=float(m), n=1) for m in (1, 2)}
        cpi = CpiSeries({(2023, 1): 1.0, (2023, 2): 2.0})
        assert cpi_compare(pv, cpi, aggregate="median").rows[1].pv == 2.0

    def test_series_validation(self):
        with pytest.raises(ValueError):
            CpiSeries({(2023, 2): 1.0, (2023, 1): 1.0})
        with pytest.raises(ValueError):
            CpiSeries({(2023, 1): 0.0})

    def test_load_csv(self, tmp_path):
        path = tmp_path / "cpi.csv"
        path.write_text("year,month,index\n2023,1,100.5\n2023,2,104.2\n", encoding="utf-8")
        assert load_cpi(path).values == {(2023, 1): 100.5, (2023, 2): 104.2}

    def test_load_bad_row(self, tmp_path):
        path = tmp_path / "cpi.csv"
        path.write_text("year,month,index\n2023,1,abc\n", encoding="utf-8")
        with pytest.raises(ValueError, match="bad CPI row 1"):
            load_cpi(path)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
