"""
Tests for the hallucination benchmark and the threshold sweep.

These tests verify that:
- The rate is non-empty answers over all runs on entity-absent segments
- Parse failures are counted as invalid, not as hallucinations
- Flag counts never decrease as the threshold grows
"""

import json

import pytest

from src.core.config import EvalConfig
from src.core.models import EntityKind, Extraction, Segment, SegmentOrigin
from src.evaluation.datasets import LabeledSample, entity_present
from src.evaluation.hallucination_bench import (
    NegativeCase,
    SWEEP_COLUMNS,
    hallucination_benchmark,
    load_negatives,
    negatives_from_samples,
    threshold_sweep,
)


def _case(i):
    text = f"costas a cargo de la demandada, expediente {i}"
    return NegativeCase(f"n{i:02d}", EntityKind.MORAL_DAMAGE,
                        [Segment(f"n{i:02d}", text, (0, len(text)), SegmentOrigin.EXPANDED_BLOCK)])


class TestHallucinationBenchmark:
    """Test the negative-segment benchmark."""

    def test_rate(self):
        negatives = [_case(i) for i in range(30)]

        def extractor(case):
            invented = int(case.doc_id[1:]) < 9
            return Extraction(case.doc_id, case.kind, amount=500000.0 if invented else None)

        result = hallucination_benchmark(negatives, extractor)

        assert result.n_runs == 30
        assert result.n_hallucinated == 9
        assert result.rate == pytest.approx(0.30)
        assert result.n_empty == 21

    def test_parse_failures_are_invalid(self):
        negatives = [_case(i) for i in range(4)]

        def extractor(case):
            if case.doc_id == "n00":
                return Extraction(case.doc_id, case.kind, error="parse failure: no JSON object")
            if case.doc_id == "n01":
                return Extraction(case.doc_id, case.kind, error="ServiceError: HTTP 500")
            return Extraction(case.doc_id, case.kind)

        result = hallucination_benchmark(negatives, extractor)

        assert result.rate == 0.0
        assert result.n_invalid == 1
        assert result.n_errors == 2
        assert result.n_empty == 2
        assert result.to_dict()["n_runs"] == 4

    def test_empty_negatives(self):
        with pytest.raises(ValueError):
            hallucination_benchmark([], lambda case: Extraction(case.doc_id, case.kind))


class TestNegatives:
    """Test building negative cases."""

    def test_from_discarded_samples(self):
        kept = LabeledSample("a", EntityKind.MORAL_DAMAGE, gold_amount=300000.0,
                             offered_segments=[Segment("a", "daño moral $300.000", (0, 19), SegmentOrigin.EXPANDED_BLOCK)])
        dropped = LabeledSample("b", EntityKind.MORAL_DAMAGE, gold_amount=300000.0,
                                offered_segments=[Segment("b", "costas", (0, 6), SegmentOrigin.EXPANDED_BLOCK)])
        for sample in (kept, dropped):
            sample.entity_present_in_segments = entity_present(sample.gold_values(), sample.offered_segments)

        negatives = negatives_from_samples([kept, dropped])

        assert [(n.doc_id, n.kind) for n in negatives] == [("b", EntityKind.MORAL_DAMAGE)]

    def test_load(self, tmp_path):
        path = tmp_path / "negatives.jsonl"
        path.write_text(json.dumps({"doc_id": "x", "kind": "physical_disability",
                                    "segments": [{"text": "sin datos"}]}) + "\n", encoding="utf-8")
        cases = load_negatives(path)
        assert cases[0].segments[0].text == "sin datos"
        assert cases[0].segments[0].char_span == (0, 9)

    def test_load_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_negatives(tmp_path / "negatives.jsonl")


class TestThresholdSweep:
    """Test flag counts across thresholds."""

    def _runs(self):
        gold = [LabeledSample(f"d{i}", EntityKind.MORAL_DAMAGE, gold_amount=100.0) for i in range(4)]
        gold.append(LabeledSample("neg", EntityKind.MORAL_DAMAGE))
        extractions = [
            Extraction("d0", EntityKind.MORAL_DAMAGE, amount=100.0, token_probs=[0.9, 0.8]),
            Extraction("d1", EntityKind.MORAL_DAMAGE, amount=100.0, token_probs=[0.95, 0.45]),
            Extraction("d2", EntityKind.MORAL_DAMAGE, amount=7.0, token_probs=[0.3, 0.9]),
            Extraction("d3", EntityKind.MORAL_DAMAGE, amount=7.0),
            Extraction("neg", EntityKind.MORAL_DAMAGE, token_probs=[0.99]),
        ]
        return extractions, gold

    def test_counts(self):
        extractions, gold = self._runs()
        rows = threshold_sweep(extractions, gold, [0.5, 0.0, 1.0], EvalConfig())

        assert [row.p_u for row in rows] == [0.0, 0.5, 1.0]
        assert all(row.n_runs == 4 for row in rows)
        assert [row.n_flagged for row in rows] == [0, 2, 4]
        middle = rows[1]
        assert middle.n_incorrect == 1
        assert middle.flagged_among_incorrect == 1.0
        assert middle.flagged_among_correct == pytest.approx(1 / 3)
        assert len(middle.as_row()) == len(SWEEP_COLUMNS)

    def test_monotone(self):
        extractions, gold = self._runs()
        grid = [i / 20 for i in range(21)]
        flagged = [row.n_flagged for row in threshold_sweep(extractions, gold, grid, EvalConfig())]
        assert flagged == sorted(flagged)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
