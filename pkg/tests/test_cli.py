"""
End-to-end tests for the pipeline CLI with offline backends.

These tests verify that:
- ingest -> query-gen -> extract -> eval -> stats runs on a small corpus
- Mock fixtures can be authored from the prompts sidecar
- Reruns with a pinned timestamp produce byte-identical artifacts
- Errors map to the documented exit codes
"""

import json

import pytest

from src.cli.pipeline import main
from src.core.artifacts import read_csv_rows, read_jsonl
from tests.conftest import write_config_files

RULING_A = (
    "Buenos Aires, 12 de octubre de 2023.\n"
    "AUTOS: Gómez c/ Transportes del Sur s/ daños y perjuicios.\n"
    "Se fija una incapacidad física del 20% y se otorga por ella la suma de $1.500.000.\n"
    "Por daño moral se fija la suma de $500.000.\n"
    "Las costas se imponen a la demandada vencida.\n"
)

RULING_B = (
    "Buenos Aires, 3 de noviembre de 2023.\n"
    "AUTOS: Pérez c/ Línea 60 s/ daños y perjuicios.\n"
    "Se fija una incapacidad física del 10% y se otorga por ella la suma de $400.000.\n"
    "Se rechaza el reclamo por daño moral.\n"
    "Las costas se imponen en el orden causado.\n"
)

ANSWERS = {
    ("fallo-a", "physical_disability"): '{"percentage": 20, "amount": "$1.500.000"}',
    ("fallo-a", "moral_damage"): 'Respuesta: {"percentage": null, "amount": 500000}',
    ("fallo-b", "physical_disability"): '{"percentage": "10 %", "amount": 400000}',
    ("fallo-b", "moral_damage"): '{"percentage": null, "amount": null}',
}

GOLD = [
    {"doc_id": "fallo-a", "kind": "physical_disability", "gold_percentage": 20, "gold_amount": 1500000},
    {"doc_id": "fallo-a", "kind": "moral_damage", "gold_amount": 500000},
    {"doc_id": "fallo-b", "kind": "physical_disability", "gold_percentage": 10, "gold_amount": 400000},
    {"doc_id": "fallo-b", "kind": "moral_damage"},
]

RERUN_COMMANDS = [
    ("query-gen",),
    ("extract", "--method", "llm"),
    ("eval", "--dataset", "1"),
    ("extract", "--method", "regex"),
    ("stats",),
]

RERUN_ARTIFACTS = [
    "queries.yml",
    "extractions_llm.jsonl",
    "prompts_llm.jsonl",
    "eval_report_dataset1.json",
    "extractions_regex.jsonl",
    "point_values.csv",
    "point_values_monthly.csv",
    "cpi_comparison.csv",
    "disability_histogram.csv",
    "stats_summary.json",
]


def _ruling_percentage(i):
    return 5 + (i % 9) * 5


def _ruling_amount(i):
    return (i + 1) * 100000


def _ruling_text(i):
    amount = f"{_ruling_amount(i):,}".replace(",", ".")
    return (
        f"Buenos Aires, {i + 1} de marzo de 2023.\n"
        f"AUTOS: Actor {i} c/ Empresa de Transporte s/ daños y perjuicios.\n"
        f"Se fija una incapacidad física del {_ruling_percentage(i)}% "
        f"y se otorga por ella la suma de ${amount}.\n"
        "Las costas se imponen a la demandada vencida.\n"
    )


def _run(files, *args):
    return main(["--config", str(files["config"]), "--paths-config", str(files["paths"]), *args])


def _author_fixtures(prompts_path, fixtures_path):
    _, records = read_jsonl(prompts_path)
    lines = []
    for record in records:
        lines.append(json.dumps({
            "prompt_sha256": record["prompt_sha256"],
            "response_text": ANSWERS[(record["doc_id"], record["kind"])],
            "token_probs": [0.95, 0.4] if record["doc_id"] == "fallo-b" else [0.99, 0.9],
        }))
    fixtures_path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestPipelineRun:
    """Test a complete offline run."""

    def test_end_to_end(self, workspace):
        files, out = workspace["files"], workspace["output"]

        assert _run(files, "ingest") == 0
        _, corpus = read_jsonl(out / "corpus.jsonl")
        assert [doc["id"] for doc in corpus] == ["fallo-a", "fallo-b"]
        assert corpus[0]["ruling_date"] == "2023-10-12"

        assert _run(files, "query-gen") == 0
        assert "moral_damage" in (out / "queries.yml").read_text(encoding="utf-8")

        # empty fixtures: every call fails, the prompts sidecar is still written
        assert _run(files, "extract", "--method", "llm") == 0
        _, failed = read_jsonl(out / "extractions_llm.jsonl")
        assert all(record["error"] for record in failed)
        _author_fixtures(out / "prompts_llm.jsonl", workspace["fixtures"])

        assert _run(files, "extract", "--method", "llm") == 0
        header, extractions = read_jsonl(out / "extractions_llm.jsonl")
        assert header["method"] == "llm"
        by_key = {(e["doc_id"], e["kind"]): e for e in extractions}
        assert len(by_key) == 4
        assert by_key[("fallo-a", "physical_disability")]["amount"] == 1500000.0
        assert by_key[("fallo-b", "physical_disability")]["percentage"] == 10.0
        assert by_key[("fallo-b", "physical_disability")]["flagged_hallucination"] is True
        assert by_key[("fallo-a", "moral_damage")]["flagged_hallucination"] is False

        assert _run(files, "eval", "--dataset", "1") == 0
        report = json.loads((out / "eval_report_dataset1.json").read_text(encoding="utf-8"))
        assert report["n_answered"] == 3
        assert report["accuracy"] == 1.0
        assert report["n_correct_abstentions"] == 1

        assert _run(files, "extract", "--method", "regex") == 0
        assert _run(files, "stats") == 0
        point_values = read_csv_rows(out / "point_values.csv")
        assert [row["doc_id"] for row in point_values] == ["fallo-a", "fallo-b"]
        summary = json.loads((out / "stats_summary.json").read_text(encoding="utf-8"))
        assert summary["months"] == 2
        assert summary["cpi_months"] == 2
        assert summary["disability_n"] == 2

        assert _run(files, "label-assist") == 0
        _, labels = read_jsonl(out / "label_assist.jsonl")
        assert all(record["reviewed"] is False for record in labels)

    def test_rerun_is_byte_identical(self, workspace):
        files, out = workspace["files"], workspace["output"]
        assert _run(files, "query-gen") == 0
        assert _run(files, "extract", "--method", "llm") == 0
        _author_fixtures(out / "prompts_llm.jsonl", workspace["fixtures"])

        def run_all():
            for args in RERUN_COMMANDS:
                assert _run(files, *args) == 0
            return {name: (out / name).read_bytes() for name in RERUN_ARTIFACTS}

        first = run_all()
        assert json.loads(first["eval_report_dataset1.json"])["accuracy"] == 1.0
        assert run_all() == first

    def test_segment_regex(self, workspace):
        files, out = workspace["files"], workspace["output"]
        assert _run(files, "segment", "--method", "regex") == 0
        header, segments = read_jsonl(out / "segments.jsonl")
        assert header["method"] == "regex"
        assert {s["doc_id"] for s in segments} == {"fallo-a", "fallo-b"}

    def test_index_written(self, workspace):
        files, out = workspace["files"], workspace["output"]
        assert _run(files, "index") == 0
        header, vectors = read_jsonl(out / "index.jsonl")
        assert header["dim"] == 32
        assert len({v["doc_id"] for v in vectors}) == 2


class TestEvalAfterFixtureEdits:
    """Test accuracy on a twenty-ruling corpus before and after wrong answers."""

    def test_accuracy_drops_with_three_wrong_answers(self, twenty_rulings):
        files, out, fixtures = twenty_rulings["files"], twenty_rulings["output"], twenty_rulings["fixtures"]
        assert _run(files, "query-gen") == 0
        assert _run(files, "extract", "--method", "llm") == 0
        _, prompts = read_jsonl(out / "prompts_llm.jsonl")
        assert len(prompts) == 20

        def author(wrong):
            lines = []
            for record in prompts:
                i = int(record["doc_id"].split("-")[1])
                amount = _ruling_amount(i) + (7 if record["doc_id"] in wrong else 0)
                lines.append(json.dumps({
                    "prompt_sha256": record["prompt_sha256"],
                    "response_text": json.dumps({"percentage": _ruling_percentage(i), "amount": amount}),
                    "token_probs": [0.9],
                }))
            fixtures.write_text("\n".join(lines) + "\n", encoding="utf-8")

        def evaluate():
            assert _run(files, "extract", "--method", "llm") == 0
            assert _run(files, "eval", "--dataset", "1") == 0
            return json.loads((out / "eval_report_dataset1.json").read_text(encoding="utf-8"))

        author(wrong=set())
        report = evaluate()
        assert report["n_answered"] == 20
        assert report["accuracy"] == 1.0
        assert report["recall"] == 1.0

        author(wrong={"fallo-03", "fallo-11", "fallo-17"})
        report = evaluate()
        assert report["n_answered"] == 20
        assert report["n_correct"] == 17
        assert report["accuracy"] == pytest.approx(0.85)


class TestExitCodes:
    """Test CLI error handling."""

    def test_missing_config_file(self, tmp_path, fresh_logging):
        assert main(["--config", str(tmp_path / "absent.yml"), "ingest"]) == 1

    def test_missing_corpus_fails_preflight(self, tmp_path, fresh_logging, capsys):
        files = write_config_files(tmp_path, {"corpus": str(tmp_path / "absent"),
                                              "output_dir": str(tmp_path / "out")})
        assert _run(files, "ingest") == 1
        assert "INPUTS_EXIST: FAIL" in capsys.readouterr().out

    def test_gold_segments_need_llm(self, workspace):
        assert _run(workspace["files"], "extract", "--method", "regex", "--segments", "gold") == 1

    def test_extract_without_queries(self, workspace):
        assert _run(workspace["files"], "extract", "--method", "llm") == 1

    def test_eval_without_gold_is_a_config_error(self, tmp_path, fresh_logging, capsys):
        files = write_config_files(tmp_path, {"corpus": str(tmp_path), "output_dir": str(tmp_path / "out")})
        assert _run(files, "--skip-preflight", "eval") == 1
        err = capsys.readouterr().err
        assert "Configuration Error: eval requires paths.gold" in err
        assert "Unexpected error" not in err

    def test_ctrl_c_exits_130(self, workspace, mocker):
        mocker.patch.dict("src.cli.pipeline.COMMANDS", {"ingest": mocker.Mock(side_effect=KeyboardInterrupt)})
        assert _run(workspace["files"], "ingest") == 130

    def test_unexpected_error_exits_1(self, workspace, mocker, capsys):
        handler = mocker.Mock(side_effect=RuntimeError("disk on fire"))
        mocker.patch.dict("src.cli.pipeline.COMMANDS", {"ingest": handler})
        assert _run(workspace["files"], "ingest") == 1
        assert "Unexpected error: disk on fire" in capsys.readouterr().err
        handler.assert_called_once()

    def test_no_command_prints_help(self, workspace, capsys):
        assert _run(workspace["files"], "--skip-preflight") == 0
        assert "usage: legalex" in capsys.readouterr().out

    def test_preflight_only(self, workspace, capsys):
        assert _run(workspace["files"], "--preflight-only", "ingest") == 0
        assert "Preflight checks passed" in capsys.readouterr().out


# ==============================================================================
# TEST FIXTURES
# ==============================================================================

@pytest.fixture
def workspace(tmp_path, fresh_logging):
    """A two-ruling corpus, gold set, CPI series and config files."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "fallo-a.txt").write_text(RULING_A, encoding="utf-8")
    (corpus / "fallo-b.txt").write_text(RULING_B, encoding="utf-8")

    gold = tmp_path / "gold.jsonl"
    gold.write_text("".join(json.dumps(record) + "\n" for record in GOLD), encoding="utf-8")
    cpi = tmp_path / "cpi.csv"
    cpi.write_text("year,month,index\n2023,10,100.0\n2023,11,108.5\n", encoding="utf-8")
    fixtures = tmp_path / "fixtures.jsonl"
    fixtures.write_text("", encoding="utf-8")
    output = tmp_path / "output"

    files = write_config_files(
        tmp_path,
        {
            "corpus": str(corpus),
            "output_dir": str(output),
            "gold": str(gold),
            "cpi": str(cpi),
            "llm_fixtures": str(fixtures),
        },
        segmenter={"block_size": 12, "regex_window_chars": 60},
        retrieval={
            "embedder": {"backend": "mock", "dim": 32, "seed": 7},
            "k": 2,
            "exemplars": {
                "physical_disability": ["se fija una incapacidad física del por ciento"],
                "moral_damage": ["por daño moral se fija la suma de"],
            },
        },
        llm={"backend": "mock", "kinds": ["physical_disability", "moral_damage"], "save_prompts": True},
        stats={"source_method": "regex"},
    )
    return {"files": files, "output": output, "fixtures": fixtures}


@pytest.fixture
def twenty_rulings(tmp_path, fresh_logging):
    """Twenty single-entity rulings with a matching gold set and empty fixtures."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    gold_lines = []
    for i in range(20):
        doc_id = f"fallo-{i:02d}"
        (corpus / f"{doc_id}.txt").write_text(_ruling_text(i), encoding="utf-8")
        gold_lines.append(json.dumps({
            "doc_id": doc_id,
            "kind": "physical_disability",
            "gold_percentage": _ruling_percentage(i),
            "gold_amount": _ruling_amount(i),
        }))
    gold = tmp_path / "gold.jsonl"
    gold.write_text("\n".join(gold_lines) + "\n", encoding="utf-8")
    fixtures = tmp_path / "fixtures.jsonl"
    fixtures.write_text("", encoding="utf-8")
    output = tmp_path / "output"

    files = write_config_files(
        tmp_path,
        {"corpus": str(corpus), "output_dir": str(output), "gold": str(gold), "llm_fixtures": str(fixtures)},
        segmenter={"block_size": 12, "regex_window_chars": 60},
        retrieval={
            "embedder": {"backend": "mock", "dim": 32, "seed": 7},
            "k": 2,
            "exemplars": {"physical_disability": ["se fija una incapacidad física del por ciento"]},
        },
        llm={"backend": "mock", "kinds": ["physical_disability"], "save_prompts": True},
    )
    return {"files": files, "output": output, "fixtures": fixtures}


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
