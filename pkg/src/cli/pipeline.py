"""
CLI entry point for the extraction pipeline.

Each subcommand runs one stage and writes its artifacts under
paths.output_dir, every one with a provenance header:

- ingest: load, clean and scope-filter the corpus
- segment: regex windows or retrieved segments per ruling
- index: persist the block index of the whole corpus
- query-gen: tf-idf retrieval queries from exemplar blocks
- extract: regex baseline or LLM extraction
- label-assist: extractions reformatted as gold records for manual review
- eval: accuracy / recall against the gold set
- bench-hallucination: hallucination rate on entity-free segments
- stats: point values, CPI comparison and disability distribution

Usage:
    python -m src.cli.pipeline --help
    python -m src.cli.pipeline ingest
    python -m src.cli.pipeline extract --method llm
    python -m src.cli.pipeline eval --dataset 2
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from src.core.artifacts import ArtifactWriter, read_jsonl
from src.core.config import ConfigurationError, PipelineConfig, load_config
from src.core.logger import get_logger, log_operation, setup_logging
from src.core.models import Document, EntityKind, Extraction, ExtractionMethod, Segment
from src.evaluation.datasets import (
    LabeledSample,
    filter_dataset2,
    gold_segments,
    label_assist_records,
    load_gold,
    retained_fraction,
)
from src.evaluation.hallucination_bench import (
    SWEEP_COLUMNS,
    NegativeCase,
    hallucination_benchmark,
    load_negatives,
    negatives_from_samples,
    threshold_sweep,
)
from src.evaluation.metrics import format_report, score_extractions, segmentation_qa
from src.operations.extraction import (
    PromptRecord,
    error_extraction,
    extract_from_segments,
    gold_segment_source,
    run_llm_extraction,
    run_regex_extraction,
)
from src.operations.llm_client import ChatClient, build_chat_client
from src.operations.preflight import print_preflight_results, run_preflight_checks
from src.parsers.corpus import load_corpus, prepare_documents
from src.parsers.segmenter import block_split, regex_keyword_segments, regex_percent_segments
from src.retrieval.embedder import Embedder, build_embedder
from src.retrieval.index import VectorIndex, load_index
from src.retrieval.retriever import RetrievalContext
from src.retrieval.tfidf import Query, TfIdfError, build_tfidf, make_query, queries_to_yaml, resolve_queries
from src.stats.charts import plot_cpi_comparison, plot_histogram
from src.stats.cpi import CPI_COLUMNS, cpi_compare, load_cpi
from src.stats.distribution import HISTOGRAM_COLUMNS, disability_histogram, disability_percentages
from src.stats.point_value import PV_COLUMNS, compute_point_values, monthly_point_value

logger = get_logger(__name__)

MONTHLY_COLUMNS = ("year", "month", "mean", "median", "n")

# Commands that call the model or the embedder, for preflight credential checks
LLM_COMMANDS = {"extract", "bench-hallucination"}
EMBEDDER_COMMANDS = {"segment", "index", "extract", "eval"}

# ==============================================================================
# SHARED HELPERS
# ==============================================================================

def _output_path(config: PipelineConfig, name: str) -> Path:
    return Path(config.paths.output_dir) / name


def _extractions_name(method: str, gold_segments_mode: bool = False) -> str:
    return f"extractions_{method}{'_gold' if gold_segments_mode else ''}.jsonl"


def _print_banner(title: str) -> None:
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


def _print_error_summary(errors: int) -> None:
    if errors:
        print(f"\n⚠️  Completed with {errors} per-document errors (see logs)")
    else:
        print("\n✓ Completed without errors")
    print("=" * 70 + "\n")


def _load_documents(config: PipelineConfig, only_in_scope: Optional[bool] = None) -> Tuple[List[Document], int]:
    """
    Load and prepare the corpus.

    Returns:
        (prepared documents, number of files that failed to load)
    """
    result = load_corpus(Path(config.paths.corpus), config.corpus.file_glob, config.performance.max_workers)
    documents = prepare_documents(result.documents, config.corpus, config.performance.max_workers)
    if config.corpus.only_in_scope if only_in_scope is None else only_in_scope:
        documents = [doc for doc in documents if doc.in_scope]
    return documents, len(result.errors)


def _read_extractions(path: Path) -> List[Extraction]:
    if not path.exists():
        raise FileNotFoundError(f"Extractions file not found: {path}")
    _, records = read_jsonl(path)
    return [Extraction.from_dict(record) for record in records]


def _kinds(config: PipelineConfig) -> List[EntityKind]:
    return [EntityKind(value) for value in config.llm.kinds]


def _retrieval_context(config: PipelineConfig, embedder: Optional[Embedder] = None) -> RetrievalContext:
    """
    Retrieval over per-document indices, or the persisted corpus index when
    paths.index is configured.

    Raises:
        ConfigurationError: If no retrieval query is available
    """
    embedder = embedder or build_embedder(config.retrieval.embedder)
    queries = resolve_queries(config.paths.queries_path, config.retrieval.queries)
    if not queries:
        raise ConfigurationError(
            f"No retrieval queries: run 'query-gen' or set retrieval.queries "
            f"(looked for {config.paths.queries_path})"
        )
    corpus_index = None
    if config.paths.index:
        corpus_index = load_index(Path(config.paths.index), embedder.identity)
    return RetrievalContext(config, embedder, queries, corpus_index)


def _regex_segments_for(doc: Document, kind: EntityKind, config: PipelineConfig) -> List[Segment]:
    if kind is EntityKind.MORAL_DAMAGE:
        return regex_keyword_segments(doc, config.regex_extraction.moral_damage_keywords, config.segmenter)
    return regex_percent_segments(doc, config.segmenter)

# ==============================================================================
# COMMAND HANDLERS
# ==============================================================================

def cmd_ingest(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write corpus.jsonl (prepared rulings) and load_errors.jsonl."""
    result = load_corpus(Path(config.paths.corpus), config.corpus.file_glob, config.performance.max_workers)
    documents = prepare_documents(result.documents, config.corpus, config.performance.max_workers)

    with ArtifactWriter(config, _output_path(config, "corpus.jsonl"), stage="ingest") as artifact:
        artifact.write_jsonl(doc.to_dict() for doc in documents)
    with ArtifactWriter(config, _output_path(config, "load_errors.jsonl"), stage="ingest") as artifact:
        artifact.write_jsonl(error.to_dict() for error in result.errors)

    in_scope = sum(1 for doc in documents if doc.in_scope)
    _print_banner("INGEST")
    print(f"  rulings loaded:     {len(documents)}")
    print(f"  in scope:           {in_scope}")
    print(f"  load errors:        {len(result.errors)}")
    _print_error_summary(len(result.errors))
    return 0


def cmd_segment(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write segments.jsonl: regex windows or retrieved segments per (ruling, kind)."""
    documents, load_errors = _load_documents(config)
    records: List[dict] = []

    if args.method == "regex":
        for doc in documents:
            for segment in regex_percent_segments(doc, config.segmenter):
                records.append(dict(segment.to_dict(), kind=None))
            for segment in regex_keyword_segments(doc, config.regex_extraction.moral_damage_keywords,
                                                  config.segmenter):
                records.append(dict(segment.to_dict(), kind=EntityKind.MORAL_DAMAGE.value))
    else:
        context = _retrieval_context(config)
        kinds = [kind for kind in _kinds(config) if kind in context.queries]

        def work(doc: Document) -> List[dict]:
            rows = []
            for kind in kinds:
                rows.extend(dict(segment.to_dict(), kind=kind.value) for segment in context.retrieve(doc, kind))
            return rows

        with ThreadPoolExecutor(max_workers=config.performance.max_workers) as executor:
            for rows in executor.map(work, documents):
                records.extend(rows)
    records.sort(key=lambda r: (r["doc_id"], r["kind"] or "", r["char_start"], r["char_end"]))

    with ArtifactWriter(config, _output_path(config, "segments.jsonl"), stage="segment") as artifact:
        artifact.write_jsonl(records, header_extra={"method": args.method})

    _print_banner(f"SEGMENT ({args.method})")
    print(f"  rulings:            {len(documents)}")
    print(f"  segments:           {len(records)}")
    _print_error_summary(load_errors)
    return 0


def cmd_index(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Embed every block of the corpus and persist the index."""
    documents, load_errors = _load_documents(config)
    embedder = build_embedder(config.retrieval.embedder)
    index = VectorIndex(embedder.dim, embedder.identity)
    for doc in documents:
        blocks = block_split(doc, config.segmenter)
        if blocks:
            index.add_batch([(block.doc_id, block.index) for block in blocks],
                            embedder.embed([block.text for block in blocks]))

    path = Path(config.paths.index) if config.paths.index else _output_path(config, "index.jsonl")
    with ArtifactWriter(config, path, stage="index") as artifact:
        artifact.write_jsonl(index.to_records(), header_extra=index.header())

    _print_banner("INDEX")
    print(f"  rulings:            {len(documents)}")
    print(f"  blocks indexed:     {len(index)}")
    print(f"  embedder:           {embedder.identity}")
    print(f"  written to:         {path}")
    _print_error_summary(load_errors)
    return 0


def _exemplars(config: PipelineConfig) -> Dict[EntityKind, List[str]]:
    """Config exemplars plus those in the paths.exemplars YAML file (kind -> list of texts)."""
    exemplars: Dict[EntityKind, List[str]] = {
        EntityKind(key): list(texts) for key, texts in config.retrieval.exemplars.items()
    }
    if config.paths.exemplars:
        with open(config.paths.exemplars, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        for key, texts in data.items():
            exemplars.setdefault(EntityKind(key), []).extend(str(text) for text in texts or [])
    return exemplars


def cmd_query_gen(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Build tf-idf over all corpus blocks plus exemplars and write the queries file."""
    documents, load_errors = _load_documents(config)
    exemplars = _exemplars(config)
    if not exemplars:
        raise ConfigurationError("query-gen needs exemplars (retrieval.exemplars or paths.exemplars)")

    blocks = [block.text for doc in documents for block in block_split(doc, config.segmenter)]
    blocks.extend(text for kind in sorted(exemplars, key=lambda k: k.order) for text in exemplars[kind])
    model = build_tfidf(blocks, config.retrieval.min_term_length)

    queries: Dict[EntityKind, Query] = {}
    for kind in sorted(exemplars, key=lambda k: k.order):
        try:
            queries[kind] = make_query(kind, model, exemplars[kind], config.retrieval.top_m)
        except TfIdfError as e:
            log_operation(logger, "WARNING", f"No query for {kind.value}: {e}",
                          stage="query_gen", operation="make_query", kind=kind.value)
    if not queries:
        raise ValueError("query-gen produced no query for any kind")

    path = config.paths.queries_path
    with ArtifactWriter(config, path, stage="query_gen") as artifact:
        artifact.write_text(queries_to_yaml(queries))

    _print_banner("QUERY GENERATION")
    print(f"  blocks:             {len(blocks)} ({model.n_docs} documents in the tf-idf model)")
    for kind, query in queries.items():
        print(f"  {kind.value:<28}{query.text}")
    print(f"  written to:         {path}")
    _print_error_summary(load_errors)
    return 0


def _write_prompts(config: PipelineConfig, prompts: List[PromptRecord], extractions_name: str) -> None:
    prompts = sorted(prompts, key=lambda p: (p.doc_id, p.kind.order))
    name = extractions_name.replace("extractions_", "prompts_")
    with ArtifactWriter(config, _output_path(config, name), stage="extract_llm") as artifact:
        artifact.write_jsonl(p.to_dict() for p in prompts)


def cmd_extract(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Write extractions_<method>.jsonl."""
    gold_mode = args.segments == "gold"
    if gold_mode and args.method != "llm":
        raise ValueError("--segments gold requires --method llm")

    documents, load_errors = _load_documents(config)
    prompts: Optional[List[PromptRecord]] = [] if config.llm.save_prompts and args.method == "llm" else None

    if args.method == "regex":
        extractions = run_regex_extraction(documents, config)
    else:
        client = build_chat_client(config.llm, config.paths.llm_fixtures)
        if gold_mode:
            if not config.paths.gold:
                raise ConfigurationError("--segments gold requires paths.gold")
            samples = load_gold(Path(config.paths.gold))
            gold_docs = {sample.doc_id for sample in samples}
            documents = [doc for doc in documents if doc.id in gold_docs]
            source = gold_segment_source(gold_segments(samples))
        else:
            source = _retrieval_context(config).retrieve
        extractions = run_llm_extraction(documents, config, client, source, prompts)

    name = args.output.name if args.output else _extractions_name(args.method, gold_mode)
    path = args.output or _output_path(config, name)
    with ArtifactWriter(config, path, stage=f"extract_{args.method}") as artifact:
        artifact.write_jsonl((e.to_dict() for e in extractions),
                             header_extra={"method": args.method, "segments": args.segments})
    if prompts is not None:
        _write_prompts(config, prompts, name)

    errors = sum(1 for e in extractions if e.is_error)
    answered = sum(1 for e in extractions if e.is_answered)
    flagged = sum(1 for e in extractions if e.flagged_hallucination)
    _print_banner(f"EXTRACT ({args.method}, segments: {args.segments})")
    print(f"  rulings:            {len(documents)}")
    print(f"  records:            {len(extractions)}")
    print(f"  answered:           {answered}")
    if args.method == "llm":
        print(f"  flagged (p_min < {config.hallucination.p_u}): {flagged}")
    print(f"  written to:         {path}")
    _print_error_summary(errors + load_errors)
    return 0


def cmd_label_assist(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Rewrite extractions as gold-format records marked reviewed: false."""
    source = args.predictions or _output_path(config, _extractions_name("llm"))
    extractions = _read_extractions(Path(source))
    records = label_assist_records(extractions)
    path = _output_path(config, "label_assist.jsonl")
    with ArtifactWriter(config, path, stage="label_assist") as artifact:
        artifact.write_jsonl(records)

    _print_banner("LABEL ASSIST")
    print(f"  records:            {len(records)}")
    print(f"  written to:         {path}")
    print("=" * 70 + "\n")
    return 0


def cmd_eval(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Score extractions against the gold set and write eval_report_dataset<N>.json."""
    if not config.paths.gold:
        raise ConfigurationError("eval requires paths.gold")
    samples = load_gold(Path(config.paths.gold))
    gold = filter_dataset2(samples) if args.dataset == "2" else samples
    predictions_path = Path(args.predictions or _output_path(config, _extractions_name("llm")))
    predictions = _read_extractions(predictions_path)

    report = score_extractions(predictions, gold, config.evaluation, dataset=args.dataset)
    if args.dataset == "2":
        report.retained_fraction = retained_fraction(samples)
    if args.bench_report:
        with open(args.bench_report, "r", encoding="utf-8") as f:
            report.hallucination_rate = float(json.load(f)["rate"])

    payload = report.to_dict()
    payload["predictions"] = str(predictions_path)
    if args.segmentation_qa:
        payload["segmentation_qa"] = {
            "segmenter": args.segmentation_qa,
            "fraction_containing_gold": _segmentation_qa(config, gold, args.segmentation_qa),
        }

    path = _output_path(config, f"eval_report_dataset{args.dataset}.json")
    with ArtifactWriter(config, path, stage="eval") as artifact:
        artifact.write_json(payload)

    print()
    print(format_report(report))
    if args.segmentation_qa:
        print(f"  segmentation QA ({args.segmentation_qa}): "
              f"{payload['segmentation_qa']['fraction_containing_gold']:.4f}")
    print(f"  written to: {path}\n")
    return 0


def _segmentation_qa(config: PipelineConfig, samples: List[LabeledSample], segmenter: str) -> float:
    if not config.paths.corpus:
        raise ConfigurationError("segmentation QA requires paths.corpus")
    documents, _ = _load_documents(config, only_in_scope=False)
    by_id = {doc.id: doc for doc in documents}
    context = _retrieval_context(config) if segmenter == "retrieval" else None

    def segments_for(sample: LabeledSample) -> List[Segment]:
        doc = by_id.get(sample.doc_id)
        if doc is None:
            log_operation(logger, "WARNING", f"Gold ruling {sample.doc_id} not in corpus",
                          stage="eval", operation="segmentation_qa", doc_id=sample.doc_id)
            return []
        if context is not None:
            return context.retrieve(doc, sample.kind)
        return _regex_segments_for(doc, sample.kind, config)

    return segmentation_qa(samples, segments_for)


def cmd_bench_hallucination(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Run the model over entity-free segments; write the rate and the p_u sweep."""
    if config.paths.negatives:
        negatives = load_negatives(Path(config.paths.negatives))
    elif config.paths.gold:
        negatives = negatives_from_samples(load_gold(Path(config.paths.gold)))
    else:
        raise ConfigurationError("bench-hallucination needs paths.negatives or paths.gold")

    client: ChatClient = build_chat_client(config.llm, config.paths.llm_fixtures)

    def extractor(case: NegativeCase) -> Extraction:
        try:
            return extract_from_segments(case.doc_id, case.kind, case.segments, config.prompts,
                                         client, config.hallucination)
        except Exception as e:
            log_operation(logger, "ERROR", f"Benchmark run failed for {case.doc_id}/{case.kind.value}: {e}",
                          stage="bench", operation="hallucination_benchmark",
                          doc_id=case.doc_id, kind=case.kind.value, error=str(e))
            return error_extraction(case.doc_id, case.kind, f"{type(e).__name__}: {e}", case.segments)

    result = hallucination_benchmark(negatives, extractor)
    absent = [LabeledSample(case.doc_id, case.kind, offered_segments=list(case.segments)) for case in negatives]
    sweep = threshold_sweep(result.extractions, absent, config.hallucination.sweep_grid, config.evaluation)

    with ArtifactWriter(config, _output_path(config, "hallucination_bench.json"), stage="bench") as artifact:
        artifact.write_json(result.to_dict())
    with ArtifactWriter(config, _output_path(config, "hallucination_runs.jsonl"), stage="bench") as artifact:
        artifact.write_jsonl(e.to_dict() for e in result.extractions)
    with ArtifactWriter(config, _output_path(config, "hallucination_sweep.csv"), stage="bench") as artifact:
        artifact.write_csv(SWEEP_COLUMNS, (row.as_row() for row in sweep))

    if args.predictions:
        predictions = _read_extractions(Path(args.predictions))
        if not config.paths.gold:
            raise ConfigurationError("--predictions sweep requires paths.gold")
        prediction_sweep = threshold_sweep(predictions, load_gold(Path(config.paths.gold)),
                                           config.hallucination.sweep_grid, config.evaluation)
        with ArtifactWriter(config, _output_path(config, "threshold_sweep_predictions.csv"),
                            stage="bench") as artifact:
            artifact.write_csv(SWEEP_COLUMNS, (row.as_row() for row in prediction_sweep))

    _print_banner("HALLUCINATION BENCHMARK")
    print(f"  negative cases:     {result.n_runs}")
    print(f"  hallucinated:       {result.n_hallucinated}")
    print(f"  empty answers:      {result.n_empty}")
    print(f"  invalid responses:  {result.n_invalid}")
    print(f"  rate:               {result.rate:.4f}")
    print("-" * 70)
    print(f"  {'p_u':>6}{'flagged':>10}{'rate':>10}{'among incorrect':>18}{'among correct':>16}")
    for row in sweep:
        print(f"  {row.p_u:>6.2f}{row.n_flagged:>10}{row.flagged_rate:>10.4f}"
              f"{row.flagged_among_incorrect:>18.4f}{row.flagged_among_correct:>16.4f}")
    _print_error_summary(result.n_errors - result.n_invalid)
    return 0


def cmd_stats(args: argparse.Namespace, config: PipelineConfig) -> int:
    """Point values, monthly aggregates, CPI comparison and disability histogram."""
    cfg = config.stats
    documents, load_errors = _load_documents(config)
    source = args.extractions or _output_path(config, _extractions_name(cfg.source_method))
    extractions = _read_extractions(Path(source))

    records, skipped = compute_point_values(extractions, {doc.id: doc for doc in documents}, cfg)
    monthly = monthly_point_value(records)
    with ArtifactWriter(config, _output_path(config, "point_values.csv"), stage="stats") as artifact:
        artifact.write_csv(PV_COLUMNS, (record.as_row() for record in records))
    with ArtifactWriter(config, _output_path(config, "point_values_monthly.csv"), stage="stats") as artifact:
        artifact.write_csv(MONTHLY_COLUMNS, ((year, month, m.mean, m.median, m.n)
                                             for (year, month), m in monthly.items()))

    summary: Dict[str, object] = {
        "source": str(source),
        "point_values": len(records),
        "rulings_without_point_value": skipped,
        "months": len(monthly),
    }

    comparison = None
    if config.paths.cpi:
        comparison = cpi_compare(monthly, load_cpi(Path(config.paths.cpi)), cfg.monthly_aggregate)
        with ArtifactWriter(config, _output_path(config, "cpi_comparison.csv"), stage="stats") as artifact:
            artifact.write_csv(CPI_COLUMNS, (row.as_row() for row in comparison.rows))
        summary["cpi_correlation"] = comparison.correlation
        summary["cpi_months"] = len(comparison.rows)

    distribution = None
    low, high = cfg.bin_edges[0], cfg.bin_edges[-1]
    percentages = disability_percentages(extractions, ExtractionMethod(cfg.source_method))
    in_range = [p for p in percentages if low <= p <= high]
    if len(in_range) < len(percentages):
        log_operation(logger, "WARNING",
                      f"{len(percentages) - len(in_range)} percentages outside [{low}, {high}] left out of the histogram",
                      stage="stats", operation="disability_histogram")
    if in_range:
        distribution = disability_histogram(in_range, cfg.bin_edges, cfg.below_threshold, cfg.above_threshold)
        with ArtifactWriter(config, _output_path(config, "disability_histogram.csv"), stage="stats") as artifact:
            artifact.write_csv(HISTOGRAM_COLUMNS, distribution.histogram.as_rows())
        summary.update(
            disability_n=distribution.n,
            fraction_below=distribution.fraction_below,
            fraction_above=distribution.fraction_above,
            below_threshold=distribution.below_threshold,
            above_threshold=distribution.above_threshold,
        )
    else:
        log_operation(logger, "WARNING", "No disability percentages to histogram",
                      stage="stats", operation="disability_histogram")

    with ArtifactWriter(config, _output_path(config, "stats_summary.json"), stage="stats") as artifact:
        artifact.write_json(summary)

    if args.chart:
        if distribution is not None:
            plot_histogram(distribution, _output_path(config, "disability_histogram.png"))
        if comparison is not None and comparison.rows:
            plot_cpi_comparison(comparison, _output_path(config, "cpi_comparison.png"))

    _print_banner(f"STATS (source: {cfg.source_method})")
    print(f"  point values:       {len(records)} ({skipped} rulings without one)")
    print(f"  months:             {len(monthly)}")
    if comparison is not None:
        correlation = "n/a" if comparison.correlation is None else f"{comparison.correlation:.4f}"
        print(f"  CPI correlation:    {correlation} over {len(comparison.rows)} months")
    if distribution is not None:
        print(f"  below {cfg.below_threshold:g}%:          {distribution.fraction_below:.4f}")
        print(f"  above {cfg.above_threshold:g}%:          {distribution.fraction_above:.4f}")
    _print_error_summary(load_errors)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "segment": cmd_segment,
    "index": cmd_index,
    "query-gen": cmd_query_gen,
    "extract": cmd_extract,
    "label-assist": cmd_label_assist,
    "eval": cmd_eval,
    "bench-hallucination": cmd_bench_hallucination,
    "stats": cmd_stats,
}

# ==============================================================================
# CLI SETUP AND MAIN
# ==============================================================================

def create_parser() -> argparse.ArgumentParser:
    """
    Create argument parser for the pipeline CLI.

    Returns:
        Configured ArgumentParser instance
    """
    parser = argparse.ArgumentParser(
        prog="legalex",
        description="Disability and compensation entity extraction from court rulings",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run preflight checks only
  python -m src.cli.pipeline --preflight-only extract --method llm

  # Full offline run with mock backends
  python -m src.cli.pipeline ingest
  python -m src.cli.pipeline query-gen
  python -m src.cli.pipeline extract --method llm
  python -m src.cli.pipeline eval --dataset 1
  python -m src.cli.pipeline stats --chart

For more information, see README.md
        """
    )

    # Global options
    parser.add_argument(
        "--config",
        type=Path,
        help="Path to configuration file (default: config/example_config.yml)"
    )
    parser.add_argument(
        "--paths-config",
        type=Path,
        help="Path to paths configuration file (default: config/paths.example.yml)"
    )
    parser.add_argument(
        "--preflight-only",
        action="store_true",
        help="Run preflight checks only and exit"
    )
    parser.add_argument(
        "--skip-preflight",
        action="store_true",
        help="Skip preflight checks"
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser("ingest", help="Load, clean and scope-filter the corpus")

    segment_parser = subparsers.add_parser("segment", help="Segment rulings into candidate passages")
    segment_parser.add_argument("--method", choices=["regex", "retrieval"], default="retrieval")

    subparsers.add_parser("index", help="Embed all token blocks and persist the index")
    subparsers.add_parser("query-gen", help="Generate retrieval queries from exemplar blocks")

    extract_parser = subparsers.add_parser("extract", help="Extract entities from rulings")
    extract_parser.add_argument("--method", choices=["regex", "llm"], default="llm")
    extract_parser.add_argument(
        "--segments",
        choices=["retrieval", "gold"],
        default="retrieval",
        help="Offer retrieved segments, or the gold set's segments (llm only)"
    )
    extract_parser.add_argument("--output", type=Path, help="Output path (default: output_dir/extractions_<method>.jsonl)")

    label_parser = subparsers.add_parser("label-assist", help="Turn extractions into gold records for review")
    label_parser.add_argument("--predictions", type=Path, help="Extractions file (default: extractions_llm.jsonl)")

    eval_parser = subparsers.add_parser("eval", help="Score extractions against the gold set")
    eval_parser.add_argument("--dataset", choices=["1", "2"], default="1",
                             help="1: every sample; 2: samples whose gold values occur in the offered segments")
    eval_parser.add_argument("--predictions", type=Path, help="Extractions file (default: extractions_llm.jsonl)")
    eval_parser.add_argument("--segmentation-qa", choices=["retrieval", "regex"],
                             help="Also score whether the segmenter finds the gold values")
    eval_parser.add_argument("--bench-report", type=Path,
                             help="hallucination_bench.json to include its rate in the report")

    bench_parser = subparsers.add_parser("bench-hallucination", help="Hallucination rate on entity-free segments")
    bench_parser.add_argument("--predictions", type=Path,
                              help="Also sweep p_u over these extractions against the gold set")

    stats_parser = subparsers.add_parser("stats", help="Point values, CPI comparison and distribution")
    stats_parser.add_argument("--extractions", type=Path,
                              help="Extractions file (default: extractions_<stats.source_method>.jsonl)")
    stats_parser.add_argument("--chart", action="store_true", help="Also render PNG charts")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the pipeline CLI.

    This function:
    1. Parses command-line arguments
    2. Loads configuration
    3. Initializes logging
    4. Runs preflight checks (unless skipped)
    5. Dispatches to the command handler

    Args:
        argv: Command-line arguments (default: sys.argv[1:])

    Returns:
        Exit code (0 for success, non-zero for failure)
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(
            config_path=args.config,
            paths_config_path=args.paths_config
        )
        setup_logging(config.logging)

        logger.info(
            "Pipeline CLI started",
            extra={
                "stage": "bootstrap",
                "operation": "cli_startup",
                "metadata": {
                    "command": args.command,
                    "profile": config.environment.profile,
                }
            }
        )

        if not args.skip_preflight:
            passed, results = run_preflight_checks(
                config,
                command=args.command,
                needs_llm=args.command in LLM_COMMANDS and getattr(args, "method", "llm") == "llm",
                needs_embedder=args.command in EMBEDDER_COMMANDS and _uses_embedder(args),
            )
            if not passed or args.preflight_only:
                print_preflight_results(results)
            if not passed:
                logger.error(
                    "Preflight checks failed - cannot proceed",
                    extra={
                        "stage": "preflight",
                        "operation": "validation",
                        "status": "failed",
                    }
                )
                return 1
            if args.preflight_only:
                print("Preflight checks passed. Exiting (--preflight-only)\n")
                return 0

        handler = COMMANDS.get(args.command)
        if handler is None:
            parser.print_help()
            return 0
        return handler(args, config)

    except FileNotFoundError as e:
        print(f"\n❌ Error: {e}", file=sys.stderr)
        return 1

    except ValueError as e:
        print(f"\n❌ Configuration Error: {e}", file=sys.stderr)
        return 1

    except KeyboardInterrupt:
        print("\n\n⚠️  Operation cancelled by user", file=sys.stderr)
        logger.warning(
            "Operation cancelled by user (Ctrl+C)",
            extra={
                "stage": "cli",
                "operation": "user_cancel",
            }
        )
        return 130  # Standard exit code for SIGINT

    except Exception as e:
        print(f"\n❌ Unexpected error: {e}", file=sys.stderr)
        logger.error(
            f"Unexpected error in pipeline CLI: {e}",
            extra={
                "stage": "cli",
                "operation": "cli_error",
                "error": str(e),
            },
            exc_info=True
        )
        return 1


def _uses_embedder(args: argparse.Namespace) -> bool:
    if args.command == "segment":
        return args.method == "retrieval"
    if args.command == "extract":
        return args.method == "llm" and args.segments == "retrieval"
    if args.command == "eval":
        return args.segmentation_qa == "retrieval"
    return True


if __name__ == "__main__":
    sys.exit(main())
