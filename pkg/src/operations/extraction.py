"""
Extraction runs: prompt -> model -> parse -> flag, per (document, kind).

Failures stay local: a kind whose retrieval, model call or parsing fails
becomes an error-marked Extraction and the remaining kinds and documents
carry on. Output is always ordered by (doc_id, kind) regardless of the order
in which worker threads finish.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from tqdm import tqdm

from src.core.config import HallucinationConfig, PipelineConfig, PromptConfig
from src.core.logger import get_logger, log_document_failure, log_operation
from src.core.models import Document, EntityKind, Extraction, ExtractionMethod, Segment, sort_extractions
from src.operations.llm_client import ChatClient, call_model
from src.operations.prompts import prompt_sha256, render_prompt
from src.parsers.regex_extractor import regex_extract
from src.parsers.response_parser import ParseFailure, parse_response

logger = get_logger(__name__)

NO_SEGMENTS = "no segments"


@dataclass
class PromptRecord:
    """One line of the prompts sidecar, used to author mock fixtures."""
    doc_id: str
    kind: EntityKind
    prompt_sha256: str
    prompt: str

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "kind": self.kind.value,
                "prompt_sha256": self.prompt_sha256, "prompt": self.prompt}


def detect_hallucination(token_probs: Sequence[float], cfg: HallucinationConfig) -> bool:
    """
    True iff the smallest token probability is below p_u.

    Raises:
        ValueError: If token_probs is empty
    """
    if not token_probs:
        raise ValueError("detect_hallucination needs at least one token probability")
    return min(token_probs) < cfg.p_u


def error_extraction(doc_id: str, kind: EntityKind, error: str,
                     provenance: Optional[List[Segment]] = None) -> Extraction:
    return Extraction(doc_id=doc_id, kind=kind, method=ExtractionMethod.LLM,
                      provenance=list(provenance or []), error=error)


def extract_from_segments(
    doc_id: str,
    kind: EntityKind,
    segments: Sequence[Segment],
    prompt_cfg: PromptConfig,
    client: ChatClient,
    hall_cfg: HallucinationConfig,
    prompt_sink: Optional[List[PromptRecord]] = None,
) -> Extraction:
    """
    Run the model over explicit segments.

    A response without a JSON object yields an error-marked record
    ("parse failure: ..."). Token probabilities, min_prob and the
    hallucination flag are attached only when the backend returned
    probabilities.
    """
    if not segments:
        return error_extraction(doc_id, kind, NO_SEGMENTS)

    prompt = render_prompt(prompt_cfg, kind, segments)
    if prompt_sink is not None:
        prompt_sink.append(PromptRecord(doc_id, kind, prompt_sha256(prompt), prompt))

    response = call_model(prompt, client, prompt_cfg.system_message)
    probs = response.token_probs or None
    try:
        parsed = parse_response(response.text, kind)
    except ParseFailure as e:
        extraction = error_extraction(doc_id, kind, f"parse failure: {e}", list(segments))
    else:
        extraction = Extraction(
            doc_id=doc_id, kind=kind, percentage=parsed.percentage, amount=parsed.amount,
            method=ExtractionMethod.LLM, provenance=list(segments),
        )
    if probs:
        extraction.token_probs = list(probs)
        extraction.min_prob = min(probs)
        extraction.flagged_hallucination = detect_hallucination(probs, hall_cfg)
    return extraction


SegmentSource = Callable[[Document, EntityKind], List[Segment]]


def extract_entities(
    doc: Document,
    kinds: Sequence[EntityKind],
    segment_source: SegmentSource,
    prompt_cfg: PromptConfig,
    client: ChatClient,
    hall_cfg: HallucinationConfig,
    prompt_sink: Optional[List[PromptRecord]] = None,
) -> List[Extraction]:
    """
    One model call per kind over the segments ``segment_source`` offers.

    ``segment_source`` is RetrievalContext.retrieve for the normal pipeline,
    or a gold-segment lookup for the perfect-segmentation mode.
    """
    extractions: List[Extraction] = []
    for kind in kinds:
        try:
            segments = segment_source(doc, kind)
            extraction = extract_from_segments(doc.id, kind, segments, prompt_cfg, client, hall_cfg, prompt_sink)
        except Exception as e:
            log_document_failure(logger, "extract_llm", "extract_entities", doc.id, str(e), kind=kind.value)
            extraction = error_extraction(doc.id, kind, f"{type(e).__name__}: {e}")
        extractions.append(extraction)
    return sort_extractions(extractions)

# ==============================================================================
# CORPUS RUNS
# ==============================================================================

def _map_documents(documents: Sequence[Document], work: Callable[[Document], List[Extraction]],
                   max_workers: int, show_progress: bool, description: str) -> List[Extraction]:
    results: List[Extraction] = []
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        iterator = executor.map(work, documents)
        for batch in tqdm(iterator, total=len(documents), desc=description, disable=not show_progress):
            results.extend(batch)
    return sort_extractions(results)


def run_llm_extraction(
    documents: Sequence[Document],
    config: PipelineConfig,
    client: ChatClient,
    segment_source: SegmentSource,
    prompt_sink: Optional[List[PromptRecord]] = None,
) -> List[Extraction]:
    """LLM extraction over a corpus on the configured worker pool."""
    kinds = [EntityKind(value) for value in config.llm.kinds]

    def work(doc: Document) -> List[Extraction]:
        return extract_entities(doc, kinds, segment_source, config.prompts, client,
                                config.hallucination, prompt_sink)

    extractions = _map_documents(documents, work, config.performance.max_workers,
                                 config.performance.show_progress, "extract (llm)")
    errors = sum(1 for e in extractions if e.is_error)
    log_operation(logger, "INFO", f"LLM extraction: {len(extractions)} records, {errors} errors",
                  stage="extract_llm", operation="run_llm_extraction",
                  metadata={"documents": len(documents), "records": len(extractions), "errors": errors})
    return extractions


def run_regex_extraction(documents: Sequence[Document], config: PipelineConfig) -> List[Extraction]:
    """Regex baseline over a corpus; a document that raises is logged and skipped."""

    def work(doc: Document) -> List[Extraction]:
        try:
            return regex_extract(doc, config.segmenter, config.regex_extraction)
        except Exception as e:
            log_document_failure(logger, "extract_regex", "regex_extract", doc.id, str(e))
            return []

    extractions = _map_documents(documents, work, config.performance.max_workers,
                                 config.performance.show_progress, "extract (regex)")
    log_operation(logger, "INFO", f"Regex extraction: {len(extractions)} records",
                  stage="extract_regex", operation="run_regex_extraction",
                  metadata={"documents": len(documents), "records": len(extractions)})
    return extractions


def gold_segment_source(gold_segments: Dict[tuple, List[Segment]]) -> SegmentSource:
    """Offer the labelled segments of each (doc_id, kind) instead of retrieving."""

    def source(doc: Document, kind: EntityKind) -> List[Segment]:
        return list(gold_segments.get((doc.id, kind), []))

    return source
