"""
Tf-idf model over text blocks and per-kind query construction.

Each block is one "document" for document frequency. Terms are lower-cased
whitespace tokens with leading/trailing punctuation stripped; terms shorter
than ``min_term_length`` are dropped. The smoothed idf is

    idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1

which is what scikit-learn's TfidfTransformer computes with smooth_idf=True.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import yaml
from sklearn.feature_extraction.text import CountVectorizer, TfidfTransformer

from src.core.models import EntityKind

_EDGE_PUNCTUATION = re.compile(r"^\W+|\W+$")


class TfIdfError(ValueError):
    """Raised when a model or query cannot be built from the given text."""


def make_term_analyzer(min_term_length: int = 2) -> Callable[[str], List[str]]:
    def analyze(text: str) -> List[str]:
        terms = (_EDGE_PUNCTUATION.sub("", token) for token in text.lower().split())
        return [term for term in terms if len(term) >= min_term_length]
    return analyze


@dataclass
class TfIdfModel:
    """vocabulary maps term -> (document_frequency, idf)."""
    vocabulary: Dict[str, Tuple[int, float]]
    n_docs: int
    min_term_length: int = 2

    def df(self, term: str) -> int:
        return self.vocabulary[term][0]

    def idf(self, term: str) -> float:
        return self.vocabulary[term][1]


@dataclass
class Query:
    entity_kind: EntityKind
    text: str
    terms: List[Tuple[str, float]] = field(default_factory=list)


def build_tfidf(blocks: Sequence[str], min_term_length: int = 2) -> TfIdfModel:
    """
    Fit document frequencies and smoothed idf over ``blocks``.

    Raises:
        TfIdfError: If no block contributes a term
    """
    analyzer = make_term_analyzer(min_term_length)
    if not any(analyzer(block) for block in blocks):
        raise TfIdfError("cannot build tf-idf: no terms in the given blocks")

    counts = CountVectorizer(analyzer=analyzer).fit(blocks)
    matrix = counts.transform(blocks)
    transformer = TfidfTransformer(smooth_idf=True).fit(matrix)
    document_frequency = np.asarray((matrix > 0).sum(axis=0)).ravel()

    vocabulary = {
        term: (int(document_frequency[column]), float(transformer.idf_[column]))
        for term, column in counts.vocabulary_.items()
    }
    return TfIdfModel(vocabulary=vocabulary, n_docs=len(blocks), min_term_length=min_term_length)


def make_query(kind: EntityKind, model: TfIdfModel, exemplars: Sequence[str], top_m: int) -> Query:
    """
    Query text from the top_m exemplar terms by (total tf across exemplars) * idf.

    Ties break lexicographically. Exemplar terms missing from the model
    vocabulary are ignored.

    Raises:
        TfIdfError: If the vocabulary is empty or no exemplar term is in it
        ValueError: If top_m < 1
    """
    if top_m < 1:
        raise ValueError(f"top_m must be at least 1, got {top_m}")
    if not model.vocabulary:
        raise TfIdfError("tf-idf vocabulary is empty")

    analyzer = make_term_analyzer(model.min_term_length)
    term_frequency: Dict[str, int] = {}
    for exemplar in exemplars:
        for term in analyzer(exemplar):
            if term in model.vocabulary:
                term_frequency[term] = term_frequency.get(term, 0) + 1
    if not term_frequency:
        raise TfIdfError(f"no exemplar term for {kind.value} occurs in the tf-idf vocabulary")

    scored = sorted(
        ((term, tf * model.idf(term)) for term, tf in term_frequency.items()),
        key=lambda item: (-item[1], item[0]),
    )[:top_m]
    return Query(entity_kind=kind, text=" ".join(term for term, _ in scored), terms=scored)

# ==============================================================================
# QUERIES FILE
# ==============================================================================

def queries_to_yaml(queries: Dict[EntityKind, Query]) -> str:
    """Hand-editable YAML: kind -> {text, terms: [[term, weight], ...]}."""
    payload = {
        kind.value: {"text": query.text, "terms": [[term, weight] for term, weight in query.terms]}
        for kind, query in sorted(queries.items(), key=lambda item: item[0].order)
    }
    return yaml.safe_dump(payload, allow_unicode=True, sort_keys=True, default_flow_style=False)


def load_queries(path: Path) -> Dict[EntityKind, Query]:
    """
    Read a queries file written by query-gen (possibly hand-edited).

    Raises:
        FileNotFoundError: If the file does not exist
        TfIdfError: If an entry has empty text
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Queries file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}

    queries: Dict[EntityKind, Query] = {}
    for key, entry in data.items():
        kind = EntityKind(key)
        text = entry.get("text", "") if isinstance(entry, dict) else str(entry)
        if not text.strip():
            raise TfIdfError(f"{path}: empty query text for {key}")
        terms = [(str(term), float(weight)) for term, weight in (entry.get("terms") or [])] \
            if isinstance(entry, dict) else []
        queries[kind] = Query(entity_kind=kind, text=text, terms=terms)
    return queries


def resolve_queries(queries_path: Path, overrides: Dict[str, str]) -> Dict[EntityKind, Query]:
    """
    Queries from the queries file (when present) with config overrides applied.

    An override replaces the query text for its kind and drops the term list.
    """
    queries = load_queries(queries_path) if Path(queries_path).exists() else {}
    for key, text in overrides.items():
        kind = EntityKind(key)
        queries[kind] = Query(entity_kind=kind, text=text, terms=[])
    return queries
