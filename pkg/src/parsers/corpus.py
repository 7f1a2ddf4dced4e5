"""
Ruling corpus loading, cleaning and scope filtering.

Input is plain UTF-8 text: either a directory of ``.txt`` rulings (id = file
stem) or a JSONL manifest with one ``{"id", "path", "ruling_date",
"jurisdiction"}`` object per ruling (paths relative to the manifest). Files
that cannot be read or decoded become LoadError records; they never abort the
load.

Cleaning removes every match of the configured header-code patterns (the
ruling codes repeated at the top of each page) and collapses runs of three or
more newlines to two. The header used for scope classification is the first
``header_chars`` characters of the cleaned text.
"""

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, List, Optional, Pattern, Sequence, Tuple, Union

from src.core.config import CorpusConfig, ScopeConfig
from src.core.logger import get_logger, log_operation
from src.core.models import Document

logger = get_logger(__name__)

_NEWLINE_RUN = re.compile(r"\n{3,}")

_SPANISH_MONTHS = {
    "enero": 1, "febrero": 2, "marzo": 3, "abril": 4, "mayo": 5, "junio": 6,
    "julio": 7, "agosto": 8, "septiembre": 9, "setiembre": 9, "octubre": 10,
    "noviembre": 11, "diciembre": 12,
}
_LONG_DATE = re.compile(
    r"\b(\d{1,2})\s+de\s+(" + "|".join(_SPANISH_MONTHS) + r")\s+(?:de|del)\s+(?:año\s+)?(\d{4})\b",
    re.IGNORECASE,
)


@dataclass
class LoadError:
    """A file that could not be turned into a Document."""
    source_path: str
    error: str
    byte_offset: Optional[int] = None

    def to_dict(self) -> dict:
        return {"source_path": self.source_path, "error": self.error, "byte_offset": self.byte_offset}


@dataclass
class CorpusLoadResult:
    documents: List[Document] = field(default_factory=list)
    errors: List[LoadError] = field(default_factory=list)


@dataclass
class ScopeFilter:
    """Compiled case-insensitive header rules."""
    must_patterns: List[Pattern] = field(default_factory=list)
    must_not_patterns: List[Pattern] = field(default_factory=list)

    @classmethod
    def from_config(cls, scope: ScopeConfig) -> "ScopeFilter":
        return cls(
            must_patterns=[re.compile(p, re.IGNORECASE) for p in scope.must_patterns],
            must_not_patterns=[re.compile(p, re.IGNORECASE) for p in scope.must_not_patterns],
        )

# ==============================================================================
# LOADING
# ==============================================================================

@dataclass
class _Entry:
    doc_id: str
    path: Path
    ruling_date: Optional[date] = None
    jurisdiction: Optional[str] = None


def _read_document(entry: _Entry) -> Union[Document, LoadError]:
    try:
        payload = entry.path.read_bytes()
    except OSError as e:
        return LoadError(source_path=str(entry.path), error=f"unreadable: {e}")
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as e:
        return LoadError(source_path=str(entry.path), error=f"not UTF-8: {e.reason}", byte_offset=e.start)
    return Document(
        id=entry.doc_id,
        source_path=str(entry.path),
        raw_text=text,
        ruling_date=entry.ruling_date,
        jurisdiction=entry.jurisdiction,
    )


def _manifest_entries(manifest: Path) -> Tuple[List[_Entry], List[LoadError]]:
    entries: List[_Entry] = []
    errors: List[LoadError] = []
    with open(manifest, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                raw_date = data.get("ruling_date")
                entries.append(_Entry(
                    doc_id=str(data["id"]),
                    path=(manifest.parent / data["path"]),
                    ruling_date=date.fromisoformat(raw_date) if raw_date else None,
                    jurisdiction=data.get("jurisdiction"),
                ))
            except (ValueError, KeyError, TypeError) as e:
                errors.append(LoadError(source_path=f"{manifest}:{line_number}", error=f"bad manifest entry: {e}"))
    return entries, errors


def load_corpus(root: Path, file_glob: str = "*.txt", max_workers: int = 1) -> CorpusLoadResult:
    """
    Load every ruling under ``root``.

    Args:
        root: Directory of text files, or a JSONL manifest file
        file_glob: File pattern used for directories
        max_workers: Files read in parallel

    Returns:
        CorpusLoadResult with documents sorted by id and per-file errors

    Raises:
        FileNotFoundError: If root does not exist
    """
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"Corpus path not found: {root}")

    errors: List[LoadError] = []
    if root.is_dir():
        entries = [_Entry(doc_id=path.stem, path=path) for path in sorted(root.glob(file_glob)) if path.is_file()]
    else:
        entries, errors = _manifest_entries(root)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        loaded = list(executor.map(_read_document, entries))

    documents: List[Document] = []
    seen = set()
    for item in loaded:
        if isinstance(item, LoadError):
            errors.append(item)
        elif item.id in seen:
            errors.append(LoadError(source_path=item.source_path, error=f"duplicate document id {item.id!r}"))
        else:
            seen.add(item.id)
            documents.append(item)

    for error in errors:
        log_operation(logger, "WARNING", f"Skipped {error.source_path}: {error.error}",
                      stage="corpus", operation="load_corpus", file_path=error.source_path,
                      error=error.error)

    documents.sort(key=lambda d: d.id)
    errors.sort(key=lambda e: e.source_path)
    log_operation(logger, "INFO", f"Loaded {len(documents)} rulings ({len(errors)} errors)",
                  stage="corpus", operation="load_corpus", file_path=str(root),
                  metadata={"documents": len(documents), "errors": len(errors)})
    return CorpusLoadResult(documents=documents, errors=errors)

# ==============================================================================
# CLEANING AND SCOPE
# ==============================================================================

def compile_patterns(patterns: Iterable[Union[str, Pattern]]) -> List[Pattern]:
    return [p if isinstance(p, re.Pattern) else re.compile(p) for p in patterns]


def clean_text(raw: str, header_code_patterns: Sequence[Union[str, Pattern]]) -> str:
    """
    Remove header-code matches and collapse newline runs.

    Removal and collapsing repeat until the text stops changing, so the
    result is a fixed point: clean_text(clean_text(x)) == clean_text(x).
    """
    compiled = compile_patterns(header_code_patterns)
    text = raw
    while True:
        previous = text
        for pattern in compiled:
            text = pattern.sub("", text)
        text = _NEWLINE_RUN.sub("\n\n", text)
        if text == previous:
            return text


def classify_scope(doc: Document, scope_filter: ScopeFilter) -> bool:
    """True iff every must-pattern and no must-not-pattern matches the header."""
    header = doc.header
    if not all(p.search(header) for p in scope_filter.must_patterns):
        return False
    return not any(p.search(header) for p in scope_filter.must_not_patterns)


def parse_ruling_date(text: str) -> Optional[date]:
    """First Spanish long-form date in ``text`` ("12 de octubre de 2023"), if valid."""
    for match in _LONG_DATE.finditer(text):
        day, month_name, year = match.groups()
        try:
            return date(int(year), _SPANISH_MONTHS[month_name.lower()], int(day))
        except ValueError:
            continue
    return None


def prepare_document(doc: Document, corpus_cfg: CorpusConfig, scope_filter: ScopeFilter) -> Document:
    """Clean, cut the header, classify scope and infer the ruling date when missing."""
    cleaned = clean_text(doc.raw_text, corpus_cfg.header_code_patterns)
    prepared = replace(doc, cleaned_text=cleaned, header=cleaned[:corpus_cfg.header_chars])
    prepared.in_scope = classify_scope(prepared, scope_filter)
    if prepared.ruling_date is None and corpus_cfg.infer_ruling_date:
        prepared.ruling_date = parse_ruling_date(prepared.header)
    return prepared


def prepare_documents(documents: Sequence[Document], corpus_cfg: CorpusConfig,
                      max_workers: int = 1) -> List[Document]:
    scope_filter = ScopeFilter.from_config(corpus_cfg.scope)
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        prepared = list(executor.map(lambda d: prepare_document(d, corpus_cfg, scope_filter), documents))
    in_scope = sum(1 for d in prepared if d.in_scope)
    log_operation(logger, "INFO", f"Prepared {len(prepared)} rulings, {in_scope} in scope",
                  stage="corpus", operation="prepare_documents",
                  metadata={"documents": len(prepared), "in_scope": in_scope})
    return sorted(prepared, key=lambda d: d.id)
