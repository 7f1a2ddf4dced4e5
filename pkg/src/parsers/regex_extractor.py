"""
Regex baseline entity extraction.

Works on a single predefined segment per document: the first percent-symbol
window. Within it, keywords decide the disability kind, the first captured
percentage is paired with the first ``$`` amount. Moral damage comes from the
first window around a moral-damage keyword, amounts only.

Numerals follow Argentine conventions: dots group thousands, the comma is the
decimal separator ("$1.234.567,89" -> 1234567.89).
"""

import re
from typing import Dict, List, Optional, Pattern, Sequence

from src.core.config import VERBATIM_PERCENTAGE_CAPTURE, RegexExtractionConfig, SegmenterConfig
from src.core.logger import get_logger
from src.core.models import Document, EntityKind, Extraction, ExtractionMethod
from src.parsers.segmenter import regex_keyword_segments, regex_percent_segments

logger = get_logger(__name__)

_AMOUNT = re.compile(r"\$\s*(\d+(?:[.,]\d+)*)")
_NUMERAL = re.compile(r"\d+(?:[.,]\d+)*")


def _warn(message: str, **metadata) -> None:
    logger.warning(message, extra={"stage": "extract_regex", "operation": "parse_numeral",
                                   "metadata": metadata})

# ==============================================================================
# NUMERAL NORMALIZATION
# ==============================================================================

def normalize_number(raw: str, warn: bool = True) -> Optional[float]:
    """
    Parse an Argentine-formatted numeral.

    - "500.000" -> 500000.0 (dot groups of three digits are thousands)
    - "1.234.567,89" -> 1234567.89
    - "15,5" -> 15.5
    - "12.50" -> 12.5, with a warning: a single dot group of other than three
      digits is read as a decimal point
    - several commas ("1,500,000") are read as thousands separators, with a warning

    Returns None for anything that is not a numeral.
    """
    text = raw.strip()
    if not _NUMERAL.fullmatch(text):
        return None

    if text.count(",") > 1:
        if warn:
            _warn(f"Several commas in numeral {raw!r}; reading them as thousands separators", raw=raw)
        text = text.replace(",", "")
        integer, decimals = text, ""
    elif "," in text:
        integer, decimals = text.split(",")
    else:
        integer, decimals = text, ""

    groups = integer.split(".")
    if len(groups) > 1 and not all(len(g) == 3 for g in groups[1:]):
        if len(groups) == 2 and not decimals:
            if warn:
                _warn(f"Ambiguous numeral {raw!r}; reading the dot as a decimal point", raw=raw)
            return float(integer)
        if warn:
            _warn(f"Irregular digit grouping in {raw!r}; dropping the dots", raw=raw)
    digits = "".join(groups)
    return float(f"{digits}.{decimals}" if decimals else digits)


def parse_numeric_string(value: str, warn: bool = True) -> Optional[float]:
    """Normalize a numeral that may carry "$", "%" or surrounding spaces."""
    cleaned = value.strip().replace("$", "").replace("%", "").strip()
    return normalize_number(cleaned, warn=warn)


def extract_numerals(text: str) -> List[float]:
    """Every numeral in ``text``, normalized quietly, in order of appearance."""
    values = []
    for match in _NUMERAL.finditer(text):
        value = normalize_number(match.group(0), warn=False)
        if value is not None:
            values.append(value)
    return values

# ==============================================================================
# SEGMENT-LEVEL EXTRACTORS
# ==============================================================================

def extract_percentages(segment_text: str, pattern: str = VERBATIM_PERCENTAGE_CAPTURE) -> List[float]:
    """
    Numbers followed by a percent sign, in order of appearance.

    Captures that do not parse as numerals (possible with the verbatim
    pattern, whose "." matches any character) are skipped with a warning, as
    are zero percentages; values above 100 are kept with a warning.
    """
    values: List[float] = []
    for match in re.finditer(pattern, segment_text):
        capture = match.group(1)
        value = normalize_number(capture.replace(".", ",") if _is_plain_decimal(capture) else capture)
        if value is None:
            _warn(f"Skipping unparseable percentage capture {capture!r}", raw=capture)
            continue
        if value <= 0:
            _warn(f"Skipping zero percentage {capture!r}", raw=capture)
            continue
        if value > 100:
            _warn(f"Percentage above 100 kept: {value}", raw=capture)
        values.append(value)
    return values


def _is_plain_decimal(capture: str) -> bool:
    # "15.5" captured via the optional dot group is a decimal, not thousands
    return capture.count(".") == 1 and "," not in capture and len(capture.split(".")[1]) != 3


def extract_amounts(segment_text: str) -> List[float]:
    """Amounts introduced by a dollar sign, in order of appearance."""
    values: List[float] = []
    for match in _AMOUNT.finditer(segment_text):
        value = normalize_number(match.group(1))
        if value is not None:
            values.append(value)
    return values


def _keyword_pattern(keywords: Sequence[str]) -> Optional[Pattern]:
    if not keywords:
        return None
    alternation = "|".join(re.escape(k) for k in keywords)
    return re.compile(rf"(?<!\w)(?:{alternation})", re.IGNORECASE)


def classify_disability(segment_text: str, keyword_config: RegexExtractionConfig) -> Optional[EntityKind]:
    """
    Disability kind named in the segment.

    Psychophysical keywords, or both physical and psychological keywords,
    give PSYCHOPHYSICAL_DISABILITY; otherwise whichever group matched; None
    when no keyword matches. Keywords match at the start of a word, so
    "física" covers "físicas" but does not fire inside "psicofísica".
    """
    matches: Dict[str, bool] = {}
    for group in ("physical", "psychological", "psychophysical"):
        pattern = _keyword_pattern(keyword_config.keywords.get(group, []))
        matches[group] = bool(pattern and pattern.search(segment_text))

    if matches["psychophysical"] or (matches["physical"] and matches["psychological"]):
        return EntityKind.PSYCHOPHYSICAL_DISABILITY
    if matches["physical"]:
        return EntityKind.PHYSICAL_DISABILITY
    if matches["psychological"]:
        return EntityKind.PSYCHOLOGICAL_DISABILITY
    return None

# ==============================================================================
# DOCUMENT-LEVEL BASELINE
# ==============================================================================

def regex_extract(doc: Document, cfg: SegmenterConfig, keyword_config: RegexExtractionConfig) -> List[Extraction]:
    """
    Regex baseline over one document.

    Returns at most one disability extraction (from the first percent window)
    and one moral-damage extraction. No segment, no keyword or no value means
    no extraction; none of these is an error.
    """
    extractions: List[Extraction] = []
    capture = keyword_config.percent_capture_pattern

    segments = regex_percent_segments(doc, cfg)
    if segments:
        segment = segments[0]
        kind = classify_disability(segment.text, keyword_config)
        if kind is not None:
            percentages = extract_percentages(segment.text, capture)
            amounts = extract_amounts(segment.text)
            percentage = percentages[0] if percentages else None
            amount = amounts[0] if amounts else None
            if percentage is not None or amount is not None:
                extractions.append(Extraction(
                    doc_id=doc.id, kind=kind, percentage=percentage, amount=amount,
                    method=ExtractionMethod.REGEX, provenance=[segment],
                ))

    moral_segments = regex_keyword_segments(doc, keyword_config.moral_damage_keywords, cfg)
    if moral_segments:
        segment = moral_segments[0]
        amounts = extract_amounts(segment.text)
        if amounts:
            extractions.append(Extraction(
                doc_id=doc.id, kind=EntityKind.MORAL_DAMAGE, amount=amounts[0],
                method=ExtractionMethod.REGEX, provenance=[segment],
            ))

    return extractions
