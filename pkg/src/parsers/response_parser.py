"""
Parsing of chat-model answers into partial extractions.

The prompt asks for one JSON object with keys "percentage" and "amount";
models often wrap it in prose or a code fence, so the first decodable JSON
object anywhere in the text is used.
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, Optional

from src.core.logger import get_logger
from src.core.models import EntityKind
from src.parsers.regex_extractor import parse_numeric_string

logger = get_logger(__name__)

_DECODER = json.JSONDecoder()


class ParseFailure(ValueError):
    """The model answer holds no JSON object; counted as an invalid response."""


@dataclass
class ParsedResponse:
    kind: EntityKind
    percentage: Optional[float] = None
    amount: Optional[float] = None

    @property
    def is_empty(self) -> bool:
        return self.percentage is None and self.amount is None


def find_json_object(text: str) -> Dict[str, Any]:
    """
    First JSON object embedded in ``text``.

    Raises:
        ParseFailure: If no position in the text starts a decodable object
    """
    position = text.find("{")
    while position != -1:
        try:
            value, _ = _DECODER.raw_decode(text, position)
        except json.JSONDecodeError:
            value = None
        if isinstance(value, dict):
            return value
        position = text.find("{", position + 1)
    raise ParseFailure(f"no JSON object in model response: {text[:80]!r}")


def _read_number(value: Any, field: str, allow_zero: bool = False) -> Optional[float]:
    if value is None or isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        number = float(value)
    elif isinstance(value, str):
        if not value.strip() or value.strip().lower() in ("null", "none", "n/a"):
            return None
        number = parse_numeric_string(value)
        if number is None:
            logger.warning(
                f"Unreadable {field} in model response: {value!r}",
                extra={"stage": "extract_llm", "operation": "parse_response", "metadata": {"field": field}}
            )
            return None
    else:
        return None
    if number != number or number in (float("inf"), float("-inf")) or number < 0:
        return None
    if number == 0 and not allow_zero:
        return None
    return number


def parse_response(text: str, kind: EntityKind) -> ParsedResponse:
    """
    Read "percentage" and "amount" from the model answer.

    Numeric strings go through the Argentine numeral rules; null, missing and
    negative values become absent, as does a zero percentage (an amount of
    zero is kept). Moral damage never carries a percentage, whatever the
    model said.

    Raises:
        ParseFailure: If the text contains no JSON object
    """
    data = find_json_object(text)
    percentage = _read_number(data.get("percentage"), "percentage")
    amount = _read_number(data.get("amount"), "amount", allow_zero=True)
    if not kind.carries_percentage:
        percentage = None
    return ParsedResponse(kind=kind, percentage=percentage, amount=amount)
