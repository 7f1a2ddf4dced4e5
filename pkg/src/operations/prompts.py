"""
Prompt rendering for entity extraction.

The configured template is filled with the kind's instruction and the
offered segments, then a fixed answer-format line is appended so every
prompt asks for the same JSON object, whatever template is configured.
"""

import hashlib
from string import Formatter
from typing import Sequence

from src.core.config import PromptConfig
from src.core.models import EntityKind, Segment

PLACEHOLDERS = ("entity_kind_instruction", "segments")

RESPONSE_FORMAT = (
    'Respondé únicamente con un objeto JSON con las claves "percentage" y "amount"; '
    "usá null para los valores que no figuren en los fragmentos."
)


class PromptTemplateError(ValueError):
    """Template placeholders that cannot be bound, or a kind without instruction."""


def _check_template(template: str) -> None:
    try:
        fields = {name for _, name, _, _ in Formatter().parse(template) if name is not None}
    except ValueError as e:
        raise PromptTemplateError(f"malformed prompt template: {e}") from e
    unknown = sorted(fields - set(PLACEHOLDERS))
    if unknown:
        raise PromptTemplateError(f"prompt template has unbound placeholders: {', '.join(unknown)}")
    missing = [name for name in PLACEHOLDERS if name not in fields]
    if missing:
        raise PromptTemplateError(f"prompt template lacks placeholders: {', '.join(missing)}")


def order_segments(segments: Sequence[Segment]) -> list:
    """Descending score; unscored segments last, then by position."""
    return sorted(
        segments,
        key=lambda s: (s.score is None, -(s.score or 0.0), s.char_span),
    )


def render_prompt(tpl: PromptConfig, kind: EntityKind, segments: Sequence[Segment]) -> str:
    """
    Render the user prompt for one (document, kind).

    Raises:
        ValueError: If segments is empty
        PromptTemplateError: If the template has unknown or missing
            placeholders, or no instruction exists for ``kind``
    """
    if not segments:
        raise ValueError("render_prompt needs at least one segment")
    _check_template(tpl.template)
    instruction = tpl.instructions.get(kind.value)
    if not instruction:
        raise PromptTemplateError(f"no prompt instruction configured for {kind.value}")

    joined = tpl.segment_delimiter.join(segment.text for segment in order_segments(segments))
    body = tpl.template.format(entity_kind_instruction=instruction, segments=joined)
    return f"{body.rstrip()}\n\n{RESPONSE_FORMAT}\n"


def prompt_sha256(prompt: str) -> str:
    """Key used by mock fixtures and the prompts sidecar."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()
