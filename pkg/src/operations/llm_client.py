"""
Chat-completion clients.

HttpChatClient posts OpenAI-chat-compatible requests and converts the
returned per-token log-probabilities to probabilities. MockChatClient answers
from a JSONL fixture table keyed by the SHA-256 of the user prompt, so a
mock run is a pure function of prompt and fixtures.

Fixture lines: {"prompt_sha256", "response_text", "token_probs": [...]}.
"""

import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import requests

from src.core.config import LLM_API_KEY_ENV, LlmConfig
from src.core.http import ServiceError, post_json_with_retry
from src.core.logger import get_logger
from src.operations.prompts import prompt_sha256

logger = get_logger(__name__)


class FixtureMissingError(LookupError):
    """The mock backend has no fixture for a prompt."""


@dataclass
class ModelResponse:
    text: str
    token_probs: List[float] = field(default_factory=list)


class ChatClient:
    def complete(self, prompt: str, system_message: Optional[str] = None) -> ModelResponse:
        raise NotImplementedError


class HttpChatClient(ChatClient):
    """
    OpenAI-chat wire protocol with bounded in-flight requests.

    Args:
        cfg: LLM configuration (endpoint, model, limits)
        api_key: Bearer token; None for local servers without auth
        session: Shared requests session (a new one by default)
    """

    def __init__(self, cfg: LlmConfig, api_key: Optional[str] = None,
                 session: Optional[requests.Session] = None):
        self.cfg = cfg
        self.api_key = api_key
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(cfg.max_concurrent_requests)

    def _payload(self, prompt: str, system_message: Optional[str]) -> Dict[str, Any]:
        messages = []
        if system_message:
            messages.append({"role": "system", "content": system_message})
        messages.append({"role": "user", "content": prompt})
        return {
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
            "logprobs": self.cfg.request_logprobs,
        }

    def _token_probs(self, choice: Dict[str, Any]) -> List[float]:
        content = (choice.get("logprobs") or {}).get("content")
        if not content:
            if self.cfg.request_logprobs:
                logger.warning(
                    "Response carries no token logprobs; hallucination flag skipped",
                    extra={"stage": "extract_llm", "operation": "call_model"}
                )
            return []
        return [math.exp(float(item["logprob"])) for item in content]

    def complete(self, prompt: str, system_message: Optional[str] = None) -> ModelResponse:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        with self._slots:
            data = post_json_with_retry(
                self.session,
                self.cfg.endpoint,
                self._payload(prompt, system_message),
                headers=headers,
                timeout=self.cfg.timeout,
                retry_limit=self.cfg.retry_limit,
                backoff_seconds=self.cfg.backoff_seconds,
            )
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as e:
            raise ServiceError(f"malformed chat response: {e}", status=None, attempts=1) from e
        return ModelResponse(text=text, token_probs=self._token_probs(choice))


class MockChatClient(ChatClient):
    """Deterministic backend answering from a fixture table."""

    def __init__(self, fixtures: Dict[str, ModelResponse]):
        self.fixtures = fixtures

    @classmethod
    def from_file(cls, path: Path) -> "MockChatClient":
        return cls(load_fixtures(path))

    def complete(self, prompt: str, system_message: Optional[str] = None) -> ModelResponse:
        key = prompt_sha256(prompt)
        try:
            fixture = self.fixtures[key]
        except KeyError:
            raise FixtureMissingError(f"no mock fixture for prompt {key[:12]}") from None
        return ModelResponse(text=fixture.text, token_probs=list(fixture.token_probs))


def load_fixtures(path: Path) -> Dict[str, ModelResponse]:
    """
    Read a mock fixture table.

    Raises:
        FileNotFoundError: If path does not exist
        ValueError: On a malformed line
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mock LLM fixture file not found: {path}")
    fixtures: Dict[str, ModelResponse] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                fixtures[data["prompt_sha256"]] = ModelResponse(
                    text=data["response_text"],
                    token_probs=[float(p) for p in data.get("token_probs") or []],
                )
            except (ValueError, KeyError, TypeError) as e:
                raise ValueError(f"{path}:{line_number}: bad fixture line: {e}") from e
    return fixtures


def build_chat_client(cfg: LlmConfig, fixtures_path: Optional[str] = None,
                      session: Optional[requests.Session] = None) -> ChatClient:
    """Client for the configured backend; the HTTP API key comes from the environment."""
    if cfg.backend == "mock":
        if not fixtures_path:
            raise FileNotFoundError("mock llm backend needs paths.llm_fixtures")
        return MockChatClient.from_file(Path(fixtures_path))
    return HttpChatClient(cfg, api_key=os.environ.get(LLM_API_KEY_ENV), session=session)


def call_model(prompt: str, client: ChatClient, system_message: Optional[str] = None) -> ModelResponse:
    """Send one prompt; token_probs is [] when the backend returned none."""
    return client.complete(prompt, system_message)
