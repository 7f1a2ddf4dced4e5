"""
Tests for the chat-completion clients.

These tests verify that:
- The mock client answers from fixtures keyed by prompt hash
- The HTTP client converts logprobs to probabilities
- Malformed responses and missing fixtures raise clear errors
"""

import json
import math
from unittest.mock import Mock

import pytest
import requests

from src.core.config import LlmConfig
from src.core.http import ServiceError
from src.operations.llm_client import (
    FixtureMissingError,
    HttpChatClient,
    MockChatClient,
    ModelResponse,
    build_chat_client,
    call_model,
    load_fixtures,
)
from src.operations.prompts import prompt_sha256


def _http_config(**overrides):
    values = dict(backend="http", endpoint="http://llm.local/v1/chat/completions",
                  model="m", retry_limit=1, backoff_seconds=0.0)
    values.update(overrides)
    return LlmConfig(**values)


def _chat_response(content, logprobs=None):
    response = Mock()
    response.status_code = 200
    choice = {"message": {"content": content}}
    if logprobs is not None:
        choice["logprobs"] = {"content": [{"token": "t", "logprob": lp} for lp in logprobs]}
    response.json.return_value = {"choices": [choice]}
    return response


class TestMockChatClient:
    """Test the fixture-backed client."""

    def test_answers_from_fixture(self, fixture_file):
        client = MockChatClient.from_file(fixture_file)
        response = call_model("prompt uno", client)
        assert response == ModelResponse(text='{"amount": 500000}', token_probs=[0.9, 0.4])

    def test_missing_fixture(self, fixture_file):
        client = MockChatClient.from_file(fixture_file)
        with pytest.raises(FixtureMissingError):
            call_model("otro prompt", client)

    def test_bad_fixture_line(self, tmp_path):
        path = tmp_path / "fixtures.jsonl"
        path.write_text('{"prompt_sha256": "abc"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="fixtures.jsonl:1"):
            load_fixtures(path)

    def test_build_mock_needs_fixtures(self):
        with pytest.raises(FileNotFoundError):
            build_chat_client(LlmConfig(backend="mock"))


class TestHttpChatClient:
    """Test the OpenAI-chat wire format client."""

    def test_payload_and_probabilities(self):
        session = Mock(spec=requests.Session)
        session.post.return_value = _chat_response('{"amount": 1}', logprobs=[0.0, math.log(0.25)])
        client = HttpChatClient(_http_config(), api_key="k", session=session)

        response = client.complete("hola", system_message="sistema")

        assert response.text == '{"amount": 1}'
        assert response.token_probs == pytest.approx([1.0, 0.25])
        payload = session.post.call_args.kwargs["json"]
        assert payload["messages"] == [{"role": "system", "content": "sistema"},
                                       {"role": "user", "content": "hola"}]
        assert payload["temperature"] == 0.0
        assert payload["logprobs"] is True
        assert session.post.call_args.kwargs["headers"]["Authorization"] == "Bearer k"

    def test_missing_logprobs_gives_empty_list(self):
        session = Mock(spec=requests.Session)
        session.post.return_value = _chat_response('{"amount": 1}')
        assert HttpChatClient(_http_config(), session=session).complete("hola").token_probs == []

    def test_malformed_response(self):
        session = Mock(spec=requests.Session)
        response = Mock()
        response.status_code = 200
        response.json.return_value = {"choices": []}
        session.post.return_value = response
        with pytest.raises(ServiceError):
            HttpChatClient(_http_config(), session=session).complete("hola")

    def test_rate_limit_retried_then_fails(self):
        session = Mock(spec=requests.Session)
        limited = Mock()
        limited.status_code = 429
        session.post.return_value = limited
        with pytest.raises(ServiceError) as excinfo:
            HttpChatClient(_http_config(retry_limit=1), session=session).complete("hola")
        assert excinfo.value.attempts == 2

    def test_build_http_reads_key_from_environment(self, monkeypatch):
        monkeypatch.setenv("LEGALEX_LLM_API_KEY", "from-env")
        client = build_chat_client(_http_config())
        assert isinstance(client, HttpChatClient)
        assert client.api_key == "from-env"


# ==============================================================================
# FIXTURES
# ==============================================================================

@pytest.fixture
def fixture_file(tmp_path):
    path = tmp_path / "fixtures.jsonl"
    line = {"prompt_sha256": prompt_sha256("prompt uno"), "response_text": '{"amount": 500000}',
            "token_probs": [0.9, 0.4]}
    path.write_text(json.dumps(line) + "\n\n", encoding="utf-8")
    return path


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
