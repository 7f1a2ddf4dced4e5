"""
JSON-over-HTTP calls with bounded retries.

Both model services (embeddings and chat completions) POST a JSON body and
read a JSON response. Transport errors, timeouts, 429 and 5xx responses are
retried up to ``retry_limit`` extra attempts with exponential backoff; any
other 4xx fails immediately. Exhausted or fatal calls raise ServiceError
carrying the last HTTP status (None for transport failures) and the number of
attempts made.
"""

from typing import Any, Dict, Optional

import requests
from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from src.core.logger import get_logger

logger = get_logger(__name__)


class ServiceError(RuntimeError):
    """A model-service call failed after all permitted attempts."""

    def __init__(self, message: str, status: Optional[int], attempts: int):
        super().__init__(f"{message} (status={status}, attempts={attempts})")
        self.status = status
        self.attempts = attempts


class _TransientError(Exception):
    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


def _log_retry(retry_state: RetryCallState) -> None:
    exc = retry_state.outcome.exception() if retry_state.outcome else None
    logger.warning(
        f"Retrying service call after failure: {exc}",
        extra={
            "stage": "http",
            "operation": "retry",
            "attempt": retry_state.attempt_number,
            "error": str(exc),
        }
    )


def post_json_with_retry(
    session: requests.Session,
    url: str,
    payload: Dict[str, Any],
    headers: Dict[str, str],
    timeout: float,
    retry_limit: int,
    backoff_seconds: float,
) -> Dict[str, Any]:
    """
    POST ``payload`` as JSON and return the decoded JSON response.

    Args:
        session: requests session (shared per client)
        url: Endpoint URL
        payload: JSON body
        headers: Extra headers (authorization)
        timeout: Per-attempt timeout in seconds
        retry_limit: Extra attempts after the first one
        backoff_seconds: Multiplier for exponential backoff between attempts

    Returns:
        Decoded JSON object

    Raises:
        ServiceError: On exhausted retries, non-retryable status, or a body
            that is not a JSON object
    """
    attempts = 0

    def _attempt() -> requests.Response:
        nonlocal attempts
        attempts += 1
        try:
            response = session.post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as e:
            raise _TransientError(f"transport failure: {e}") from e
        if response.status_code == 429 or response.status_code >= 500:
            raise _TransientError(f"HTTP {response.status_code}", status=response.status_code)
        return response

    retryer = Retrying(
        stop=stop_after_attempt(retry_limit + 1),
        wait=wait_exponential(multiplier=backoff_seconds, max=max(backoff_seconds * 30, 0)),
        retry=retry_if_exception_type(_TransientError),
        before_sleep=_log_retry,
        reraise=True,
    )

    try:
        response = retryer(_attempt)
    except _TransientError as e:
        raise ServiceError(f"request to {url} failed: {e}", status=e.status, attempts=attempts) from e

    if response.status_code >= 400:
        raise ServiceError(f"request to {url} rejected: HTTP {response.status_code}",
                           status=response.status_code, attempts=attempts)
    try:
        data = response.json()
    except ValueError as e:
        raise ServiceError(f"response from {url} is not JSON", status=response.status_code,
                           attempts=attempts) from e
    if not isinstance(data, dict):
        raise ServiceError(f"response from {url} is not a JSON object",
                           status=response.status_code, attempts=attempts)
    return data
