"""Client machinery for external model services.

Wire contract (shared by the captioner, summarizer, coarse captioner, and
any other model endpoint): HTTP POST of a JSON body

    {"mode": "frame" | "summarize" | "tag", "inputs": [...], "prompt"?: str}

answered with

    {"outputs": [...], "model_id": str}

where ``outputs`` has one entry per input (one entry total for
"summarize").  Tests and offline runs use in-process transports speaking
the same contract; endpoints with the ``stub:`` scheme route to built-in
deterministic stubs.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable

from .errors import ServiceError, ServiceTimeout

Transport = Callable[[dict], dict]


@dataclass(frozen=True)
class CaptionServiceSpec:
    """Connection and retry policy for one service endpoint."""

    endpoint: str
    timeout_ms: int = 10_000
    max_retries: int = 3
    backoff_base_ms: int = 200
    max_in_flight: int = 8

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class ServiceClient:
    """Bounded-concurrency caller with exponential-backoff retries.

    At most ``max_in_flight`` requests are outstanding at any moment
    (enforced with a semaphore held only for the duration of the transport
    call, not during backoff waits).  A failed attempt k waits
    ``backoff_base_ms * 2**k`` milliseconds before the next try; after
    ``max_retries + 1`` total attempts the last error propagates.
    """

    def __init__(self, spec: CaptionServiceSpec, transport: Transport | None = None,
                 sleeper: Callable[[float], None] = time.sleep):
        self.spec = spec
        self._transport = transport if transport is not None else http_transport(spec)
        self._sleeper = sleeper
        self._sem = threading.BoundedSemaphore(spec.max_in_flight)

    def call(self, payload: dict) -> dict:
        last: ServiceError | None = None
        for attempt in range(self.spec.max_retries + 1):
            try:
                with self._sem:
                    response = self._transport(payload)
                return _validated(response, payload)
            except ServiceError as e:
                last = e
                if attempt < self.spec.max_retries:
                    self._sleeper(self.spec.backoff_base_ms * (2 ** attempt) / 1000.0)
        assert last is not None
        raise last


def _validated(response: dict, payload: dict) -> dict:
    outputs = response.get("outputs")
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ServiceError(f"malformed response: {response!r}")
    n_expected = 1 if payload.get("mode") == "summarize" else len(payload.get("inputs", []))
    if len(outputs) != n_expected:
        raise ServiceError(
            f"expected {n_expected} outputs, got {len(outputs)}")
    return response


def http_transport(spec: CaptionServiceSpec) -> Transport:
    """POST JSON to the endpoint; timeouts and HTTP errors map to the
    service error taxonomy so the retry loop treats them uniformly."""
    import httpx

    def post(payload: dict) -> dict:
        try:
            r = httpx.post(spec.endpoint, json=payload,
                           timeout=spec.timeout_ms / 1000.0)
        except httpx.TimeoutException as e:
            raise ServiceTimeout(f"{spec.endpoint}: {e}") from None
        except httpx.HTTPError as e:
            raise ServiceError(f"{spec.endpoint}: {e}") from None
        if r.status_code != 200:
            raise ServiceError(f"{spec.endpoint}: HTTP {r.status_code}")
        try:
            return r.json()
        except ValueError as e:
            raise ServiceError(f"{spec.endpoint}: bad JSON body: {e}") from None

    return post
