"""Chat-completion client with deterministic decoding, caching, and a mock backend.

Requests go out as chat-completion JSON ({model, messages, temperature,
max_tokens}); the completion text is read from the first choice's message
content. Responses are cached in an append-only JSONL file keyed by the
request hash, so reruns are free and reproducible. Transient failures
(timeouts, 429, 5xx) retry with exponential backoff and jitter.

The mock transport replays a transcript of prompt-hash -> response-text pairs
and never touches the network; tests and the bundled end-to-end pipeline run
against it.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 2560


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    cached: bool
    latency_ms: float


class LlmError(Exception):
    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


class TransportError(Exception):
    def __init__(self, message: str, status: int | None = None, body: str | None = None,
                 retryable: bool = False):
        super().__init__(message)
        self.status = status
        self.body = body
        self.retryable = retryable


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def request_key(request: CompletionRequest) -> str:
    payload = json.dumps(
        {
            "model": request.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_payload(request: CompletionRequest) -> dict:
    return {
        "model": request.model,
        "messages": [{"role": "user", "content": request.prompt}],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }


class HttpTransport:
    """POSTs chat-completion payloads to an HTTP endpoint."""

    def __init__(self, endpoint: str, api_key: str | None = None, timeout_s: float = 60.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.calls = 0

    def send(self, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self.calls += 1
        try:
            response = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise TransportError(f"transport failure: {exc}", retryable=True)
        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(
                f"HTTP {response.status_code}",
                status=response.status_code,
                body=response.text,
                retryable=True,
            )
        if response.status_code != 200:
            raise TransportError(
                f"HTTP {response.status_code}",
                status=response.status_code,
                body=response.text,
                retryable=False,
            )
        return response.json()


class MockTransport:
    """Scripted backend keyed by sha256 of the prompt text.

    Instrumented for tests: counts calls, tracks the maximum number of
    concurrent in-flight requests, and records send timestamps. A `failures`
    list of HTTP status codes is consumed (one per call) before successful
    sends, to exercise the retry path.
    """

    def __init__(self, transcript: dict[str, str], delay_s: float = 0.0,
                 failures: list[int] | None = None):
        self.transcript = dict(transcript)
        self.delay_s = delay_s
        self.failures = list(failures or [])
        self.calls = 0
        self.payloads: list[dict] = []
        self.send_times: list[float] = []
        self.max_inflight = 0
        self._inflight = 0
        self._lock = threading.Lock()

    def send(self, payload: dict) -> dict:
        with self._lock:
            self.calls += 1
            self.payloads.append(payload)
            self.send_times.append(time.monotonic())
            self._inflight += 1
            self.max_inflight = max(self.max_inflight, self._inflight)
            failure = self.failures.pop(0) if self.failures else None
        try:
            if self.delay_s:
                time.sleep(self.delay_s)
            if failure is not None:
                retryable = failure == 429 or failure >= 500
                raise TransportError(
                    f"HTTP {failure}", status=failure, body="scripted failure",
                    retryable=retryable,
                )
            prompt = payload["messages"][0]["content"]
            key = prompt_sha256(prompt)
            if key not in self.transcript:
                raise TransportError(
                    f"prompt hash not scripted: {key}", status=None, retryable=False
                )
            return {"choices": [{"message": {"content": self.transcript[key]}}]}
        finally:
            with self._lock:
                self._inflight -= 1


def load_transcript(path: str | Path) -> dict[str, str]:
    """Read a mock transcript: JSONL of {prompt_hash, response_text}."""
    transcript = {}
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "prompt_hash" not in record or "response_text" not in record:
                raise ValueError(f"transcript line {line_no}: need prompt_hash and response_text")
            transcript[record["prompt_hash"]] = record["response_text"]
    return transcript


def write_transcript(transcript: dict[str, str], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for key in sorted(transcript):
            handle.write(
                json.dumps({"prompt_hash": key, "response_text": transcript[key]},
                           ensure_ascii=False) + "\n"
            )


class ResponseCache:
    """Content-addressed completion cache, optionally persisted as JSONL."""

    def __init__(self, path: str | Path | None = None):
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        self._path = Path(path) if path is not None else None
        if self._path is not None and self._path.exists():
            with self._path.open(encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if line:
                        record = json.loads(line)
                        self._entries[record["key"]] = record["text"]

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, text: str) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = text
            if self._path is not None:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                with self._path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps({"key": key, "text": text}, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class RateLimiter:
    """Serializes request starts to at most `rate_per_s` per second."""

    def __init__(self, rate_per_s: float | None):
        self._interval = 1.0 / rate_per_s if rate_per_s else 0.0
        self._lock = threading.Lock()
        self._next_time = 0.0

    def wait(self) -> None:
        if not self._interval:
            return
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next_time)
            self._next_time = start + self._interval
        delay = start - time.monotonic()
        if delay > 0:
            time.sleep(delay)


class LlmClient:
    """Thread-safe completion client with cache, rate limit, and bounded concurrency."""

    def __init__(
        self,
        transport,
        model: str = "gpt-3.5-turbo",
        temperature: float = 0.0,
        max_tokens: int = 2560,
        cache: ResponseCache | None = None,
        concurrency: int = 4,
        rate_per_s: float | None = None,
        retries: int = 5,
        backoff_base_s: float = 1.0,
        rng: random.Random | None = None,
    ):
        if concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        self.transport = transport
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.cache = cache if cache is not None else ResponseCache()
        self.concurrency = concurrency
        self.retries = retries
        self.backoff_base_s = backoff_base_s
        self._semaphore = threading.BoundedSemaphore(concurrency)
        self._limiter = RateLimiter(rate_per_s)
        self._rng = rng if rng is not None else random.Random()

    def request_for(self, prompt: str) -> CompletionRequest:
        return CompletionRequest(
            model=self.model,
            prompt=prompt,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        key = request_key(request)
        cached = self.cache.get(key)
        if cached is not None:
            return CompletionResponse(text=cached, cached=True, latency_ms=0.0)
        payload = build_payload(request)
        last_error: TransportError | None = None
        latency_ms = 0.0
        for attempt in range(self.retries):
            if attempt:
                backoff = self.backoff_base_s * (2 ** (attempt - 1))
                time.sleep(backoff * (1.0 + self._rng.random()))
            try:
                with self._semaphore:
                    self._limiter.wait()
                    sent_at = time.monotonic()
                    raw = self.transport.send(payload)
                    latency_ms = (time.monotonic() - sent_at) * 1000.0
                break
            except TransportError as exc:
                if not exc.retryable:
                    raise LlmError(str(exc), status=exc.status, body=exc.body)
                last_error = exc
        else:
            raise LlmError(
                f"retries exhausted after {self.retries} attempts: {last_error}",
                status=last_error.status if last_error else None,
                body=last_error.body if last_error else None,
            )
        text = _extract_text(raw)
        if not text.strip():
            raise LlmError("empty response")
        self.cache.put(key, text)
        return CompletionResponse(text=text, cached=False, latency_ms=latency_ms)

    def complete_prompt(self, prompt: str) -> CompletionResponse:
        return self.complete(self.request_for(prompt))


def _extract_text(raw: dict) -> str:
    try:
        return raw["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise LlmError(f"malformed completion response: {json.dumps(raw)[:200]}")
