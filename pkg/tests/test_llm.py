import threading
import time

import pytest

from convrewrite.llm import (
    CompletionRequest,
    LlmClient,
    LlmError,
    MockTransport,
    ResponseCache,
    load_transcript,
    prompt_sha256,
    request_key,
    write_transcript,
)


def scripted_client(transcript, **kwargs):
    transport = MockTransport(transcript)
    defaults = dict(concurrency=4, backoff_base_s=0.001)
    defaults.update(kwargs)
    return LlmClient(transport, **defaults), transport


def test_mock_scripted_response():
    client, _ = scripted_client({prompt_sha256("hello"): "scripted text"})
    response = client.complete_prompt("hello")
    assert response.text == "scripted text"
    assert not response.cached
    assert response.latency_ms >= 0.0


def test_cache_hit_skips_transport():
    client, transport = scripted_client({prompt_sha256("hello"): "hi"})
    first = client.complete_prompt("hello")
    second = client.complete_prompt("hello")
    assert not first.cached and second.cached
    assert second.text == "hi"
    assert second.latency_ms == 0.0
    assert transport.calls == 1


def test_paper_default_payload():
    client, transport = scripted_client({prompt_sha256("p"): "r"})
    client.complete_prompt("p")
    payload = transport.payloads[0]
    assert payload["temperature"] == 0.0
    assert payload["max_tokens"] == 2560
    assert payload["messages"] == [{"role": "user", "content": "p"}]
    assert payload["model"] == "gpt-3.5-turbo"


def test_cache_is_content_addressed():
    transcript = {prompt_sha256("p"): "r"}
    client, transport = scripted_client(transcript)
    client.complete(CompletionRequest(model="m", prompt="p", temperature=0.0, max_tokens=64))
    response = client.complete(
        CompletionRequest(model="m", prompt="p", temperature=0.5, max_tokens=64)
    )
    assert not response.cached  # different parameters, different key
    assert transport.calls == 2
    assert request_key(CompletionRequest("m", "p", 0.0, 64)) != request_key(
        CompletionRequest("m", "p", 0.5, 64)
    )


def test_retry_then_success():
    transport = MockTransport({prompt_sha256("p"): "ok"}, failures=[500, 429])
    client = LlmClient(transport, backoff_base_s=0.001)
    assert client.complete_prompt("p").text == "ok"
    assert transport.calls == 3


def test_retries_exhausted():
    transport = MockTransport({prompt_sha256("p"): "ok"}, failures=[500] * 5)
    client = LlmClient(transport, retries=3, backoff_base_s=0.001)
    with pytest.raises(LlmError, match="retries exhausted"):
        client.complete_prompt("p")
    assert transport.calls == 3


def test_non_retryable_fails_fast():
    transport = MockTransport({prompt_sha256("p"): "ok"}, failures=[400])
    client = LlmClient(transport, backoff_base_s=0.001)
    with pytest.raises(LlmError):
        client.complete_prompt("p")
    assert transport.calls == 1


def test_unscripted_prompt_fails_without_retry():
    client, transport = scripted_client({})
    with pytest.raises(LlmError, match="not scripted"):
        client.complete_prompt("mystery")
    assert transport.calls == 1


def test_empty_completion_rejected():
    client, _ = scripted_client({prompt_sha256("p"): "   "})
    with pytest.raises(LlmError, match="empty response"):
        client.complete_prompt("p")


def test_cache_persists_across_clients(tmp_path):
    cache_path = tmp_path / "cache.jsonl"
    transcript = {prompt_sha256("p"): "r"}
    client_a, transport_a = scripted_client(transcript, cache=ResponseCache(cache_path))
    client_a.complete_prompt("p")
    client_b, transport_b = scripted_client(transcript, cache=ResponseCache(cache_path))
    response = client_b.complete_prompt("p")
    assert response.cached
    assert transport_b.calls == 0


def test_transcript_file_round_trip(tmp_path):
    transcript = {prompt_sha256("a"): "A", prompt_sha256("b"): "B"}
    path = tmp_path / "transcript.jsonl"
    write_transcript(transcript, path)
    assert load_transcript(path) == transcript


def test_concurrency_and_rate_limits_respected():
    prompts = [f"prompt {i}" for i in range(12)]
    transcript = {prompt_sha256(p): f"answer {i}" for i, p in enumerate(prompts)}
    transport = MockTransport(transcript, delay_s=0.01)
    rate = 200.0
    client = LlmClient(transport, concurrency=3, rate_per_s=rate, backoff_base_s=0.001)

    threads = [
        threading.Thread(target=client.complete_prompt, args=(p,)) for p in prompts
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert transport.calls == 12
    assert transport.max_inflight <= 3
    gaps = [
        b - a for a, b in zip(transport.send_times, transport.send_times[1:])
    ]
    assert all(gap >= (1.0 / rate) - 0.005 for gap in gaps)


def test_mock_determinism():
    transcript = {prompt_sha256("p"): "stable"}
    client_a, _ = scripted_client(transcript)
    client_b, _ = scripted_client(transcript)
    assert client_a.complete_prompt("p").text == client_b.complete_prompt("p").text
