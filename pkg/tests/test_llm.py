import json

import httpx
import pytest

from insightmem.llm import (CacheMiss, ChatRequest, LLMError, LLMTimeout, MalformedResponse, NoScript,
                            RateLimited, RemoteChatLLM, ReplayCache, ScriptedLLM, TransportError,
                            request_digest)


def ok_body(text="hello"):
    return {"choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
            "usage": {"total_tokens": 3}}


def remote(handler, **kw):
    sleeps = []
    llm = RemoteChatLLM("http://llm.local/v1", transport=httpx.MockTransport(handler), sleep=sleeps.append, **kw)
    return llm, sleeps


def test_scripted_rule_deterministic():
    llm = ScriptedLLM().add_rule("GENERAL RULES", "GENERAL RULES:\nADD 1: x")
    req = ChatRequest.user("... GENERAL RULES ...", "m")
    assert llm.complete(req).content == llm.complete(req).content == "GENERAL RULES:\nADD 1: x"
    assert llm.calls == 2


def test_scripted_first_match_wins():
    llm = ScriptedLLM().add_rule("a", "first").add_rule(lambda p: True, "second")
    assert llm.complete(ChatRequest.user("abc", "m")).content == "first"
    assert llm.complete(ChatRequest.user("xyz", "m")).content == "second"


def test_no_script_names_digest():
    req = ChatRequest.user("nothing matches", "m")
    with pytest.raises(NoScript, match=request_digest(req)[:16]):
        ScriptedLLM().complete(req)


def test_two_429_then_success_with_backoff():
    calls = []

    def handler(request):
        calls.append(json.loads(request.read()))
        if len(calls) <= 2:
            return httpx.Response(429)
        return httpx.Response(200, json=ok_body("fine"))

    llm, sleeps = remote(handler)
    resp = llm.complete(ChatRequest.user("hi", "gpt-x"))
    assert resp.content == "fine"
    assert llm.attempts == 3
    assert sleeps == [1.0, 2.0]
    assert calls[0]["model"] == "gpt-x" and calls[0]["messages"] == [{"role": "user", "content": "hi"}]


def test_exhausted_retries_raise_last_error():
    llm, sleeps = remote(lambda r: httpx.Response(503))
    with pytest.raises(TransportError):
        llm.complete(ChatRequest.user("hi", "m"))
    assert llm.attempts == 5
    assert sleeps == [1.0, 2.0, 4.0, 8.0]


def test_rate_limit_error_type():
    llm, _ = remote(lambda r: httpx.Response(429), max_attempts=1)
    with pytest.raises(RateLimited):
        llm.complete(ChatRequest.user("hi", "m"))


def test_timeout_retried():
    state = {"n": 0}

    def handler(request):
        state["n"] += 1
        if state["n"] == 1:
            raise httpx.ReadTimeout("slow", request=request)
        return httpx.Response(200, json=ok_body())

    llm, sleeps = remote(handler)
    assert llm.complete(ChatRequest.user("hi", "m")).content == "hello"
    assert sleeps == [1.0]


def test_timeout_exhausted_is_typed():
    def handler(request):
        raise httpx.ConnectTimeout("slow", request=request)

    llm, _ = remote(handler, max_attempts=2)
    with pytest.raises(LLMTimeout):
        llm.complete(ChatRequest.user("hi", "m"))


def test_client_errors_not_retried():
    llm, sleeps = remote(lambda r: httpx.Response(400, text="bad"))
    with pytest.raises(LLMError):
        llm.complete(ChatRequest.user("hi", "m"))
    assert llm.attempts == 1 and sleeps == []


@pytest.mark.parametrize("body", [{}, {"choices": []}, {"choices": [{"message": {"content": None},
                                                                    "finish_reason": "stop"}]}])
def test_malformed_response(body):
    llm, _ = remote(lambda r: httpx.Response(200, json=body))
    with pytest.raises(MalformedResponse):
        llm.complete(ChatRequest.user("hi", "m"))


def test_api_key_from_environment(monkeypatch):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json=ok_body())

    monkeypatch.setenv("MY_CHAT_KEY", "sk-abc")
    llm, _ = remote(handler, api_key_env="MY_CHAT_KEY")
    llm.complete(ChatRequest.user("hi", "m"))
    assert seen["auth"] == "Bearer sk-abc"


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", ({"role": "system", "content": "x"},))
    with pytest.raises(ValueError):
        ChatRequest.user("hi", "m", temperature=-1)
    with pytest.raises(ValueError):
        ChatRequest.user("  ", "m")


def test_digest_ignores_whitespace_but_not_temperature():
    a = ChatRequest.user("heat  the\nsoup ", "m")
    b = ChatRequest.user("heat the soup", "m")
    c = ChatRequest.user("heat the soup", "m", temperature=0.7)
    assert request_digest(a) == request_digest(b)
    assert request_digest(b) != request_digest(c)


def test_record_then_replay(tmp_path):
    inner = ScriptedLLM().add_rule("q", "answer")
    rec = ReplayCache(inner, tmp_path, "record")
    req = ChatRequest.user("q?", "m")
    first = rec.complete(req)
    assert inner.calls == 1 and rec.misses == 1
    replay = ReplayCache(inner, tmp_path, "replay")
    assert replay.complete(req) == first
    assert inner.calls == 1 and replay.hits == 1
    entry = json.loads(rec.path_for(req).read_text())
    assert entry["request"]["messages"][0]["content"] == "q?"


def test_replay_miss(tmp_path):
    with pytest.raises(CacheMiss):
        ReplayCache(ScriptedLLM(), tmp_path, "replay").complete(ChatRequest.user("unseen", "m"))


def test_temperature_variants_get_separate_files(tmp_path):
    inner = ScriptedLLM().add_rule("q", "answer")
    cache = ReplayCache(inner, tmp_path, "record")
    cache.complete(ChatRequest.user("q", "m"))
    cache.complete(ChatRequest.user("q", "m", temperature=0.5))
    assert len(list(tmp_path.glob("*.json"))) == 2
    assert inner.calls == 2


def test_record_leaves_no_temp_files(tmp_path):
    cache = ReplayCache(ScriptedLLM().add_rule("q", "a"), tmp_path, "record")
    for i in range(5):
        cache.complete(ChatRequest.user(f"q{i}", "m"))
    assert sorted(p.suffix for p in tmp_path.iterdir()) == [".json"] * 5


def test_unknown_cache_mode(tmp_path):
    with pytest.raises(ValueError):
        ReplayCache(ScriptedLLM(), tmp_path, "sometimes")
