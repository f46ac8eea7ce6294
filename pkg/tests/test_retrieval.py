import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from procbench.fixtures_gen import FixtureTransport
from procbench.retrieval import (
    CacheMissError,
    NetworkDisabledTransport,
    ProviderError,
    RetrievalError,
    SearchCache,
    SearchPayload,
    SearchRequest,
    cache_key,
    decode_download,
    execute_search,
)


def test_key_insensitive_to_arg_order():
    a = SearchRequest("google_search", {"query": "acme logo history", "gl": "us", "hl": "en"})
    b = SearchRequest("google_search", {"hl": "en", "gl": "us", "query": "acme logo history"})
    assert cache_key(a) == cache_key(b)


def test_key_applies_defaults():
    a = SearchRequest("google_search", {"query": "x"})
    b = SearchRequest("google_search", {"query": "x", "gl": "us", "hl": "en"})
    assert cache_key(a) == cache_key(b)


def test_key_sensitive_to_hl():
    a = SearchRequest("google_search", {"query": "x", "hl": "en"})
    b = SearchRequest("google_search", {"query": "x", "hl": "zh"})
    assert cache_key(a) != cache_key(b)


def test_lens_key_is_content_addressed():
    a = SearchRequest("google_lens_search", {"image_path": "a.png"}, image_digest="d1")
    b = SearchRequest("google_lens_search", {"image_path": "b_other_name.png"}, image_digest="d1")
    c = SearchRequest("google_lens_search", {"image_path": "a.png"}, image_digest="d2")
    assert cache_key(a) == cache_key(b)
    assert cache_key(a) != cache_key(c)


@given(st.text(min_size=1, max_size=50), st.sampled_from(["en", "zh", "de"]))
def test_key_stable(query, hl):
    req = SearchRequest("google_search", {"query": query, "hl": hl})
    assert cache_key(req) == cache_key(req)
    assert len(cache_key(req)) == 64


def test_fetch_requires_http_url():
    with pytest.raises(RetrievalError, match="http"):
        SearchRequest("fetch_webpage", {"url": "ftp://example.org/x"})


def test_unknown_tool_rejected():
    with pytest.raises(RetrievalError):
        SearchRequest("bing_search", {"query": "x"})


@pytest.fixture()
def corpus_transport():
    return FixtureTransport(
        {
            "search": {"acme logo history": [{"title": "Acme", "link": "https://a", "snippet": "founded 1920"}]},
            "pages": {"https://example.org/long": "Z" * 50000},
        }
    )


def test_record_then_replay_byte_identical(tmp_path, corpus_transport):
    cache = SearchCache(tmp_path, "t1")
    req = SearchRequest("google_search", {"query": "acme logo history"})
    recorded = execute_search(req, "record", cache=cache, transport=corpus_transport)

    fresh = SearchCache(tmp_path, "t1")
    replayed = execute_search(req, "replay", cache=fresh, transport=NetworkDisabledTransport())
    assert json.dumps(replayed.body, sort_keys=True) == json.dumps(recorded.body, sort_keys=True)
    assert replayed.request_key == recorded.request_key


def test_replay_never_touches_network(tmp_path, corpus_transport):
    cache = SearchCache(tmp_path, "t1")
    req = SearchRequest("google_search", {"query": "acme logo history"})
    execute_search(req, "record", cache=cache, transport=corpus_transport)

    class ExplodingTransport:
        def send(self, req):
            raise AssertionError("network touched in replay mode")

    out = execute_search(req, "replay", cache=cache, transport=ExplodingTransport())
    assert out.status == "ok"


def test_replay_miss_names_key(tmp_path):
    cache = SearchCache(tmp_path, "t1")
    req = SearchRequest("google_search", {"query": "never recorded"})
    with pytest.raises(CacheMissError) as exc:
        execute_search(req, "replay", cache=cache)
    assert cache_key(req) in str(exc.value)


def test_fetch_truncation(tmp_path, corpus_transport):
    cache = SearchCache(tmp_path, "t1")
    req = SearchRequest("fetch_webpage", {"url": "https://example.org/long", "max_chars": 100})
    payload = execute_search(req, "record", cache=cache, transport=corpus_transport)
    assert len(payload.body["text"]) <= 100


def test_download_decode(tmp_path):
    import base64
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.new("RGB", (6, 6), (9, 8, 7)).save(buf, format="PNG")
    b64 = base64.b64encode(buf.getvalue()).decode()
    transport = FixtureTransport({"downloads": {"https://img/x.png": b64}})
    cache = SearchCache(tmp_path, "t1")
    payload = execute_search(
        SearchRequest("download_image", {"url": "https://img/x.png"}), "record", cache=cache, transport=transport
    )
    data = decode_download(payload)
    img = Image.open(io.BytesIO(data))
    assert img.size == (6, 6)


def test_fixture_transport_unknown_download_errors():
    transport = FixtureTransport({})
    with pytest.raises(ProviderError):
        transport.send(SearchRequest("download_image", {"url": "https://nowhere/x.png"}))


def test_network_disabled_transport_raises():
    with pytest.raises(ProviderError, match="network disabled"):
        NetworkDisabledTransport().send(SearchRequest("google_search", {"query": "x"}))


def test_record_payload_carries_no_timestamp(tmp_path, corpus_transport):
    cache = SearchCache(tmp_path, "t1")
    req = SearchRequest("google_search", {"query": "acme logo history"})
    execute_search(req, "record", cache=cache, transport=corpus_transport)
    stored = SearchCache(tmp_path, "t1").get(cache_key(req))
    assert stored is not None
    assert stored.fetched_at == ""


def test_payload_roundtrip_dict():
    p = SearchPayload("k", "ok", {"results": []}, "")
    assert SearchPayload.from_dict(p.to_dict()).body == {"results": []}
