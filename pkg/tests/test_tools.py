import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import index_for, serve, small_graph
from motivkg.embed import HashEmbedder
from motivkg.tools import (
    NO_RESULTS,
    CachedLiterature,
    HTTPLiterature,
    StubLiterature,
    ToolCall,
    ToolParseError,
    Toolbox,
    parse_tool_call,
    render_tool_call,
)

RECORDS = [
    {"title": "Critique loops", "abstract": "Revision with feedback.", "authors": [{"name": "Ann Lee"}, {"name": "Bo Kim"}], "year": 2023},
    {"title": "Distillation", "abstract": "", "authors": ["Cy Diaz"], "year": 2021},
]


def call_text(inner: str, token: str = "Special token: <CALL>") -> str:
    return f"Thinking.\n```function call\nconducting {inner}\n{token}\n```"


@pytest.fixture
def box(graph, embedder):
    return Toolbox(graph, index_for(graph, embedder), embedder, StubLiterature(RECORDS), top_k=3, rng_seed=1)


@pytest.mark.parametrize(
    "text,expected",
    [
        (call_text('node_search(search_query="x y")'), ToolCall("node_search", {"query": "x y"})),
        (call_text("node_search('x', top_k=2)"), ToolCall("node_search", {"query": "x", "top_k": 2})),
        (call_text('node_relation(entity_name_list="A")'), ToolCall("node_relation", {"names": ["A"]})),
        (call_text("get_random_node(number=3)"), ToolCall("get_random_nodes", {"number": 3})),
        (call_text("get_random_nodes()"), ToolCall("get_random_nodes", {"number": 10})),
        (call_text('semantic_search(search_query="q")', "special token:<CALL>"), ToolCall("semantic_search", {"query": "q"})),
        ('```function call\nconducting semantic_search(search_query="q")\n```\n<CALL>', ToolCall("semantic_search", {"query": "q"})),
        (call_text('node_search(search_query="a)b")'), ToolCall("node_search", {"query": "a)b"})),
    ],
)
def test_parse_variants(text, expected):
    assert parse_tool_call(text) == expected


@pytest.mark.parametrize(
    "text",
    [
        call_text('node_search(search_query="x")', "Special token:"),
        'conducting node_search(search_query="x") <CALL>',  # not fenced
        "```python\nprint('hello')\n```\n<CALL>",
        "plain text",
    ],
)
def test_uncommitted_or_absent_calls_return_none(text):
    assert parse_tool_call(text) is None


@pytest.mark.parametrize(
    "inner",
    [
        'delete_graph(all=True)',
        'node_search(search_query="")',
        "node_search(search_query=foo)",
        "get_random_nodes(number=-1)",
        "get_random_nodes(number=True)",
        'node_search(bogus="x")',
        'node_search("a", "b")',
        'node_search(search_query="a", entity_name_list="b")',
        "node_relation(entity_name_list=[1.5])",
        'node_search(search_query="x"',
    ],
)
def test_malformed_committed_calls_raise(inner):
    with pytest.raises(ToolParseError):
        parse_tool_call(call_text(inner))


def test_first_committed_call_wins():
    text = call_text('node_search(search_query="a")', "no token") + "\n" + call_text('semantic_search(search_query="b")')
    assert parse_tool_call(text).tool == "semantic_search"


_text = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=30).filter(lambda s: s.strip())


@settings(max_examples=200, deadline=None)
@given(
    st.one_of(
        st.builds(lambda q: ToolCall("node_search", {"query": q}), _text),
        st.builds(lambda q: ToolCall("semantic_search", {"query": q}), _text),
        st.builds(lambda ns: ToolCall("node_relation", {"names": ns}), st.lists(_text, min_size=1, max_size=4)),
        st.builds(lambda n: ToolCall("get_random_nodes", {"number": n}), st.integers(1, 50)),
    )
)
def test_render_parse_roundtrip(call):
    assert parse_tool_call(render_tool_call(call)) == call


def test_node_search_renders_names_and_kinds(box):
    r = box.node_search("critique and revision feedback")
    lines = r.rendered.splitlines()
    assert len(lines) == 3 and lines[0].startswith("1. ")
    assert all(line.endswith(("(Problem)", "(Challenge)", "(Solution)")) for line in lines)
    assert len(r.payload) == 3


def test_node_relation_found_and_missing(box):
    r = box.node_relation(["Suboptimal initial output generation in language models", "Nope"])
    assert "-[PROBLEM_CHALLENGE]->" in r.rendered and "-[CHALLENGE_SOLUTION]->" in r.rendered
    assert "not found: Nope" in r.rendered
    assert [p["found"] for p in r.payload] == [True, False]


def test_random_nodes_reproducible_and_exhaustion(box):
    assert box.get_random_nodes(2, rng_seed=4).rendered == box.get_random_nodes(2, rng_seed=4).rendered
    r = box.get_random_nodes(9, rng_seed=4)
    assert len(r.payload) == 4 and "exhausted" in r.rendered


def test_dispatch_gives_distinct_reproducible_draws(graph, embedder):
    def draws(seed):
        b = Toolbox(graph, index_for(graph, embedder), embedder, rng_seed=seed)
        return [b.dispatch(ToolCall("get_random_nodes", {"number": 2})).payload for _ in range(4)]

    assert draws(5) == draws(5)


def test_semantic_search_formats_citations(box):
    r = box.semantic_search("feedback")
    assert "1. Critique loops (Lee et al., 2023)" in r.rendered
    assert "Authors: Ann Lee, Bo Kim" in r.rendered
    assert "Abstract: n/a" in r.rendered


def test_empty_results_and_unconfigured(graph, embedder):
    b = Toolbox(graph, index_for(graph, embedder), embedder, StubLiterature([]))
    assert b.semantic_search("x").rendered.startswith(NO_RESULTS)
    assert "adjust your search_query" in b.semantic_search("x").rendered
    assert "not configured" in Toolbox(graph, index_for(graph, embedder), embedder).semantic_search("x").rendered


def test_cached_literature_hits_source_once(tmp_path):
    stub = StubLiterature(RECORDS)
    cache = CachedLiterature(stub, tmp_path)
    assert cache.search("q") == cache.search("q")
    assert stub.calls == 1
    fresh = CachedLiterature(StubLiterature([]), tmp_path)
    assert [p.title for p in fresh.search("q")] == ["Critique loops", "Distillation"]


def test_http_literature_uses_key_header(monkeypatch):
    monkeypatch.setenv("S2_TEST_KEY", "k123")
    seen = []

    def handler(method, path, body, headers):
        seen.append((path, headers.get("x-api-key")))
        return 200, {"data": RECORDS}

    with serve(handler) as url:
        papers = HTTPLiterature(url + "/search", api_key_env="S2_TEST_KEY", rate_limit=None).search("llm compression", 5)
    assert [p.year for p in papers] == [2023, 2021]
    assert seen[0][1] == "k123" and "query=llm+compression" in seen[0][0]


def test_tool_failures_render_advice(graph, embedder):
    class Broken:
        def search(self, query, limit=20):
            raise OSError("network down")

    b = Toolbox(graph, index_for(graph, embedder), embedder, Broken())
    r = b.semantic_search("x")
    assert r.error and "retry" in r.rendered
    assert json.dumps(r.payload) == "[]"
