"""The researcher's four read-only tools and the plain-text call protocol.

A call is committed only when a fenced block contains
``conducting <tool>(key=value, ...)`` followed by a line carrying the
literal ``<CALL>`` token::

    ```function call
    conducting node_search(search_query="LLM Compression")
    Special token: <CALL>
    ```
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from ._text import fenced_blocks
from .embed import Embedder, EmbeddingError, VectorIndex
from .graph import MotivGraph
from .llm import TokenBucket, TransportError, http_get_json

logger = logging.getLogger(__name__)

CALL_TOKEN = "<CALL>"
TOOL_NAMES = ("node_search", "node_relation", "get_random_nodes", "semantic_search")
NO_RESULTS = "No results."
DEFAULT_TOP_K = 10
DEFAULT_RANDOM = 10
LITERATURE_LIMIT = 20

# wire parameter name -> canonical argument name, per tool
_PARAMS = {
    "node_search": {"search_query": "query", "entity_name_list": "query", "query": "query", "top_k": "top_k"},
    "node_relation": {"entity_name_list": "names", "names": "names"},
    "get_random_nodes": {"number": "number"},
    "semantic_search": {"search_query": "query", "query": "query"},
}
_PRIMARY = {"node_search": "query", "node_relation": "names", "get_random_nodes": "number", "semantic_search": "query"}
_ALIASES = {"get_random_node": "get_random_nodes"}
# canonical argument -> wire name used when rendering
_WIRE = {
    "node_search": {"query": "search_query", "top_k": "top_k"},
    "node_relation": {"names": "entity_name_list"},
    "get_random_nodes": {"number": "number"},
    "semantic_search": {"query": "search_query"},
}

_CONDUCT = re.compile(r"conducting\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(", re.IGNORECASE)


class ToolParseError(ValueError):
    pass


@dataclass(frozen=True)
class ToolCall:
    tool: str
    args: dict[str, Any]

    def __post_init__(self) -> None:
        if self.tool not in TOOL_NAMES:
            raise ToolParseError(f"unknown tool {self.tool!r}")


@dataclass
class ToolResult:
    tool: str
    rendered: str
    payload: Any = None
    error: str | None = None

    def __post_init__(self) -> None:
        if not self.rendered.strip():
            self.rendered = NO_RESULTS


def _matching_paren(text: str, start: int) -> int:
    """Index of the ``)`` closing the ``(`` just before ``start``; -1 if none."""
    depth, quote, i = 1, None, start
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return -1


def _literal(node: ast.AST):
    value = ast.literal_eval(node)
    if isinstance(value, bool) or not isinstance(value, (str, int, list, tuple)):
        raise ValueError(f"unsupported argument value {value!r}")
    if isinstance(value, (list, tuple)):
        if not all(isinstance(v, (str, int)) and not isinstance(v, bool) for v in value):
            raise ValueError("list arguments may hold only strings or integers")
        value = list(value)
    return value


def _canonical_args(tool: str, raw: dict[str, Any]) -> dict[str, Any]:
    params = _PARAMS[tool]
    args: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in params:
            raise ToolParseError(f"{tool} does not accept parameter {key!r}")
        name = params[key]
        if name in args:
            raise ToolParseError(f"{tool} got {name!r} twice")
        args[name] = value
    if tool in ("node_search", "semantic_search"):
        q = args.get("query")
        if isinstance(q, list):
            q = " ".join(str(v) for v in q)
        if not isinstance(q, str) or not q.strip():
            raise ToolParseError(f"{tool} needs a non-empty text query")
        args["query"] = q
        if "top_k" in args and (not isinstance(args["top_k"], int) or args["top_k"] < 1):
            raise ToolParseError("top_k must be a positive integer")
    elif tool == "node_relation":
        names = args.get("names")
        if isinstance(names, str):
            names = [names]
        if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
            raise ToolParseError("node_relation needs a list of node names")
        args["names"] = names
    elif tool == "get_random_nodes":
        number = args.get("number", DEFAULT_RANDOM)
        if not isinstance(number, int) or number < 1:
            raise ToolParseError("number must be a positive integer")
        args["number"] = number
    return args


def _parse_invocation(tool: str, arg_text: str) -> ToolCall:
    try:
        expr = ast.parse(f"f({arg_text})", mode="eval").body
    except (SyntaxError, ValueError, RecursionError, MemoryError) as exc:
        raise ToolParseError(f"malformed arguments for {tool}: {exc}") from None
    if not isinstance(expr, ast.Call) or any(isinstance(a, ast.Starred) for a in expr.args):
        raise ToolParseError(f"malformed arguments for {tool}")
    raw: dict[str, Any] = {}
    try:
        if len(expr.args) > 1:
            raise ToolParseError(f"{tool} takes at most one positional argument")
        if expr.args:
            raw[_WIRE[tool][_PRIMARY[tool]]] = _literal(expr.args[0])
        for kw in expr.keywords:
            if kw.arg is None:
                raise ToolParseError("** arguments are not allowed")
            if kw.arg in raw:
                raise ToolParseError(f"duplicate parameter {kw.arg!r}")
            raw[kw.arg] = _literal(kw.value)
    except (ValueError, SyntaxError, TypeError, RecursionError, MemoryError) as exc:
        raise ToolParseError(f"malformed arguments for {tool}: {exc}") from None
    return ToolCall(tool, _canonical_args(tool, raw))


def parse_tool_call(llm_output: str) -> ToolCall | None:
    """First committed tool call in ``llm_output``.

    Returns None when no fenced call is followed by ``<CALL>``. Raises
    :class:`ToolParseError` for a committed call naming an unknown tool or
    carrying malformed arguments.
    """
    if not isinstance(llm_output, str):
        return None
    for _, body, _, end in fenced_blocks(llm_output):
        m = _CONDUCT.search(body)
        if m is None:
            continue
        close = _matching_paren(body, m.end())
        if close < 0:
            # Unbalanced call text: treat as a commit only if the token is present.
            if CALL_TOKEN in body[m.end():]:
                raise ToolParseError("unterminated argument list")
            continue
        committed = CALL_TOKEN in body[close + 1:]
        if not committed:
            # The token may also sit on the first line after the closing fence.
            trailing = llm_output[end:].strip().split("\n", 1)[0]
            committed = CALL_TOKEN in trailing
        if not committed:
            continue
        name = m.group(1)
        tool = _ALIASES.get(name, name)
        if tool not in TOOL_NAMES:
            raise ToolParseError(f"unknown tool {name!r}")
        return _parse_invocation(tool, body[m.end():close])
    return None


def render_tool_call(call: ToolCall) -> str:
    """Wire-format text for ``call``; parsing it back yields an equal ToolCall."""
    parts = [f"{_WIRE[call.tool][k]}={json.dumps(v, ensure_ascii=False)}" for k, v in call.args.items()]
    return f"```function call\nconducting {call.tool}({', '.join(parts)})\nSpecial token: {CALL_TOKEN}\n```"


# -- literature -----------------------------------------------------------


@dataclass(frozen=True)
class Paper:
    title: str
    abstract: str = ""
    authors: tuple[str, ...] = ()
    year: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "Paper":
        authors = d.get("authors") or ()
        authors = tuple(a.get("name", "") if isinstance(a, dict) else str(a) for a in authors)
        year = d.get("year")
        return cls(d.get("title") or "", d.get("abstract") or "", authors, int(year) if year else None)

    def to_dict(self) -> dict:
        return {"title": self.title, "abstract": self.abstract, "authors": list(self.authors), "year": self.year}

    @property
    def citation(self) -> str:
        first = self.authors[0].split()[-1] if self.authors and self.authors[0].strip() else "Unknown"
        return f"({first} et al., {self.year if self.year else 'n.d.'})"


class LiteratureSource(Protocol):
    def search(self, query: str, limit: int = LITERATURE_LIMIT) -> list[Paper]: ...


class StubLiterature:
    """Fixture-backed source: returns the canned records for every query."""

    def __init__(self, records: list[dict | Paper]):
        self.records = [r if isinstance(r, Paper) else Paper.from_dict(r) for r in records]
        self.calls = 0

    def search(self, query: str, limit: int = LITERATURE_LIMIT) -> list[Paper]:
        self.calls += 1
        return self.records[:limit]


class HTTPLiterature:
    """GET ``endpoint?query=...&limit=...``; records under ``data`` or at top level."""

    def __init__(
        self,
        endpoint: str = "https://api.semanticscholar.org/graph/v1/paper/search",
        *,
        api_key_env: str | None = "S2_API_KEY",
        key_header: str | None = "x-api-key",
        rate_limit: float | None = 60.0,
        timeout: float = 30.0,
        fields: str = "title,abstract,authors,year",
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.key_header = key_header
        self.timeout = timeout
        self.fields = fields
        self.calls = 0
        self._bucket = TokenBucket(rate_limit) if rate_limit else None

    def search(self, query: str, limit: int = LITERATURE_LIMIT) -> list[Paper]:
        if self._bucket:
            self._bucket.acquire()
        self.calls += 1
        data = http_get_json(
            self.endpoint,
            {"query": query, "limit": limit, "fields": self.fields},
            timeout=self.timeout,
            api_key_env=self.api_key_env,
            key_header=self.key_header,
        )
        rows = data.get("data", []) if isinstance(data, dict) else data
        return [Paper.from_dict(r) for r in (rows or [])][:limit]


class CachedLiterature:
    """Per-query cache in front of a source, optionally persisted as JSON files
    named by the SHA-256 of the query."""

    def __init__(self, source: LiteratureSource, cache_dir: str | Path | None = None):
        self.source = source
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._memory: dict[str, list[Paper]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _path(self, query: str) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / (hashlib.sha256(query.encode("utf-8")).hexdigest() + ".json")

    def search(self, query: str, limit: int = LITERATURE_LIMIT) -> list[Paper]:
        with self._guard:
            lock = self._locks.setdefault(query, threading.Lock())
        with lock:
            if query in self._memory:
                return self._memory[query][:limit]
            path = self._path(query)
            if path is not None and path.exists():
                data = json.loads(path.read_text(encoding="utf-8"))
                papers = [Paper.from_dict(r) for r in data["results"]]
            else:
                papers = self.source.search(query, limit)
                if path is not None:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(
                        json.dumps({"query": query, "results": [p.to_dict() for p in papers]}, ensure_ascii=False, indent=1),
                        encoding="utf-8",
                    )
            self._memory[query] = papers
            return papers[:limit]


# -- tools ---------------------------------------------------------------


@dataclass
class Toolbox:
    """Read-only tools over a graph snapshot; :meth:`dispatch` runs parsed calls."""

    graph: MotivGraph
    index: VectorIndex
    embedder: Embedder
    literature: LiteratureSource | None = None
    top_k: int = DEFAULT_TOP_K
    rng_seed: int = 0
    calls: int = field(default=0, init=False)

    def node_search(self, query: str, top_k: int | None = None) -> ToolResult:
        top_k = top_k or self.top_k
        if len(self.index) == 0:
            return ToolResult("node_search", NO_RESULTS, [])
        try:
            hits = self.index.top_k(self.embedder.embed(query), top_k)
        except (EmbeddingError, TransportError) as exc:
            logger.warning("node_search failed: %s", exc)
            return ToolResult("node_search", "Sorry, the search failed; please try another query.", [], str(exc))
        rows = []
        for h in hits:
            if h.node_id in self.graph:
                n = self.graph.node(h.node_id)
                rows.append({"name": n.name, "kind": n.kind.value, "score": round(h.score, 6)})
        text = "\n".join(f"{i}. {r['name']} ({r['kind']})" for i, r in enumerate(rows, 1))
        return ToolResult("node_search", text or NO_RESULTS, rows)

    def node_relation(self, names: list[str]) -> ToolResult:
        sections, payload = [], []
        for name in names:
            node = self.graph.find(None, name)
            if node is None:
                sections.append(f"not found: {name}")
                payload.append({"name": name, "found": False})
                continue
            rels = []
            for nb in self.graph.neighbors(node.id):
                src, dst = (node, nb.node) if nb.direction == "out" else (nb.node, node)
                rels.append(f"({src.name}) -[{nb.edge_kind.label}]-> ({dst.name})")
            lines = [f"{node.name} ({node.kind.value}): {node.description}"]
            lines += ["Relations:"] + [f"  {r}" for r in rels] if rels else ["Relations: none"]
            sections.append("\n".join(lines))
            payload.append({"name": node.name, "kind": node.kind.value, "found": True,
                            "description": node.description, "relations": rels})
        return ToolResult("node_relation", "\n\n".join(sections), payload)

    def get_random_nodes(self, number: int = DEFAULT_RANDOM, rng_seed: int | None = None) -> ToolResult:
        if number < 1:
            raise ValueError("number must be >= 1")
        seed = self.rng_seed if rng_seed is None else rng_seed
        triples = self.graph.list_triples(limit=number, rng_seed=seed)
        if not triples:
            return ToolResult("get_random_nodes", NO_RESULTS, [])
        blocks, payload = [], []
        for i, t in enumerate(triples, 1):
            p, c, s = (self.graph.node(x) for x in (t.problem, t.challenge, t.solution))
            blocks.append(
                f"{i}. Problem: {p.name}: {p.description}\n"
                f"   Challenge: {c.name}: {c.description}\n"
                f"   Solution: {s.name}: {s.description}"
            )
            payload.append({"problem": p.name, "challenge": c.name, "solution": s.name})
        text = "\n".join(blocks)
        if len(triples) < number:
            text += f"\n(only {len(triples)} triple(s) available; the graph is exhausted)"
        return ToolResult("get_random_nodes", text, payload)

    def semantic_search(self, query: str) -> ToolResult:
        advice = "If the result is empty, please adjust your search_query or retry."
        if self.literature is None:
            return ToolResult("semantic_search", "Literature search is not configured. " + advice, [], "unconfigured")
        try:
            papers = self.literature.search(query, LITERATURE_LIMIT)[:LITERATURE_LIMIT]
        except (TransportError, OSError, ValueError) as exc:
            logger.warning("semantic_search failed: %s", exc)
            return ToolResult("semantic_search", f"The literature search failed. {advice}", [], str(exc))
        if not papers:
            return ToolResult("semantic_search", f"{NO_RESULTS} {advice}", [])
        entries = []
        for i, p in enumerate(papers, 1):
            authors = ", ".join(p.authors) if p.authors else "Unknown"
            entries.append(f"{i}. {p.title} {p.citation}\n   Authors: {authors}\n   Abstract: {p.abstract or 'n/a'}")
        return ToolResult("semantic_search", "\n".join(entries), [p.to_dict() for p in papers])

    def dispatch(self, call: ToolCall) -> ToolResult:
        self.calls += 1
        if call.tool == "node_search":
            return self.node_search(call.args["query"], call.args.get("top_k"))
        if call.tool == "node_relation":
            return self.node_relation(call.args["names"])
        if call.tool == "get_random_nodes":
            # Distinct but reproducible draws within one session.
            return self.get_random_nodes(call.args["number"], rng_seed=self.rng_seed * 1_000_003 + self.calls)
        return self.semantic_search(call.args["query"])
