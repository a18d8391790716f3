"""Extract (problem, challenge, solution) triples from papers and ingest them."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ._text import first_json_block, render
from .embed import Embedder, VectorIndex
from .graph import EdgeKind, MotivGraph, NodeKind
from .llm import DEFAULT_TEMPERATURE, ChatMessage, ChatRequest, LLMError

logger = logging.getLogger(__name__)

# Word-count ranges per kind (inclusive).
NAME_WORDS = {
    NodeKind.PROBLEM: (3, 7),
    NodeKind.CHALLENGE: (5, 8),
    NodeKind.SOLUTION: (7, 10),
}

WORD_COUNT = "word-count"
STRUCTURE = "structure-pattern"


class ExtractionError(Exception):
    def __init__(self, message: str, raw_outputs: list[str] | None = None):
        super().__init__(message)
        self.raw_outputs = raw_outputs or []


@dataclass(frozen=True)
class Entity:
    name: str
    description: str


@dataclass(frozen=True)
class CandidateTriple:
    problem: Entity
    challenge: Entity
    solution: Entity
    paper: str

    def __post_init__(self) -> None:
        for role in ("problem", "challenge", "solution"):
            ent = getattr(self, role)
            if not ent.name.strip() or not ent.description.strip():
                raise ValueError(f"{role} name and description must be non-empty")


@dataclass(frozen=True)
class NamingViolation:
    kind: NodeKind
    rule: str
    detail: str
    name: str = ""


def validate_name(kind: NodeKind | str, name: str) -> list[NamingViolation]:
    """Check a node name against its kind's word-count and structure rules."""
    kind = NodeKind.parse(kind)
    words = name.split()
    lo, hi = NAME_WORDS[kind]
    out = []
    if not lo <= len(words) <= hi:
        out.append(NamingViolation(kind, WORD_COUNT, f"{len(words)} words, expected {lo}-{hi}", name))
    if kind is NodeKind.CHALLENGE:
        lowered = [w.lower() for w in words]
        if not any(w == "in" for w in lowered[1:-1]):
            out.append(
                NamingViolation(kind, STRUCTURE, "expected '<difficulty> in <context>'", name)
            )
    return out


def _entity(obj) -> Entity:
    if not isinstance(obj, dict):
        raise ValueError("entity must be an object with name and description")
    name, desc = obj.get("name"), obj.get("description")
    if not isinstance(name, str) or not isinstance(desc, str):
        raise ValueError("entity name and description must be strings")
    return Entity(" ".join(name.split()), desc.strip())


def parse_triples(text: str, paper: str) -> list[CandidateTriple]:
    """Parse the extractor's fenced JSON; raises ValueError on malformed output."""
    value, reason = first_json_block(text)
    if reason:
        raise ValueError(reason)
    items = value.get("triples") if isinstance(value, dict) else value
    if not isinstance(items, list):
        raise ValueError("expected a list of triples")
    out: list[CandidateTriple] = []
    seen = set()
    for item in items:
        if not isinstance(item, dict):
            raise ValueError("each triple must be an object")
        solution = item.get("solution", item.get("method"))
        triple = CandidateTriple(_entity(item.get("problem")), _entity(item.get("challenge")), _entity(solution), paper)
        key = tuple(" ".join(e.name.split()).casefold() for e in (triple.problem, triple.challenge, triple.solution))
        if key in seen:
            continue
        seen.add(key)
        out.append(triple)
    return out


def extract_triples(paper_text: str, llm, *, paper: str = "", retries: int = 2) -> list[CandidateTriple]:
    """Ask the extractor for triples, re-asking up to ``retries`` times on bad output."""
    if not paper_text or not paper_text.strip():
        raise ValueError("paper text is empty")
    messages = [ChatMessage("user", render("extractor", paper=paper_text.strip()))]
    raw: list[str] = []
    for attempt in range(retries + 1):
        req = ChatRequest(list(messages), temperature=DEFAULT_TEMPERATURE["extractor"], tag=f"extract:{paper}")
        try:
            reply = llm.complete(req)
        except LLMError as exc:
            raise ExtractionError(f"extractor failed for {paper or 'paper'}: {exc}", raw) from exc
        raw.append(reply)
        try:
            return parse_triples(reply, paper)
        except ValueError as exc:
            logger.info("unparseable extraction for %s (attempt %d): %s", paper, attempt + 1, exc)
            messages += [
                ChatMessage("assistant", reply),
                ChatMessage("user", f"Your answer could not be parsed ({exc}). Reply again with only the fenced JSON block."),
            ]
    raise ExtractionError(f"no parseable triples for {paper or 'paper'} after {retries + 1} attempts", raw)


@dataclass
class IngestionReport:
    paper: str
    triples: int = 0
    nodes_created: list[str] = field(default_factory=list)
    nodes_merged: list[str] = field(default_factory=list)
    edges: list[str] = field(default_factory=list)
    violations: list[NamingViolation] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violations"] = [
            {"kind": v.kind.value, "rule": v.rule, "detail": v.detail, "name": v.name} for v in self.violations
        ]
        return d


def ingest_triples(
    graph: MotivGraph,
    index: VectorIndex,
    embedder: Embedder,
    triples: list[CandidateTriple],
    paper: str,
) -> IngestionReport:
    """Add triples to the graph and index; all-or-nothing per call."""
    report = IngestionReport(paper=paper, triples=len(triples))
    state = graph.checkpoint()
    added_to_index: list[str] = []
    try:
        for t in triples:
            ids = []
            for kind, ent in ((NodeKind.PROBLEM, t.problem), (NodeKind.CHALLENGE, t.challenge), (NodeKind.SOLUTION, t.solution)):
                report.violations.extend(validate_name(kind, ent.name))
                before = graph.node_count
                node_id = graph.add_node(kind, ent.name, ent.description, paper)
                if graph.node_count > before:
                    report.nodes_created.append(node_id)
                elif node_id not in report.nodes_created and node_id not in report.nodes_merged:
                    report.nodes_merged.append(node_id)
                if node_id not in index:
                    index.add(node_id, embedder.embed(graph.node(node_id).description), graph.node(node_id).name)
                    added_to_index.append(node_id)
                ids.append(node_id)
            p, c, s = ids
            for eid in (graph.add_edge(EdgeKind.PROBLEM_CHALLENGE, p, c), graph.add_edge(EdgeKind.CHALLENGE_SOLUTION, c, s)):
                if eid not in report.edges:
                    report.edges.append(eid)
    except Exception:
        graph.restore(state)
        for node_id in added_to_index:
            index.remove(node_id)
        raise
    return report


def ingest_paper(
    graph: MotivGraph,
    index: VectorIndex,
    embedder: Embedder,
    paper_text: str,
    paper: str,
    llm,
    *,
    retries: int = 2,
) -> IngestionReport:
    triples = extract_triples(paper_text, llm, paper=paper, retries=retries)
    return ingest_triples(graph, index, embedder, triples, paper)


# Section keys forwarded to the extractor from a sectioned paper file.
INTRO_KEYS = ("introduction", "intro")
SOLUTION_KEYS = ("method", "methods", "methodology", "approach", "solution", "model")


def load_paper(path: str | Path) -> tuple[str, str]:
    """Read a corpus file and return ``(paper id, text for the extractor)``.

    ``.json`` files may hold ``{"id", "title", "sections": {...}}``; only the
    introduction and method-like sections are kept. Anything else is read
    as plain text.
    """
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    if path.suffix.lower() != ".json":
        return path.stem, raw
    data = json.loads(raw)
    paper_id = str(data.get("id") or path.stem)
    sections = {str(k).lower(): v for k, v in (data.get("sections") or {}).items()}
    parts = []
    if data.get("title"):
        parts.append(f"Title: {data['title']}")
    for heading, keys in (("Introduction", INTRO_KEYS), ("Method", SOLUTION_KEYS)):
        for key in keys:
            if sections.get(key):
                parts.append(f"## {heading}\n{sections[key]}")
                break
    if not sections and data.get("text"):
        parts.append(str(data["text"]))
    return paper_id, "\n\n".join(parts)
