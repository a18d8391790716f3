"""Embedding-guided, LLM-adjudicated parent node addition for problems and challenges.

One pass works through a working set of same-level nodes. Each focal node
is compared against its k nearest neighbours that are still in the set; the
model decides whether they share a parent. Merged children and the focal
node leave the set, so every node is considered at most once per pass.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass, field

from ._text import first_json_block, render
from .embed import Embedder, VectorIndex
from .graph import EdgeKind, GraphError, MotivGraph, NodeKind, normalize_name
from .llm import DEFAULT_TEMPERATURE, ChatMessage, ChatRequest, LLMError

logger = logging.getLogger(__name__)

DEFAULT_K = 5


class HierarchyError(Exception):
    pass


@dataclass(frozen=True)
class MergeDecision:
    merge: bool
    parent_name: str = ""
    parent_description: str = ""
    children: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.merge and not (self.parent_name.strip() and self.parent_description.strip() and self.children):
            raise ValueError("a merge needs a parent name, description and children")


NO_MERGE = MergeDecision(False)


@dataclass
class PassReport:
    kind: NodeKind
    level: int
    parents_created: int = 0
    edges_created: int = 0
    focal_sequence: list[str] = field(default_factory=list)
    parents: list[str] = field(default_factory=list)
    merged: dict[str, list[str]] = field(default_factory=dict)  # parent id -> children
    merge_focal: dict[str, str] = field(default_factory=dict)  # parent id -> focal that proposed it
    invalid_decisions: int = 0
    complete: bool = True
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def parse_merge_decision(text: str, group: dict[str, str]) -> MergeDecision:
    """Parse the model's fenced decision. ``group`` maps normalized name -> node id.

    Raises ValueError for anything malformed.
    """
    value, reason = first_json_block(text)
    if reason:
        raise ValueError(reason)
    if not isinstance(value, dict) or not isinstance(value.get("merge"), bool):
        raise ValueError("decision must be an object with a boolean 'merge'")
    if not value["merge"]:
        return NO_MERGE
    name, desc = value.get("parent_name"), value.get("parent_description")
    if not isinstance(name, str) or not isinstance(desc, str):
        raise ValueError("merge needs string parent_name and parent_description")
    names = value.get("children")
    if names is None:
        children = frozenset(group.values())
    else:
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ValueError("children must be a list of node names")
        try:
            children = frozenset(group[normalize_name(n)] for n in names)
        except KeyError as exc:
            raise ValueError(f"child {exc.args[0]!r} is not in the candidate group") from None
    return MergeDecision(True, name.strip(), desc.strip(), children)


def _describe(graph: MotivGraph, node_id: str) -> str:
    n = graph.node(node_id)
    return f"- {n.name}: {n.description}"


def _ask(llm, graph: MotivGraph, kind: NodeKind, focal: str, candidates: list[str], retries: int) -> tuple[MergeDecision, int]:
    group = {normalize_name(graph.node(i).name): i for i in [focal, *candidates]}
    prompt = render(
        "merge",
        kind=kind.value.lower(),
        focal=_describe(graph, focal),
        candidates="\n".join(_describe(graph, c) for c in candidates),
    )
    messages = [ChatMessage("user", prompt)]
    invalid = 0
    for _ in range(retries + 1):
        reply = llm.complete(ChatRequest(list(messages), temperature=DEFAULT_TEMPERATURE["merger"], tag=f"merge:{focal}"))
        try:
            decision = parse_merge_decision(reply, group)
        except ValueError as exc:
            invalid += 1
            messages += [
                ChatMessage("assistant", reply),
                ChatMessage("user", f"That decision could not be used ({exc}). Answer again with one fenced JSON block."),
            ]
            continue
        if decision.merge and graph.find(kind, decision.parent_name) is not None:
            invalid += 1
            messages += [
                ChatMessage("assistant", reply),
                ChatMessage("user", f"A {kind.value.lower()} named {decision.parent_name!r} already exists; choose a new parent name."),
            ]
            continue
        return decision, invalid
    return NO_MERGE, invalid


def run_parent_pass(
    graph: MotivGraph,
    index: VectorIndex,
    embedder: Embedder,
    kind: NodeKind | str,
    llm,
    *,
    k: int = DEFAULT_K,
    rng_seed: int = 0,
    level: int = 0,
    nodes: list[str] | None = None,
    similarity_floor: float | None = None,
    retries: int = 1,
) -> PassReport:
    """One working-set pass over ``nodes`` (default: every ``kind`` node at ``level``)."""
    kind = NodeKind.parse(kind)
    if kind is NodeKind.SOLUTION:
        raise HierarchyError("solution nodes do not get parents")
    if k < 1:
        raise ValueError("k must be >= 1")
    pool = sorted(nodes) if nodes is not None else [n.id for n in graph.nodes(kind, level=level)]
    report = PassReport(kind, level)
    if not pool:
        return report
    for node_id in pool:
        if graph.node(node_id).kind is not kind:
            raise HierarchyError(f"{node_id} is not a {kind.value}")
        if node_id not in index:
            n = graph.node(node_id)
            index.add(node_id, embedder.embed(n.description), n.name)

    order = list(pool)
    random.Random(rng_seed).shuffle(order)
    working = set(pool)
    pool_set = frozenset(pool)

    for focal in order:
        if focal not in working:
            continue
        report.focal_sequence.append(focal)
        hits = index.top_k(index.vector(focal), k + 1, restrict=pool_set - {focal})[:k]
        candidates = [
            h.node_id
            for h in hits
            if h.node_id in working and (similarity_floor is None or h.score >= similarity_floor)
        ]
        if not candidates:
            working.discard(focal)
            continue
        try:
            decision, invalid = _ask(llm, graph, kind, focal, candidates, retries)
        except LLMError as exc:
            report.complete = False
            report.error = str(exc)
            logger.warning("parent pass aborted at %s: %s", focal, exc)
            break
        report.invalid_decisions += invalid
        if decision.merge:
            children = sorted(decision.children)
            parent = None
            try:
                vector = embedder.embed(decision.parent_description)
                parent = graph.add_node(
                    kind,
                    decision.parent_name,
                    decision.parent_description,
                    level=1 + max(graph.node(c).level for c in children),
                )
                for child in children:
                    graph.add_edge(EdgeKind.PARENT_OF, parent, child)
            except (GraphError, ValueError, LLMError) as exc:
                if parent is not None:
                    graph.discard_node(parent)
                report.complete = False
                report.error = str(exc)
                break
            index.add(parent, vector, decision.parent_name)
            report.parents.append(parent)
            report.merged[parent] = children
            report.merge_focal[parent] = focal
            report.parents_created += 1
            report.edges_created += len(children)
            working.difference_update(children)
        working.discard(focal)
    return report


def run_until_stable(
    graph: MotivGraph,
    index: VectorIndex,
    embedder: Embedder,
    kind: NodeKind | str,
    llm,
    *,
    k: int = DEFAULT_K,
    max_levels: int = 3,
    rng_seed: int = 0,
    similarity_floor: float | None = None,
    retries: int = 1,
) -> list[PassReport]:
    """Repeat passes level by level, each over the parents the previous pass created."""
    if max_levels < 1:
        raise ValueError("max_levels must be >= 1")
    kind = NodeKind.parse(kind)
    reports: list[PassReport] = []
    nodes = None
    for level in range(max_levels):
        report = run_parent_pass(
            graph, index, embedder, kind, llm,
            k=k, rng_seed=rng_seed + level, level=level, nodes=nodes,
            similarity_floor=similarity_floor, retries=retries,
        )
        reports.append(report)
        if not report.complete or report.parents_created == 0:
            break
        nodes = report.parents
    return reports


def summarize(reports: list[PassReport]) -> dict:
    """Totals in the same categories a full-corpus build reports."""
    return {
        "passes": len(reports),
        "parent_nodes": sum(r.parents_created for r in reports),
        "parent_of_edges": sum(r.edges_created for r in reports),
        "per_level": [
            {"kind": r.kind.value, "level": r.level, "parents": r.parents_created, "edges": r.edges_created,
             "focal": len(r.focal_sequence), "complete": r.complete}
            for r in reports
        ],
    }


def reports_json(reports: list[PassReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
