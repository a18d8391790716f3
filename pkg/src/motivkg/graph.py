"""Typed store for problem / challenge / solution nodes and their edges."""

from __future__ import annotations

import json
import random
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class GraphError(Exception):
    """Base class for graph store errors."""


class NodeValidationError(GraphError, ValueError):
    pass


class SchemaError(GraphError):
    pass


class CycleError(GraphError):
    pass


class NodeNotFound(GraphError, KeyError):
    pass


class NodeKind(str, Enum):
    PROBLEM = "Problem"
    CHALLENGE = "Challenge"
    SOLUTION = "Solution"

    @classmethod
    def parse(cls, value: "str | NodeKind") -> "NodeKind":
        if isinstance(value, NodeKind):
            return value
        for kind in cls:
            if kind.value.lower() == str(value).strip().lower():
                return kind
        raise ValueError(f"unknown node kind: {value!r}")


class EdgeKind(str, Enum):
    PARENT_OF = "ParentOf"
    PROBLEM_CHALLENGE = "ProblemChallenge"
    CHALLENGE_SOLUTION = "ChallengeSolution"

    @property
    def label(self) -> str:
        return _EDGE_LABELS[self]

    @classmethod
    def parse(cls, value: "str | EdgeKind") -> "EdgeKind":
        if isinstance(value, EdgeKind):
            return value
        for kind in cls:
            if str(value) in (kind.value, kind.label):
                return kind
        raise ValueError(f"unknown edge kind: {value!r}")


_EDGE_LABELS = {
    EdgeKind.PARENT_OF: "PARENT_OF",
    EdgeKind.PROBLEM_CHALLENGE: "PROBLEM_CHALLENGE",
    EdgeKind.CHALLENGE_SOLUTION: "CHALLENGE_SOLUTION",
}
_EDGE_ORDER = {kind: i for i, kind in enumerate(EdgeKind)}

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Case-fold and collapse internal whitespace."""
    return _WS.sub(" ", name).strip().casefold()


@dataclass
class MotivNode:
    id: str
    kind: NodeKind
    name: str
    description: str
    sources: set[str] = field(default_factory=set)
    level: int = 0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "name": self.name,
            "description": self.description,
            "sources": sorted(self.sources),
            "level": self.level,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MotivNode":
        return cls(
            id=d["id"],
            kind=NodeKind.parse(d["kind"]),
            name=d["name"],
            description=d["description"],
            sources=set(d.get("sources", ())),
            level=int(d.get("level", 0)),
        )


@dataclass(frozen=True)
class MotivEdge:
    id: str
    kind: EdgeKind
    src: str
    dst: str


@dataclass(frozen=True)
class MotivTriple:
    problem: str
    challenge: str
    solution: str


@dataclass(frozen=True)
class Neighbor:
    edge_kind: EdgeKind
    direction: str  # "out" or "in"
    node: MotivNode


@dataclass(frozen=True)
class Violation:
    rule: str  # schema | duplicate-name | cycle | level | dangling
    detail: str
    ids: tuple[str, ...] = ()


# Allowed (src kind, dst kind) per edge kind.
_EDGE_SCHEMA = {
    EdgeKind.PARENT_OF: {
        (NodeKind.PROBLEM, NodeKind.PROBLEM),
        (NodeKind.CHALLENGE, NodeKind.CHALLENGE),
    },
    EdgeKind.PROBLEM_CHALLENGE: {(NodeKind.PROBLEM, NodeKind.CHALLENGE)},
    EdgeKind.CHALLENGE_SOLUTION: {(NodeKind.CHALLENGE, NodeKind.SOLUTION)},
}


class MotivGraph:
    """In-memory graph with schema checks on every write.

    Writes are serialized by a re-entrant lock; readers get plain copies.
    Node ids are sequential (``n000001``) so runs are reproducible.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._nodes: dict[str, MotivNode] = {}
        self._by_name: dict[tuple[NodeKind, str], str] = {}
        self._edges: dict[str, MotivEdge] = {}
        self._edge_keys: dict[tuple[EdgeKind, str, str], str] = {}
        self._out: dict[str, list[str]] = {}
        self._in: dict[str, list[str]] = {}
        self._next_node = 1
        self._next_edge = 1

    # -- writes ---------------------------------------------------------

    def add_node(
        self,
        kind: NodeKind | str,
        name: str,
        description: str,
        source: str | None = None,
        *,
        level: int = 0,
    ) -> str:
        kind = NodeKind.parse(kind)
        if not name or not name.strip():
            raise NodeValidationError("node name must be non-empty")
        if not description or not description.strip():
            raise NodeValidationError("node description must be non-empty")
        if level < 0:
            raise NodeValidationError("level must be non-negative")
        key = (kind, normalize_name(name))
        with self._lock:
            existing = self._by_name.get(key)
            if existing is not None:
                if source:
                    self._nodes[existing].sources.add(source)
                return existing
            node_id = f"n{self._next_node:06d}"
            self._next_node += 1
            self._nodes[node_id] = MotivNode(
                id=node_id,
                kind=kind,
                name=_WS.sub(" ", name).strip(),
                description=description.strip(),
                sources={source} if source else set(),
                level=level,
            )
            self._by_name[key] = node_id
            self._out[node_id] = []
            self._in[node_id] = []
            return node_id

    def add_edge(self, kind: EdgeKind | str, src: str, dst: str) -> str:
        kind = EdgeKind.parse(kind)
        with self._lock:
            for node_id in (src, dst):
                if node_id not in self._nodes:
                    raise NodeNotFound(node_id)
            existing = self._edge_keys.get((kind, src, dst))
            if existing is not None:
                return existing
            pair = (self._nodes[src].kind, self._nodes[dst].kind)
            if pair not in _EDGE_SCHEMA[kind]:
                raise SchemaError(
                    f"{kind.value} cannot connect {pair[0].value} -> {pair[1].value}"
                )
            if kind is EdgeKind.PARENT_OF and (src == dst or self._reaches(dst, src)):
                raise CycleError(f"ParentOf {src} -> {dst} would create a cycle")
            return self._insert_edge(kind, src, dst)

    def discard_node(self, node_id: str) -> None:
        """Remove a node and its incident edges (used to undo a failed write)."""
        with self._lock:
            node = self._nodes.pop(node_id, None)
            if node is None:
                return
            key = (node.kind, normalize_name(node.name))
            if self._by_name.get(key) == node_id:
                del self._by_name[key]
            for eid in self._out.pop(node_id, []) + self._in.pop(node_id, []):
                edge = self._edges.pop(eid, None)
                if edge is None:
                    continue
                del self._edge_keys[(edge.kind, edge.src, edge.dst)]
                other = edge.dst if edge.src == node_id else edge.src
                for table in (self._out, self._in):
                    if other in table and eid in table[other]:
                        table[other].remove(eid)

    def _insert_edge(self, kind: EdgeKind, src: str, dst: str) -> str:
        edge_id = f"e{self._next_edge:06d}"
        self._next_edge += 1
        self._edges[edge_id] = MotivEdge(edge_id, kind, src, dst)
        self._edge_keys[(kind, src, dst)] = edge_id
        self._out.setdefault(src, []).append(edge_id)
        self._in.setdefault(dst, []).append(edge_id)
        return edge_id

    def _reaches(self, start: str, target: str) -> bool:
        """True if ``target`` is reachable from ``start`` along ParentOf edges."""
        stack, seen = [start], set()
        while stack:
            cur = stack.pop()
            if cur == target:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            for eid in self._out.get(cur, ()):
                edge = self._edges[eid]
                if edge.kind is EdgeKind.PARENT_OF:
                    stack.append(edge.dst)
        return False

    # -- reads ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> MotivNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NodeNotFound(node_id) from None

    def find(self, kind: NodeKind | str | None, name: str) -> MotivNode | None:
        """Look a node up by normalized name, optionally restricted to a kind."""
        norm = normalize_name(name)
        kinds = list(NodeKind) if kind is None else [NodeKind.parse(kind)]
        for k in kinds:
            node_id = self._by_name.get((k, norm))
            if node_id is not None:
                return self._nodes[node_id]
        return None

    def nodes(
        self, kind: NodeKind | str | None = None, level: int | None = None
    ) -> list[MotivNode]:
        kind = None if kind is None else NodeKind.parse(kind)
        out = [
            n
            for n in self._nodes.values()
            if (kind is None or n.kind is kind) and (level is None or n.level == level)
        ]
        return sorted(out, key=lambda n: n.id)

    def edges(self, kind: EdgeKind | str | None = None) -> list[MotivEdge]:
        kind = None if kind is None else EdgeKind.parse(kind)
        return [e for e in self._edges.values() if kind is None or e.kind is kind]

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def neighbors(self, node_id: str) -> list[Neighbor]:
        if node_id not in self._nodes:
            raise NodeNotFound(node_id)
        out = []
        for eid in self._out.get(node_id, ()):
            e = self._edges[eid]
            out.append(Neighbor(e.kind, "out", self._nodes[e.dst]))
        for eid in self._in.get(node_id, ()):
            e = self._edges[eid]
            out.append(Neighbor(e.kind, "in", self._nodes[e.src]))
        out.sort(key=lambda nb: (_EDGE_ORDER[nb.edge_kind], nb.node.name, nb.direction, nb.node.id))
        return out

    def parents(self, node_id: str) -> list[str]:
        return [
            self._edges[eid].src
            for eid in self._in.get(node_id, ())
            if self._edges[eid].kind is EdgeKind.PARENT_OF
        ]

    def children(self, node_id: str) -> list[str]:
        return [
            self._edges[eid].dst
            for eid in self._out.get(node_id, ())
            if self._edges[eid].kind is EdgeKind.PARENT_OF
        ]

    def _iter_triples(self) -> Iterator[MotivTriple]:
        for p in self.nodes(NodeKind.PROBLEM):
            for eid in self._out[p.id]:
                pc = self._edges[eid]
                if pc.kind is not EdgeKind.PROBLEM_CHALLENGE:
                    continue
                for eid2 in self._out[pc.dst]:
                    cs = self._edges[eid2]
                    if cs.kind is EdgeKind.CHALLENGE_SOLUTION:
                        yield MotivTriple(p.id, pc.dst, cs.dst)

    def list_triples(self, limit: int | None = None, rng_seed: int | None = None) -> list[MotivTriple]:
        """All P->C->S chains, sorted by names; a seeded uniform sample if a seed is given."""
        with self._lock:
            name = lambda i: self._nodes[i].name  # noqa: E731
            triples = sorted(
                set(self._iter_triples()),
                key=lambda t: (name(t.problem), name(t.challenge), name(t.solution), t),
            )
        if limit is None or limit >= len(triples):
            if rng_seed is None:
                return triples
            limit = len(triples)
        if rng_seed is None:
            return triples[:limit]
        return random.Random(rng_seed).sample(triples, limit)

    def stats(self) -> dict[str, int]:
        """Node and edge counts in the categories used for corpus-scale reporting."""
        counts = {
            "problem_nodes": 0,
            "challenge_nodes": 0,
            "solution_nodes": 0,
            "parent_nodes": 0,
            "leaf_nodes": 0,
        }
        for n in self._nodes.values():
            counts[f"{n.kind.value.lower()}_nodes"] += 1
            counts["parent_nodes" if n.level > 0 else "leaf_nodes"] += 1
        edges = {"parent_of_edges": 0, "problem_challenge_edges": 0, "challenge_solution_edges": 0}
        names = {
            EdgeKind.PARENT_OF: "parent_of_edges",
            EdgeKind.PROBLEM_CHALLENGE: "problem_challenge_edges",
            EdgeKind.CHALLENGE_SOLUTION: "challenge_solution_edges",
        }
        for e in self._edges.values():
            edges[names[e.kind]] += 1
        return {
            **counts,
            "total_nodes": len(self._nodes),
            **edges,
            "total_edges": len(self._edges),
        }

    # -- validation -----------------------------------------------------

    def validate_graph(self) -> list[Violation]:
        """Full scan for broken invariants; an empty list means well-formed."""
        report: list[Violation] = []
        with self._lock:
            seen: dict[tuple[NodeKind, str], str] = {}
            for n in self.nodes():
                if not n.name.strip() or not n.description.strip():
                    report.append(Violation("empty-text", f"node {n.id} has empty name or description", (n.id,)))
                key = (n.kind, normalize_name(n.name))
                if key in seen:
                    report.append(
                        Violation("duplicate-name", f"{n.kind.value} {n.name!r} duplicated", (seen[key], n.id))
                    )
                else:
                    seen[key] = n.id
                if n.level >= 1 and not self.children(n.id):
                    report.append(Violation("level", f"level-{n.level} node {n.id} has no ParentOf children", (n.id,)))
            for e in self._edges.values():
                if e.src not in self._nodes or e.dst not in self._nodes:
                    report.append(Violation("dangling", f"edge {e.id} references a missing node", (e.id,)))
                    continue
                pair = (self._nodes[e.src].kind, self._nodes[e.dst].kind)
                if pair not in _EDGE_SCHEMA[e.kind]:
                    report.append(
                        Violation(
                            "schema",
                            f"{e.kind.value} edge {e.id} connects {pair[0].value} -> {pair[1].value}",
                            (e.id, e.src, e.dst),
                        )
                    )
            for cycle in self._parent_cycles():
                report.append(Violation("cycle", "ParentOf cycle through " + " -> ".join(cycle), tuple(cycle)))
        return report

    def _parent_cycles(self) -> list[list[str]]:
        # Iterative three-colour DFS; one representative cycle per back edge.
        white, grey, black = 0, 1, 2
        colour = {nid: white for nid in self._nodes}
        cycles = []
        for root in sorted(self._nodes):
            if colour[root] != white:
                continue
            path = [root]
            colour[root] = grey
            stack = [iter(sorted(self.children(root)))]
            while stack:
                child = next(stack[-1], None)
                if child is None:
                    stack.pop()
                    colour[path.pop()] = black
                    continue
                if child not in colour:
                    continue
                if colour[child] == grey:
                    cycles.append(path[path.index(child):] + [child])
                elif colour[child] == white:
                    colour[child] = grey
                    path.append(child)
                    stack.append(iter(sorted(self.children(child))))
        return cycles

    # -- snapshots and persistence -------------------------------------

    def checkpoint(self) -> tuple:
        """Opaque copy of the full state, for :meth:`restore`."""
        with self._lock:
            nodes = {
                k: MotivNode(n.id, n.kind, n.name, n.description, set(n.sources), n.level)
                for k, n in self._nodes.items()
            }
            return (
                nodes,
                dict(self._by_name),
                dict(self._edges),
                dict(self._edge_keys),
                {k: list(v) for k, v in self._out.items()},
                {k: list(v) for k, v in self._in.items()},
                self._next_node,
                self._next_edge,
            )

    def restore(self, state: tuple) -> None:
        with self._lock:
            (
                self._nodes,
                self._by_name,
                self._edges,
                self._edge_keys,
                self._out,
                self._in,
                self._next_node,
                self._next_edge,
            ) = state

    def copy(self) -> "MotivGraph":
        other = MotivGraph()
        other.restore(self.checkpoint())
        return other

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with self._lock:
            nodes = [n.to_dict() for n in self.nodes()]
            edges = [
                {"kind": e.kind.value, "src": e.src, "dst": e.dst}
                for e in sorted(self._edges.values(), key=lambda e: e.id)
            ]
        _write_jsonl(directory / "nodes.jsonl", nodes)
        _write_jsonl(directory / "edges.jsonl", edges)

    @classmethod
    def load(cls, directory: str | Path) -> "MotivGraph":
        """Load without re-validating, so damaged files can still be inspected
        with :meth:`validate_graph`."""
        directory = Path(directory)
        graph = cls()
        max_num = 0
        for d in _read_jsonl(directory / "nodes.jsonl"):
            node = MotivNode.from_dict(d)
            graph._nodes[node.id] = node
            graph._by_name.setdefault((node.kind, normalize_name(node.name)), node.id)
            graph._out.setdefault(node.id, [])
            graph._in.setdefault(node.id, [])
            digits = node.id.lstrip("n")
            if digits.isdigit():
                max_num = max(max_num, int(digits))
        graph._next_node = max(max_num + 1, len(graph._nodes) + 1)
        for d in _read_jsonl(directory / "edges.jsonl"):
            graph._insert_edge(EdgeKind.parse(d["kind"]), d["src"], d["dst"])
        return graph


def _write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
