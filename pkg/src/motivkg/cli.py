"""Command-line entry point: build-graph, hierarchy, ideate, evaluate, validate-graph.

Exit codes: 0 success, 2 configuration or usage error, 3 extraction failure,
4 provider failure, 5 graph validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError, RunConfig, build_embedder, build_literature, build_llm
from .embed import VectorIndex
from .evaluator import ScoreParseError, diversity, direct_score, report_json, swiss_tournament
from .graph import MotivGraph, NodeKind
from .hierarchy import reports_json, run_until_stable, summarize
from .ideator import DeliberationError, ExplorationError, IdeaDocument, IdeaValidationError, deliberate, explore
from .llm import LLMError
from .miner import ExtractionError, extract_triples, ingest_triples, load_paper
from .tools import Toolbox

EXIT_OK, EXIT_USAGE, EXIT_EXTRACTION, EXIT_PROVIDER, EXIT_VALIDATION = 0, 2, 3, 4, 5
CORPUS_SUFFIXES = (".txt", ".md", ".json")

log = logging.getLogger("motivkg")


class ValidationFailed(Exception):
    pass


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")[:60] or "topic"


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _fresh_logs(cfg: RunConfig, command: str) -> Path:
    """Per-command log directory, emptied so reruns produce the same bytes."""
    path = cfg.run_dir / "logs" / command
    shutil.rmtree(path, ignore_errors=True)
    return path


def _gateway(cfg: RunConfig, role: str, command: str, llm):
    if llm is not None:
        return llm
    gw = build_llm(cfg, role, log=False)
    gw.log_path = cfg.run_dir / "logs" / command / f"{role}.jsonl"
    return gw


def _snapshot(cfg: RunConfig) -> None:
    _write_json(cfg.run_dir / "config.json", cfg.snapshot())


def load_state(cfg: RunConfig) -> tuple[MotivGraph, VectorIndex]:
    gdir = cfg.graph_path
    if not (gdir / "nodes.jsonl").exists():
        raise ConfigError(f"no graph at {gdir}; run build-graph first")
    graph = MotivGraph.load(gdir)
    emb = gdir / "embeddings.jsonl"
    index = VectorIndex.load(emb) if emb.exists() else VectorIndex(build_embedder(cfg).dim)
    return graph, index


def save_state(cfg: RunConfig, graph: MotivGraph, index: VectorIndex) -> None:
    gdir = cfg.graph_path
    graph.save(gdir)
    index.save(gdir / "embeddings.jsonl")


def corpus_files(corpus: str | Path) -> list[Path]:
    corpus = Path(corpus)
    if corpus.is_file():
        return [corpus]
    if not corpus.is_dir():
        raise ConfigError(f"corpus not found: {corpus}")
    return sorted(p for p in corpus.iterdir() if p.suffix.lower() in CORPUS_SUFFIXES)


# -- build-graph -----------------------------------------------------------------

def cmd_build_graph(cfg: RunConfig, corpus: str | Path, *, llm=None, dry_run: bool = False) -> dict:
    """Extract triples from every corpus file and ingest them in file order.

    Extraction runs on ``cfg.workers`` threads; ingestion is sequential so
    node ids do not depend on scheduling. Papers that fail extraction are
    listed in the report and raise :class:`ExtractionError` at the end.
    """
    files = corpus_files(corpus)
    if dry_run:
        return {"dry_run": True, "papers": [str(f) for f in files], "graph_dir": str(cfg.graph_path)}
    _snapshot(cfg)
    _fresh_logs(cfg, "build-graph")
    llm = _gateway(cfg, "extractor", "build-graph", llm)
    embedder = build_embedder(cfg)
    papers = [load_paper(f) for f in files]

    def extract(item):
        paper_id, text = item
        try:
            return extract_triples(text, llm, paper=paper_id, retries=cfg.extraction_retries), None
        except ExtractionError as exc:
            return None, exc

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(extract, papers))

    graph, index = MotivGraph(), VectorIndex(embedder.dim)
    reports, failures = [], []
    for (paper_id, _), (triples, error) in zip(papers, results):
        if error is not None:
            failures.append({"paper": paper_id, "error": str(error)})
            continue
        reports.append(ingest_triples(graph, index, embedder, triples, paper_id).to_dict())
    save_state(cfg, graph, index)
    summary = {"papers": len(papers), "ingested": len(reports), "failures": failures, "stats": graph.stats()}
    _write_json(cfg.run_dir / "reports" / "ingestion.json", {**summary, "per_paper": reports})
    if failures and not reports:
        raise ExtractionError(f"extraction failed for every paper ({len(failures)})")
    if failures:
        raise ExtractionError(f"extraction failed for {len(failures)} of {len(papers)} papers")
    return summary


# -- hierarchy -------------------------------------------------------------------

def cmd_hierarchy(cfg: RunConfig, kind: str, *, llm=None, dry_run: bool = False) -> dict:
    node_kind = NodeKind.parse(kind)
    if node_kind is NodeKind.SOLUTION:
        raise ConfigError("hierarchy applies to problem and challenge nodes only")
    graph, index = load_state(cfg)
    if dry_run:
        return {"dry_run": True, "kind": node_kind.value, "leaf_nodes": len(graph.nodes(node_kind, level=0))}
    _snapshot(cfg)
    command = f"hierarchy-{node_kind.value.lower()}"
    _fresh_logs(cfg, command)
    llm = _gateway(cfg, "merger", command, llm)
    reports = run_until_stable(
        graph, index, build_embedder(cfg), node_kind, llm,
        k=cfg.hierarchy_k, max_levels=cfg.max_levels, rng_seed=cfg.seed,
        similarity_floor=cfg.similarity_floor,
    )
    save_state(cfg, graph, index)
    out = cfg.run_dir / "reports" / f"{command}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(reports_json(reports) + "\n", encoding="utf-8")
    summary = {"kind": node_kind.value, **summarize(reports), "stats": graph.stats()}
    incomplete = [r for r in reports if not r.complete]
    if incomplete:
        raise LLMError(f"hierarchy pass stopped early: {incomplete[0].error}")
    return summary


# -- ideate ----------------------------------------------------------------------

def read_topics(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    if Path(path).suffix.lower() == ".json":
        topics = [str(t) for t in json.loads(text)]
    else:
        topics = [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not topics:
        raise ConfigError(f"no topics in {path}")
    return topics


@dataclass
class SessionResult:
    topic: str
    index: int
    key: str
    idea: IdeaDocument | None
    transcript: dict | None
    error: str | None = None


def _session(cfg, topic, n, researcher, mentor, graph, index, embedder, literature, earlier) -> SessionResult:
    key = f"{slug(topic)}__{n}"
    seed = cfg.seed * 7919 + hash_topic(topic) + n
    tools = Toolbox(graph, index, embedder, literature, top_k=cfg.top_k, rng_seed=seed)
    try:
        exploration, idea = explore(
            topic, researcher, tools, budget=cfg.tool_budget, max_reprompts=cfg.max_reprompts,
            previous_ideas=earlier, context_tokens=cfg.context_tokens,
        )
        transcript = deliberate(
            idea, researcher, mentor, tools, topic=topic, max_rounds=cfg.max_rounds,
            exploration=exploration, tool_budget=cfg.revision_budget, clock=cfg.clock,
            max_reprompts=cfg.max_reprompts, context_tokens=cfg.context_tokens,
        )
    except DeliberationError as exc:
        data = exc.transcript.to_dict()
        data["seeds"] = {"toolbox": seed}
        return SessionResult(topic, n, key, None, data, str(exc))
    except (ExplorationError, IdeaValidationError, LLMError) as exc:
        return SessionResult(topic, n, key, None, None, str(exc))
    transcript.seeds = {"toolbox": seed}
    return SessionResult(topic, n, key, None if transcript.discarded else transcript.final_idea, transcript.to_dict())


def hash_topic(topic: str) -> int:
    # Stable across processes, unlike the built-in str hash.
    return int(hashlib.sha256(topic.encode("utf-8")).hexdigest()[:8], 16)


def cmd_ideate(
    cfg: RunConfig, topics: list[str] | None = None, *, researcher=None, mentor=None, dry_run: bool = False
) -> dict:
    """Run exploration plus deliberation for every topic; accepted ideas are written per method."""
    if topics is None:
        if not cfg.topics_file:
            raise ConfigError("no topics given (use --topics or topics_file)")
        topics = read_topics(cfg.resolve(cfg.topics_file))
    graph, index = load_state(cfg)
    if dry_run:
        return {"dry_run": True, "topics": topics, "sessions": len(topics) * cfg.ideas_per_topic}
    _snapshot(cfg)
    _fresh_logs(cfg, "ideate")
    researcher = _gateway(cfg, "researcher", "ideate", researcher)
    mentor = _gateway(cfg, "mentor", "ideate", mentor)
    embedder, literature = build_embedder(cfg), build_literature(cfg)
    idea_dir = cfg.run_dir / "ideas" / cfg.method
    shutil.rmtree(idea_dir, ignore_errors=True)
    shutil.rmtree(cfg.run_dir / "transcripts" / cfg.method, ignore_errors=True)

    def run_topic(topic: str) -> list[SessionResult]:
        # Ideas for one topic run in sequence so later ones can avoid earlier titles.
        out, earlier = [], []
        for n in range(1, cfg.ideas_per_topic + 1):
            res = _session(cfg, topic, n, researcher, mentor, graph, index, embedder, literature, earlier)
            if res.idea is not None:
                earlier.append(res.idea)
            out.append(res)
        return out

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = [r for batch in pool.map(run_topic, topics) for r in batch]

    sessions = []
    for r in results:
        if r.transcript is not None:
            _write_json(cfg.run_dir / "transcripts" / cfg.method / f"{r.key}.json", r.transcript)
        if r.idea is not None:
            _write_json(idea_dir / f"{r.key}.json", {"topic": r.topic, "method": cfg.method, **r.idea.to_dict()})
        sessions.append({
            "topic": r.topic, "index": r.index, "key": r.key,
            "accepted": r.idea is not None, "error": r.error,
            "verdict": r.transcript.get("verdict") if r.transcript else None,
            "rounds": len(r.transcript["rounds"]) if r.transcript else 0,
        })
    summary = {
        "method": cfg.method,
        "topics": len(topics),
        "sessions": len(sessions),
        "accepted": sum(s["accepted"] for s in sessions),
        "failed": sum(s["error"] is not None for s in sessions),
        "per_session": sessions,
    }
    _write_json(cfg.run_dir / "reports" / f"ideation-{cfg.method}.json", summary)
    if summary["failed"] == len(sessions):
        raise LLMError("every ideation session failed")
    return summary


# -- evaluate --------------------------------------------------------------------

def load_idea_set(path: str | Path) -> dict[str, list[IdeaDocument]]:
    """topic -> ideas, in file-name order."""
    out: dict[str, list[IdeaDocument]] = {}
    for f in sorted(Path(path).glob("*.json")):
        data = json.loads(f.read_text(encoding="utf-8"))
        out.setdefault(data.get("topic", f.stem), []).append(IdeaDocument.from_dict(data))
    return out


def cmd_evaluate(cfg: RunConfig, idea_sets: dict[str, str | Path] | None = None, *, judge=None, dry_run: bool = False) -> dict:
    """Diversity, direct scores and (with two or more methods) a Swiss ELO tournament."""
    sets = {m: cfg.resolve(p) for m, p in cfg.idea_sets.items()}
    own = cfg.run_dir / "ideas"
    if own.is_dir():
        for d in sorted(own.iterdir()):
            if d.is_dir():
                sets.setdefault(d.name, d)
    sets.update({m: Path(p) for m, p in (idea_sets or {}).items()})
    if not sets:
        raise ConfigError("no idea sets to evaluate")
    loaded = {m: load_idea_set(p) for m, p in sorted(sets.items())}
    if dry_run:
        return {"dry_run": True, "methods": {m: sum(map(len, s.values())) for m, s in loaded.items()}}
    _snapshot(cfg)
    _fresh_logs(cfg, "evaluate")
    judge = _gateway(cfg, "judge", "evaluate", judge)
    embedder = build_embedder(cfg)

    per_method = {}
    for method, by_topic in loaded.items():
        ideas = [i for topic in sorted(by_topic) for i in by_topic[topic]]
        scores = [direct_score(i, judge).as_dict() for i in ideas]
        mean = {d: (sum(s[d] for s in scores) / len(scores)) if scores else None for d in ("novelty", "experiment", "motivation")}
        per_method[method] = {
            "ideas": len(ideas),
            "diversity": diversity(ideas, embedder) if len(ideas) >= 2 else None,
            "direct_scores": mean,
        }

    result: dict = {"methods": per_method}
    common = sorted(set.intersection(*(set(s) for s in loaded.values())))
    if len(loaded) < 2:
        result["tournament"] = None
        result["notice"] = "tournament skipped: only one method"
        leaderboard = "Tournament skipped: only one method.\n"
    elif not common:
        result["tournament"] = None
        result["notice"] = "tournament skipped: no topic shared by every method"
        leaderboard = "Tournament skipped: no shared topics.\n"
    else:
        entries = {m: {t: s[t][0] for t in common} for m, s in loaded.items()}
        table = swiss_tournament(
            entries, common, judge, rounds=cfg.tournament_rounds, rng_seed=cfg.seed,
            k_factor=cfg.k_factor, initial_rating=cfg.initial_rating,
        )
        result["tournament"] = json.loads(report_json(table, topics=common))
        leaderboard = table.leaderboard()
    _write_json(cfg.run_dir / "evaluation.json", result)
    (cfg.run_dir / "leaderboard.txt").write_text(leaderboard, encoding="utf-8")
    result["leaderboard"] = leaderboard
    return result


# -- validate-graph ---------------------------------------------------------------

def cmd_validate_graph(cfg: RunConfig) -> dict:
    graph, _ = load_state(cfg)
    violations = graph.validate_graph()
    report = {
        "graph_dir": str(cfg.graph_path),
        "stats": graph.stats(),
        "violations": [{"rule": v.rule, "detail": v.detail, "ids": list(v.ids)} for v in violations],
    }
    if violations:
        raise ValidationFailed(json.dumps(report, indent=2, sort_keys=True))
    return report


# -- argument handling ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motivkg", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--workers", type=int, help="override the configured worker count")
    common.add_argument("--dry-run", action="store_true", help="report the plan without calling any provider")
    common.add_argument("--graph-dir", help="override the graph directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", parents=[common], help="extract triples from a corpus")
    p.add_argument("corpus", help="directory of .txt/.md/.json papers, or one file")
    p = sub.add_parser("hierarchy", parents=[common], help="add parent nodes for one kind")
    p.add_argument("kind", choices=["problem", "challenge"])
    p = sub.add_parser("ideate", parents=[common], help="generate ideas for topics")
    p.add_argument("--topics", help="topics file (one per line, or a JSON list)")
    p.add_argument("--method", help="method label for the idea set")
    p = sub.add_parser("evaluate", parents=[common], help="score and rank idea sets")
    p.add_argument("sets", nargs="*", metavar="METHOD=DIR", help="extra idea sets")
    sub.add_parser("validate-graph", parents=[common], help="check graph invariants")
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.graph_dir:
        cfg.graph_dir = str(Path(args.graph_dir).resolve())
    if getattr(args, "method", None):
        cfg.method = args.method
    cfg.check()
    return cfg


def run(args: argparse.Namespace) -> dict:
    cfg = _load_config(args)
    if args.command == "build-graph":
        return cmd_build_graph(cfg, args.corpus, dry_run=args.dry_run)
    if args.command == "hierarchy":
        return cmd_hierarchy(cfg, args.kind, dry_run=args.dry_run)
    if args.command == "ideate":
        topics = read_topics(args.topics) if args.topics else None
        return cmd_ideate(cfg, topics, dry_run=args.dry_run)
    if args.command == "evaluate":
        sets = {}
        for item in args.sets:
            method, sep, path = item.partition("=")
            if not sep or not method:
                raise ConfigError(f"expected METHOD=DIR, got {item!r}")
            sets[method] = path
        return cmd_evaluate(cfg, sets, dry_run=args.dry_run)
    return cmd_validate_graph(cfg)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run(args)
    except ScoreParseError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExtractionError as exc:
        print(f"extraction error: {exc}", file=sys.stderr)
        return EXIT_EXTRACTION
    except LLMError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except ValidationFailed as exc:
        print(str(exc))
        return EXIT_VALIDATION
    result.pop("leaderboard", None)
    print(json.dumps(result, indent=2, sort_keys=True, ensure_ascii=False))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
