"""Run configuration and provider construction."""

from __future__ import annotations

import importlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .embed import DEFAULT_DIM, HashEmbedder, HTTPEmbedder
from .llm import FunctionProvider, Gateway, HTTPChatProvider, ProviderProfile, ScriptedProvider
from . import mock
from .tools import CachedLiterature, HTTPLiterature, StubLiterature

ROLES = ("extractor", "merger", "researcher", "mentor", "judge")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    run_id: str = "run"
    output_dir: str = "runs"
    graph_dir: str | None = None
    topics_file: str | None = None
    seed: int = 0
    workers: int = 1
    method: str = "motivkg"
    # graph construction
    extraction_retries: int = 2
    hierarchy_k: int = 5
    max_levels: int = 3
    similarity_floor: float | None = None
    # ideation
    top_k: int = 10
    tool_budget: int = 12
    revision_budget: int = 4
    max_rounds: int = 5
    ideas_per_topic: int = 1
    max_reprompts: int = 3
    context_tokens: int = 24_000
    clock: str | None = None
    # evaluation
    k_factor: float = 32.0
    initial_rating: float = 1000.0
    tournament_rounds: int | None = None
    idea_sets: dict[str, str] = field(default_factory=dict)
    # services
    providers: dict[str, dict] = field(default_factory=dict)
    embedding: dict = field(default_factory=lambda: {"type": "hash", "dim": DEFAULT_DIM, "seed": 0})
    literature: dict = field(default_factory=lambda: {"type": "stub", "records": []})
    base_dir: str = field(default=".", repr=False)

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path = ".") -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.base_dir = str(base_dir)
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)

    def resolve(self, p: str | Path) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def check(self) -> None:
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an explicit integer")
        for name in ("hierarchy_k", "top_k", "max_rounds", "max_levels", "ideas_per_topic", "workers", "tool_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.k_factor <= 0:
            raise ConfigError("k_factor must be positive")
        for role in self.providers:
            if role not in ROLES:
                raise ConfigError(f"unknown provider role {role!r}")
        paths = []
        if self.topics_file:
            paths.append(self.topics_file)
        paths += list(self.idea_sets.values())
        for spec in self.providers.values():
            if spec.get("type") == "script":
                paths.append(spec["replies"])
        if isinstance(self.literature.get("records"), str):
            paths.append(self.literature["records"])
        for p in paths:
            if not self.resolve(p).exists():
                raise ConfigError(f"path does not exist: {p}")

    @property
    def run_dir(self) -> Path:
        return self.resolve(self.output_dir) / self.run_id

    @property
    def graph_path(self) -> Path:
        return self.resolve(self.graph_dir) if self.graph_dir else self.run_dir / "graph"

    def snapshot(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def _profile(role: str, spec: dict) -> ProviderProfile:
    keys = {f.name for f in fields(ProviderProfile)}
    return ProviderProfile(name=role, **{k: v for k, v in spec.items() if k in keys and k != "name"})


def build_llm(cfg: RunConfig, role: str, *, log: bool = True) -> Gateway:
    """Gateway for ``role``; a missing provider entry means the built-in mock policy."""
    spec = dict(cfg.providers.get(role, {"type": "mock"}))
    kind = spec.pop("type", "mock")
    if kind == "http":
        provider = HTTPChatProvider()
    elif kind == "script":
        replies = json.loads(cfg.resolve(spec.pop("replies")).read_text(encoding="utf-8"))
        provider = ScriptedProvider(replies)
    elif kind == "mock":
        policy = {
            "extractor": mock.extractor,
            "merger": mock.merger,
            "researcher": mock.researcher,
            "mentor": mock.mentor(spec.pop("accept_round", 2)),
            "judge": mock.judge,
        }[role]
        provider = FunctionProvider(policy)
        spec.setdefault("backoff", 0.0)
    elif kind == "callable":
        module, _, attr = spec.pop("target").partition(":")
        target = getattr(importlib.import_module(module), attr)
        provider = target if hasattr(target, "send") else FunctionProvider(target)
    else:
        raise ConfigError(f"unknown provider type {kind!r} for {role}")
    log_path = cfg.run_dir / "logs" / f"{role}.jsonl" if log else None
    return Gateway(provider, _profile(role, spec), log_path=log_path)


def build_embedder(cfg: RunConfig):
    spec = dict(cfg.embedding)
    kind = spec.get("type", "hash")
    dim = int(spec.get("dim", DEFAULT_DIM))
    if kind == "hash":
        return HashEmbedder(dim, int(spec.get("seed", 0)))
    if kind == "http":
        return HTTPEmbedder(spec["endpoint"], dim, api_key_env=spec.get("api_key_env", "MOTIVKG_EMBED_KEY"))
    raise ConfigError(f"unknown embedding type {kind!r}")


def build_literature(cfg: RunConfig):
    spec = dict(cfg.literature)
    kind = spec.get("type", "stub")
    if kind == "stub":
        records = spec.get("records", [])
        if isinstance(records, str):
            records = json.loads(cfg.resolve(records).read_text(encoding="utf-8"))
        source = StubLiterature(records)
    elif kind == "http":
        source = HTTPLiterature(
            spec.get("endpoint", "https://api.semanticscholar.org/graph/v1/paper/search"),
            api_key_env=spec.get("api_key_env", "S2_API_KEY"),
            rate_limit=spec.get("rate_limit", 60.0),
        )
    else:
        raise ConfigError(f"unknown literature type {kind!r}")
    cache = spec.get("cache_dir")
    return CachedLiterature(source, cfg.resolve(cache) if cache else None)
