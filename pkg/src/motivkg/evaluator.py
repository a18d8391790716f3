"""Idea-set evaluation: diversity, direct 0-10 scoring and Swiss-system ELO."""

from __future__ import annotations

import itertools
import json
import math
import random
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ._text import render
from .embed import Embedder, cosine
from .ideator import IdeaDocument
from .llm import DEFAULT_TEMPERATURE, ChatMessage, ChatRequest

DIMENSIONS = ("novelty", "experiment", "motivation")
INITIAL_RATING = 1000.0
K_FACTOR = 32.0


class EvaluationError(Exception):
    pass


class ScoreParseError(EvaluationError, ValueError):
    pass


class SchedulingError(EvaluationError):
    pass


def idea_text(idea: IdeaDocument) -> str:
    """The eight fields concatenated in schema order."""
    return idea.text()


def diversity(ideas: Sequence[IdeaDocument], embedder: Embedder) -> float:
    """1 - mean pairwise cosine similarity of idea-text embeddings, clamped to [0, 1]."""
    if len(ideas) < 2:
        raise ValueError("diversity needs at least two ideas")
    vectors = [embedder.embed(idea_text(i)) for i in ideas]
    sims = [cosine(a, b) for a, b in itertools.combinations(vectors, 2)]
    return min(1.0, max(0.0, 1.0 - sum(sims) / len(sims)))


@dataclass(frozen=True)
class DimensionScore:
    novelty: float
    experiment: float
    motivation: float

    def __post_init__(self) -> None:
        for name in DIMENSIONS:
            value = getattr(self, name)
            if not 0.0 <= value <= 10.0:
                raise ValueError(f"{name} score {value} outside [0, 10]")

    def as_dict(self) -> dict[str, float]:
        return {d: getattr(self, d) for d in DIMENSIONS}


_NUMBER = r"(\d+(?:\.\d+)?)"


def parse_scores(text: str) -> DimensionScore:
    labelled = {}
    for name in DIMENSIONS:
        m = re.search(rf"{name}\w*\s*[:=]\s*{_NUMBER}", text, re.IGNORECASE)
        if m:
            labelled[name] = float(m.group(1))
    if len(labelled) == 3:
        values = [labelled[d] for d in DIMENSIONS]
    else:
        values = [float(x) for x in re.findall(_NUMBER, text)[:3]]
        if len(values) < 3:
            raise ScoreParseError(f"expected three scores, found {len(values)}")
    try:
        return DimensionScore(*values)
    except ValueError as exc:
        raise ScoreParseError(str(exc)) from None


def direct_score(idea: IdeaDocument, judge, *, retries: int = 2) -> DimensionScore:
    messages = [ChatMessage("user", render("judge_score", idea=idea.to_json()))]
    last = None
    for _ in range(retries + 1):
        reply = judge.complete(ChatRequest(list(messages), temperature=DEFAULT_TEMPERATURE["judge"], tag="judge:score"))
        try:
            return parse_scores(reply)
        except ScoreParseError as exc:
            last = exc
            messages += [
                ChatMessage("assistant", reply),
                ChatMessage("user", f"Unusable scores ({exc}). Reply as: <novelty> / <experiment> / <motivation>, each 0-10."),
            ]
    raise ScoreParseError(f"judge gave no valid scores after {retries + 1} attempts: {last}")


_WINNER = re.compile(r"winner\s*[:=]?\s*(?:idea\s*)?([12])", re.IGNORECASE)


def parse_winner(text: str) -> int:
    m = _WINNER.search(text)
    if m:
        return int(m.group(1))
    mentioned = {int(x) for x in re.findall(r"idea\s*([12])", text, re.IGNORECASE)}
    if len(mentioned) == 1:
        return mentioned.pop()
    raise ScoreParseError("no winner in judge reply")


def _ask_pair(judge, first: IdeaDocument, second: IdeaDocument, dimension: str, topic: str, retries: int) -> int:
    prompt = render("judge_pair", dimension=dimension, topic=topic or "(unspecified)", first=first.to_json(), second=second.to_json())
    messages = [ChatMessage("user", prompt)]
    for _ in range(retries + 1):
        reply = judge.complete(ChatRequest(list(messages), temperature=DEFAULT_TEMPERATURE["judge"], tag=f"judge:{dimension}"))
        try:
            return parse_winner(reply)
        except ScoreParseError:
            messages += [ChatMessage("assistant", reply), ChatMessage("user", 'Reply with "Winner: 1" or "Winner: 2".')]
    raise ScoreParseError("judge did not name a winner")


@dataclass(frozen=True)
class PairOutcome:
    winner: str  # "A" or "B"
    order_sensitive: bool


def judge_pair(
    a: IdeaDocument,
    b: IdeaDocument,
    dimension: str,
    judge,
    rng_seed: int,
    *,
    topic: str = "",
    retries: int = 1,
) -> PairOutcome:
    """Judge twice with the order swapped; disagreement falls back to a seeded coin flip."""
    first = _ask_pair(judge, a, b, dimension, topic, retries)
    second = _ask_pair(judge, b, a, dimension, topic, retries)
    forward = "A" if first == 1 else "B"
    backward = "B" if second == 1 else "A"
    if forward == backward:
        return PairOutcome(forward, False)
    return PairOutcome("A" if random.Random(rng_seed).random() < 0.5 else "B", True)


def expected_score(rating_a: float, rating_b: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((rating_b - rating_a) / 400.0))


def elo_update(rating_a: float, rating_b: float, winner: str, k_factor: float = K_FACTOR) -> tuple[float, float]:
    if k_factor <= 0:
        raise ValueError("k_factor must be positive")
    if winner not in ("A", "B"):
        raise ValueError("winner must be 'A' or 'B'")
    score_a = 1.0 if winner == "A" else 0.0
    delta = k_factor * (score_a - expected_score(rating_a, rating_b))
    # The same delta moves both ratings, so the sum is conserved exactly.
    return rating_a + delta, rating_b - delta


@dataclass(frozen=True)
class Match:
    round: int
    dimension: str
    method_a: str
    method_b: str
    topic: str
    winner: str  # method name
    order_sensitive: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RatingTable:
    ratings: dict[str, dict[str, float]]  # dimension -> method -> rating
    matches: list[Match] = field(default_factory=list)
    initial_rating: float = INITIAL_RATING
    rounds: int = 0
    byes: list[tuple[int, str, str]] = field(default_factory=list)  # (round, dimension, method)

    @property
    def methods(self) -> list[str]:
        return sorted(next(iter(self.ratings.values())).keys())

    def average(self) -> dict[str, float]:
        dims = list(self.ratings)
        return {m: sum(self.ratings[d][m] for d in dims) / len(dims) for m in self.methods}

    def to_dict(self) -> dict:
        return {
            "initial_rating": self.initial_rating,
            "rounds": self.rounds,
            "ratings": {d: dict(sorted(r.items())) for d, r in self.ratings.items()},
            "average": self.average(),
            "matches": [m.to_dict() for m in self.matches],
            "byes": [list(b) for b in self.byes],
            "order_sensitive_matches": sum(m.order_sensitive for m in self.matches),
        }

    def leaderboard(self) -> str:
        dims = list(self.ratings)
        avg = self.average()
        header = ["Method", *[d.capitalize() for d in dims], "Average"]
        rows = [
            [m, *[f"{self.ratings[d][m]:.0f}" for d in dims], f"{avg[m]:.0f}"]
            for m in sorted(self.methods, key=lambda m: (-avg[m], m))
        ]
        widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
        fmt = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
        return "\n".join([fmt(header), fmt(["-" * w for w in widths]), *map(fmt, rows)]) + "\n"


def default_rounds(n_methods: int) -> int:
    return math.ceil(math.log2(max(n_methods, 2))) + 2


def swiss_pairings(
    standings: list[str], played: set[frozenset[str]], had_bye: set[str] = frozenset()
) -> tuple[list[tuple[str, str]], str | None]:
    """Adjacent pairing down the standings, skipping rematches where possible.

    With an odd count the lowest-ranked method without a previous bye sits out.
    """
    pending = list(standings)
    bye = None
    if len(pending) % 2 == 1:
        bye = next((m for m in reversed(pending) if m not in had_bye), pending[-1])
        pending.remove(bye)
    pairs = []
    while pending:
        top = pending.pop(0)
        partner = next((m for m in pending if frozenset((top, m)) not in played), pending[0])
        pending.remove(partner)
        pairs.append((top, partner))
    return pairs, bye


def swiss_tournament(
    entries: Mapping[str, Mapping[str, IdeaDocument] | Sequence[IdeaDocument]],
    topics: Sequence[str],
    judge,
    *,
    dimensions: Sequence[str] = DIMENSIONS,
    rounds: int | None = None,
    rng_seed: int = 0,
    k_factor: float = K_FACTOR,
    initial_rating: float = INITIAL_RATING,
) -> RatingTable:
    """Per-dimension Swiss-system ELO over methods.

    ``entries`` maps method -> {topic: idea} (or a list aligned with
    ``topics``). Each pairing judges one topic, taken from a seeded
    shuffle of ``topics``.
    """
    if len(entries) < 2:
        raise SchedulingError("a tournament needs at least two methods")
    if not topics:
        raise SchedulingError("no topics to judge")
    ideas: dict[str, dict[str, IdeaDocument]] = {}
    for method, value in entries.items():
        if isinstance(value, Mapping):
            ideas[method] = dict(value)
        else:
            if len(value) != len(topics):
                raise SchedulingError(f"{method} has {len(value)} ideas for {len(topics)} topics")
            ideas[method] = dict(zip(topics, value))
        missing = [t for t in topics if t not in ideas[method]]
        if missing:
            raise SchedulingError(f"{method} has no idea for topic(s): {', '.join(missing)}")
    methods = sorted(ideas)
    rounds = default_rounds(len(methods)) if rounds is None else rounds
    rng = random.Random(rng_seed)
    table = RatingTable({d: {m: float(initial_rating) for m in methods} for d in dimensions},
                        initial_rating=float(initial_rating), rounds=rounds)
    for dimension in dimensions:
        ratings = table.ratings[dimension]
        played: set[frozenset[str]] = set()
        had_bye: set[str] = set()
        topic_order = list(topics)
        rng.shuffle(topic_order)
        topic_iter = itertools.cycle(topic_order)
        for rnd in range(1, rounds + 1):
            standings = sorted(methods, key=lambda m: (-ratings[m], m))
            pairs, bye = swiss_pairings(standings, played, had_bye)
            if bye is not None:
                had_bye.add(bye)
                table.byes.append((rnd, dimension, bye))
            results = []
            for a, b in pairs:
                topic = next(topic_iter)
                outcome = judge_pair(ideas[a][topic], ideas[b][topic], dimension, judge, rng.randrange(2**32), topic=topic)
                results.append((a, b, topic, outcome))
            # Ratings move only after every pairing of the round is judged.
            for a, b, topic, outcome in results:
                ratings[a], ratings[b] = elo_update(ratings[a], ratings[b], outcome.winner, k_factor)
                played.add(frozenset((a, b)))
                winner = a if outcome.winner == "A" else b
                table.matches.append(Match(rnd, dimension, a, b, topic, winner, outcome.order_sensitive))
    return table


def report_json(table: RatingTable, **extra) -> str:
    return json.dumps({**extra, **table.to_dict()}, indent=2, sort_keys=True)
