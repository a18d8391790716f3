"""Exploration and mentor/researcher deliberation producing grounded ideas.

The researcher explores the graph through tool calls and writes an IDEA
JSON document. The mentor then questions it one aspect per round; the
researcher answers and rewrites the idea each time. The mentor's text is
never parsed into an idea: only researcher replies go through
:func:`validate_idea_json`.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path

from ._text import fenced_blocks, first_json_block, render
from .graph import MotivGraph, NodeKind
from .llm import DEFAULT_TEMPERATURE, ChatMessage, ChatRequest, LLMError, estimate_tokens
from .tools import ToolCall, ToolParseError, Toolbox, parse_tool_call

logger = logging.getLogger(__name__)

IDEA_KEYS = (
    "Name",
    "Title",
    "Motivation",
    "Related Work",
    "Abstract",
    "Method",
    "Experiments plan",
    "Risk Factors and Limitations",
)
_ATTRS = (
    "name",
    "title",
    "motivation",
    "related_work",
    "abstract",
    "method",
    "experiments_plan",
    "risks_limitations",
)
KEY_TO_ATTR = dict(zip(IDEA_KEYS, _ATTRS))

_NAME_RE = re.compile(r"^[a-z0-9_]+$")
_HREF_RE = re.compile(r"""(?:<|&lt;)a\s+href\s*=\s*["']([^"']*)["']""", re.IGNORECASE)

DEFAULT_MAX_ROUNDS = 5
DEFAULT_TOOL_BUDGET = 12
DEFAULT_REVISION_BUDGET = 4
DEFAULT_REPROMPTS = 3
DEFAULT_CONTEXT_TOKENS = 24_000
MAX_IDLE_TURNS = 3


class IdeaValidationError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class ExplorationError(Exception):
    def __init__(self, message: str, log: "SessionLog | None" = None):
        super().__init__(message)
        self.log = log


class AmbiguousVerdict(ValueError):
    pass


class DeliberationError(Exception):
    def __init__(self, message: str, transcript: "DialogueTranscript"):
        super().__init__(message)
        self.transcript = transcript


# -- idea documents ---------------------------------------------------------


@dataclass(frozen=True)
class Grounding:
    href: str
    field: str
    node_id: str | None = None

    @property
    def resolved(self) -> bool:
        return self.node_id is not None

    def parts(self) -> tuple[str, str] | None:
        """``(kind, name)`` for a ``kg:<kind>:<name>`` href, else None."""
        bits = self.href.split(":", 2)
        if len(bits) != 3 or bits[0].strip().lower() != "kg" or not bits[2].strip():
            return None
        return bits[1].strip(), bits[2].strip()


@dataclass(frozen=True)
class IdeaDocument:
    name: str
    title: str
    motivation: str
    related_work: str
    abstract: str
    method: str
    experiments_plan: str
    risks_limitations: str
    groundings: tuple[Grounding, ...] = ()
    revision: int = 0

    def fields(self) -> dict[str, str]:
        """The eight text fields under their JSON keys, in schema order."""
        return {key: getattr(self, attr) for key, attr in KEY_TO_ATTR.items()}

    def to_json(self) -> str:
        return json.dumps(self.fields(), indent=2, ensure_ascii=False)

    def text(self) -> str:
        return "\n".join(self.fields().values())

    def to_dict(self) -> dict:
        return {
            "idea": self.fields(),
            "revision": self.revision,
            "groundings": [asdict(g) for g in self.groundings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdeaDocument":
        fields = d["idea"] if "idea" in d else d
        return cls(
            **{attr: fields[key] for key, attr in KEY_TO_ATTR.items()},
            groundings=tuple(Grounding(**g) for g in d.get("groundings", ())),
            revision=int(d.get("revision", 0)),
        )


def extract_groundings(fields: dict[str, str]) -> tuple[Grounding, ...]:
    out = []
    for key, text in fields.items():
        for href in _HREF_RE.findall(text):
            if href.strip().lower().startswith("kg:"):
                out.append(Grounding(href.strip(), key))
    return tuple(out)


def idea_from_json(value, *, revision: int = 0) -> IdeaDocument:
    """Validate an already-decoded IDEA JSON object."""
    errors = []
    if not isinstance(value, dict):
        raise IdeaValidationError(["IDEA JSON must be an object"])
    missing = [k for k in IDEA_KEYS if k not in value]
    extra = [k for k in value if k not in IDEA_KEYS]
    errors += [f"missing key: {k}" for k in missing]
    errors += [f"extra key: {k}" for k in extra]
    for key in IDEA_KEYS:
        if key in value and (not isinstance(value[key], str) or not value[key].strip()):
            errors.append(f"empty or non-string value: {key}")
    name = value.get("Name")
    if isinstance(name, str) and name.strip() and not _NAME_RE.match(name):
        errors.append("Name must be lowercase letters, digits and underscores, without spaces")
    if errors:
        raise IdeaValidationError(errors)
    fields = {k: value[k] for k in IDEA_KEYS}
    return IdeaDocument(
        **{KEY_TO_ATTR[k]: v for k, v in fields.items()},
        groundings=extract_groundings(fields),
        revision=revision,
    )


def validate_idea_json(text: str, *, revision: int = 0) -> IdeaDocument:
    """Parse the first fenced JSON block of ``text`` into an IdeaDocument.

    Raises :class:`IdeaValidationError` with one message per problem.
    """
    value, reason = first_json_block(text)
    if reason:
        raise IdeaValidationError([reason])
    return idea_from_json(value, revision=revision)


def resolve_groundings(idea: IdeaDocument, graph: MotivGraph) -> IdeaDocument:
    resolved = []
    for g in idea.groundings:
        node_id = None
        parts = g.parts()
        if parts is not None:
            kind_text, name = parts
            try:
                kind = NodeKind.parse("solution" if kind_text.lower() == "method" else kind_text)
            except ValueError:
                kind = None
            node = graph.find(kind, name) if kind is not None else None
            node_id = node.id if node else None
        resolved.append(Grounding(g.href, g.field, node_id))
    return replace(idea, groundings=tuple(resolved))


def _looks_like_idea(reply: str) -> bool:
    return "IDEA JSON" in reply or any(info.lower() == "json" for info, *_ in fenced_blocks(reply))


# -- session log and context management -------------------------------------------


@dataclass
class Turn:
    origin: str  # system | researcher | mentor | tool | orchestrator
    content: str
    round: int = 0
    kind: str = "text"  # text | observation | idea | question | verdict

    @property
    def role(self) -> str:
        return "assistant" if self.origin == "researcher" else "user"


@dataclass
class ToolEvent:
    round: int
    call: ToolCall | None
    rendered: str
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "tool": self.call.tool if self.call else None,
            "args": self.call.args if self.call else None,
            "rendered": self.rendered,
            "error": self.error,
        }


@dataclass
class SessionLog:
    """Every turn, tool event and re-prompt of one researcher session."""

    turns: list[Turn] = field(default_factory=list)
    tool_events: list[ToolEvent] = field(default_factory=list)
    reprompts: list[dict] = field(default_factory=list)

    def exploration_notes(self, limit_chars: int = 6000) -> str:
        """Compact record of tool observations for later prompts, newest kept."""
        lines = []
        for ev in self.tool_events:
            if ev.call is None:
                continue
            head = f"[{ev.call.tool} {json.dumps(ev.call.args, ensure_ascii=False)}]"
            lines.append(f"{head}\n{ev.rendered}")
        text = "\n\n".join(lines)
        if len(text) > limit_chars:
            text = "[earlier notes elided]\n" + text[-limit_chars:]
        return text or "(no tool results)"

    def to_dict(self) -> dict:
        return {
            "turns": [asdict(t) for t in self.turns],
            "tool_events": [e.to_dict() for e in self.tool_events],
            "reprompts": self.reprompts,
        }


ELIDED = "[observation elided to fit the context budget]"


def fit_context(turns: list[Turn], budget_tokens: int) -> list[ChatMessage]:
    """Chat messages for ``turns`` trimmed to ``budget_tokens``.

    The first turn (the task prompt) and the last two turns stay verbatim.
    Oldest tool observations are elided first, then the oldest exchanges
    are dropped.
    """
    turns = list(turns)
    size = lambda ts: sum(estimate_tokens(t.content) + 4 for t in ts)  # noqa: E731
    protected = {0, len(turns) - 1, len(turns) - 2}
    i = 1
    while size(turns) > budget_tokens and i < len(turns):
        if i not in protected and turns[i].kind == "observation" and turns[i].content != ELIDED:
            turns[i] = replace(turns[i], content=ELIDED)
        i += 1
    while size(turns) > budget_tokens and len(turns) > 3:
        del turns[1]
    messages: list[ChatMessage] = []
    for t in turns:
        # Merge consecutive same-role turns so roles alternate.
        if messages and messages[-1].role == t.role:
            messages[-1] = ChatMessage(t.role, messages[-1].content + "\n\n" + t.content)
        else:
            messages.append(ChatMessage(t.role, t.content))
    return messages


# -- researcher loop -----------------------------------------------------------


def _researcher_loop(
    turns: list[Turn],
    llm,
    tools: Toolbox,
    *,
    budget: int,
    max_reprompts: int,
    log: SessionLog,
    round_no: int,
    revision: int,
    context_tokens: int,
    tag: str,
) -> tuple[IdeaDocument, str]:
    """Alternate researcher replies and tool results until a valid idea arrives."""
    calls = reprompts = idle = 0
    while True:
        req = ChatRequest(
            fit_context(turns, context_tokens),
            temperature=DEFAULT_TEMPERATURE["researcher"],
            tag=tag,
        )
        reply = llm.complete(req)
        turns.append(Turn("researcher", reply, round_no))
        log.turns.append(turns[-1])
        try:
            call, call_error = parse_tool_call(reply), None
        except ToolParseError as exc:
            call, call_error = None, str(exc)

        if call is not None:
            if calls >= budget:
                raise ExplorationError(f"tool budget of {budget} call(s) exhausted before an idea was produced", log)
            calls += 1
            result = tools.dispatch(call)
            log.tool_events.append(ToolEvent(round_no, call, result.rendered, result.error))
            note = f"Result of {call.tool}:\n{result.rendered}"
            if calls >= budget:
                note += "\n\nTool budget used up. Output the IDEA JSON now."
            turns.append(Turn("tool", note, round_no, "observation"))
            log.turns.append(turns[-1])
            continue

        if call_error is None and _looks_like_idea(reply):
            try:
                idea = validate_idea_json(reply, revision=revision)
            except IdeaValidationError as exc:
                reprompts += 1
                log.reprompts.append({"round": round_no, "errors": exc.errors})
                if reprompts > max_reprompts:
                    raise
                msg = "The IDEA JSON is invalid:\n- " + "\n- ".join(exc.errors) + "\nOutput the corrected IDEA JSON."
                turns.append(Turn("orchestrator", msg, round_no))
                log.turns.append(turns[-1])
                continue
            return idea, reply

        idle += 1
        if call_error is not None:
            log.tool_events.append(ToolEvent(round_no, None, "", call_error))
        if idle > MAX_IDLE_TURNS:
            raise ExplorationError("researcher produced neither a tool call nor an idea", log)
        if calls >= budget:
            nudge = "Tool budget used up. Output the IDEA JSON now."
        elif call_error is not None:
            nudge = f"Tool call error: {call_error}. Fix the call or output the IDEA JSON."
        else:
            nudge = "Continue: call one tool (ending with <CALL>) or output the IDEA JSON."
        turns.append(Turn("orchestrator", nudge, round_no))
        log.turns.append(turns[-1])


def explore(
    topic: str,
    llm,
    tools: Toolbox,
    *,
    budget: int = DEFAULT_TOOL_BUDGET,
    max_reprompts: int = DEFAULT_REPROMPTS,
    previous_ideas: list[IdeaDocument] = (),
    context_tokens: int = DEFAULT_CONTEXT_TOKENS,
) -> tuple[SessionLog, IdeaDocument]:
    """Exploration phase: tool-driven research ending in revision 0 of an idea."""
    if budget < 1:
        raise ValueError("exploration needs a budget of at least one tool call")
    previous = ""
    if previous_ideas:
        titles = "\n".join(f"- {i.title}" for i in previous_ideas)
        previous = f"\nYour earlier ideas on this topic (propose something different):\n{titles}\n"
    prompt = render(
        "researcher",
        topic=topic,
        tools=render("tools"),
        idea_format=render("idea_format"),
        previous=previous,
    )
    log = SessionLog()
    turns = [Turn("system", prompt)]
    log.turns.append(turns[0])
    idea, _ = _researcher_loop(
        turns, llm, tools,
        budget=budget, max_reprompts=max_reprompts, log=log,
        round_no=0, revision=0, context_tokens=context_tokens, tag="explore",
    )
    return log, resolve_groundings(idea, tools.graph)


def researcher_revise(
    idea: IdeaDocument,
    question: str,
    llm,
    tools: Toolbox,
    budget: int = DEFAULT_REVISION_BUDGET,
    *,
    topic: str = "",
    exploration: SessionLog | None = None,
    log: SessionLog | None = None,
    round_no: int = 0,
    max_reprompts: int = DEFAULT_REPROMPTS,
    context_tokens: int = DEFAULT_CONTEXT_TOKENS,
) -> IdeaDocument:
    """Answer one mentor question and return the next revision of the idea."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    prompt = render(
        "revise",
        topic=topic,
        tools=render("tools"),
        idea_format=render("idea_format"),
        exploration=exploration.exploration_notes() if exploration else "(none)",
        revision=idea.revision,
        idea=idea.to_json(),
        question=question,
    )
    log = log if log is not None else SessionLog()
    turns = [Turn("system", prompt, round_no)]
    log.turns.append(turns[0])
    if budget == 0:
        turns.append(Turn("orchestrator", "No tool calls are available this round. Output the revised IDEA JSON.", round_no))
    revised, _ = _researcher_loop(
        turns, llm, tools,
        budget=budget, max_reprompts=max_reprompts, log=log,
        round_no=round_no, revision=idea.revision + 1, context_tokens=context_tokens,
        tag=f"revise:{round_no}",
    )
    return resolve_groundings(revised, tools.graph)


# -- mentor --------------------------------------------------------------------


class Axis(str, Enum):
    INNOVATIVENESS = "Innovativeness"
    RATIONALITY = "Rationality"
    FEASIBILITY = "Feasibility"


AXIS_SCHEDULE = (Axis.INNOVATIVENESS, Axis.RATIONALITY, Axis.FEASIBILITY)


class Decision(str, Enum):
    CONTINUE = "Continue"
    ACCEPT = "Accept"
    REJECT = "Reject"
    ROUND_LIMIT = "RoundLimit"


ACCEPT_MARK, REJECT_MARK = "<ACCEPT>", "<REJECT>"

_AXIS_WORDS = (
    (Axis.INNOVATIVENESS, re.compile(r"innovat|novel", re.IGNORECASE)),
    (Axis.RATIONALITY, re.compile(r"rational", re.IGNORECASE)),
    (Axis.FEASIBILITY, re.compile(r"feasib", re.IGNORECASE)),
)
_DECLARED = re.compile(r"(?:aspect|focus)\s*[:\-]\s*\**\s*(\w+)", re.IGNORECASE)
_QUESTIONS = re.compile(r"questions?\s*:\s*(.*?)(?=final\s+decision|\Z)", re.IGNORECASE | re.DOTALL)


@dataclass(frozen=True)
class MentorTurn:
    axis: Axis
    question: str
    decision: Decision
    round: int = 0
    axis_declared: bool = False
    raw: str = ""

    def __post_init__(self) -> None:
        if self.decision in (Decision.ACCEPT, Decision.REJECT) and self.question:
            raise ValueError("a terminal turn carries a verdict, not a question")


def _classify_axis(text: str) -> Axis | None:
    m = _DECLARED.search(text)
    if m:
        for axis, pattern in _AXIS_WORDS:
            if pattern.match(m.group(1)):
                return axis
    first = None
    for axis, pattern in _AXIS_WORDS:
        hit = pattern.search(text)
        if hit and (first is None or hit.start() < first[0]):
            first = (hit.start(), axis)
    return first[1] if first else None


def parse_mentor_reply(reply: str, round_no: int) -> MentorTurn:
    has_accept, has_reject = ACCEPT_MARK in reply, REJECT_MARK in reply
    if has_accept and has_reject:
        raise AmbiguousVerdict("mentor reply contains both <ACCEPT> and <REJECT>")
    axis = _classify_axis(reply)
    declared = axis is not None
    if axis is None:
        axis = AXIS_SCHEDULE[(max(round_no, 1) - 1) % 3]
    if has_accept or has_reject:
        decision = Decision.ACCEPT if has_accept else Decision.REJECT
        return MentorTurn(axis, "", decision, round_no, declared, reply)
    m = _QUESTIONS.search(reply)
    question = m.group(1).strip() if m and m.group(1).strip() else reply.strip()
    return MentorTurn(axis, question, Decision.CONTINUE, round_no, declared, reply)


@dataclass
class Round:
    index: int
    mentor: MentorTurn
    tool_events: list[ToolEvent] = field(default_factory=list)
    idea: IdeaDocument | None = None
    response: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "mentor": {
                "axis": self.mentor.axis.value,
                "question": self.mentor.question,
                "decision": self.mentor.decision.value,
                "axis_declared": self.mentor.axis_declared,
                "raw": self.mentor.raw,
            },
            "tool_events": [e.to_dict() for e in self.tool_events],
            "idea": self.idea.to_dict() if self.idea else None,
            "response": self.response,
        }


@dataclass
class DialogueTranscript:
    topic: str
    initial_idea: IdeaDocument
    max_rounds: int
    rounds: list[Round] = field(default_factory=list)
    stop_reason: Decision | None = None
    verdict: Decision | None = None
    final_turn: MentorTurn | None = None
    exploration: SessionLog | None = None
    turns: list[Turn] = field(default_factory=list)
    seeds: dict = field(default_factory=dict)

    @property
    def final_idea(self) -> IdeaDocument:
        for r in reversed(self.rounds):
            if r.idea is not None:
                return r.idea
        return self.initial_idea

    @property
    def discarded(self) -> bool:
        return self.verdict is not Decision.ACCEPT

    def history(self) -> str:
        parts = []
        for r in self.rounds:
            if r.mentor.decision is Decision.CONTINUE:
                parts.append(f"Round {r.index} supervisor ({r.mentor.axis.value}): {r.mentor.question}")
            if r.idea is not None:
                answer = r.response or "(no comment)"
                parts.append(f"Round {r.index} student: {answer}\n(idea revised to revision {r.idea.revision})")
        return "\n\n".join(parts) or "(this is the first round)"

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "seeds": self.seeds,
            "max_rounds": self.max_rounds,
            "stop_reason": self.stop_reason.value if self.stop_reason else None,
            "verdict": self.verdict.value if self.verdict else None,
            "discarded": self.discarded,
            "initial_idea": self.initial_idea.to_dict(),
            "final_idea": self.final_idea.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "final_turn": None if self.final_turn is None else {
                "decision": self.final_turn.decision.value, "raw": self.final_turn.raw,
            },
            "exploration": self.exploration.to_dict() if self.exploration else None,
            "turns": [asdict(t) for t in self.turns],
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _strip_json(reply: str) -> str:
    text = reply
    for _, _, start, end in reversed(fenced_blocks(reply)):
        text = text[:start] + text[end:]
    return text.replace("IDEA JSON:", "").strip()


def _trim_history(history: str, budget_tokens: int) -> str:
    if estimate_tokens(history) <= budget_tokens:
        return history
    keep = int(budget_tokens * 4 / 1.1)
    return "[earlier discussion elided]\n" + history[-keep:]


def mentor_turn(
    idea: IdeaDocument,
    transcript: DialogueTranscript,
    llm,
    round_no: int,
    max_rounds: int,
    *,
    clock: str | None = None,
    context_tokens: int = DEFAULT_CONTEXT_TOKENS,
) -> MentorTurn:
    if round_no > max_rounds:
        raise ValueError("round exceeds max_rounds")
    base = render(
        "mentor",
        clock=f"The current time is: {clock}\n" if clock else "",
        max_rounds=max_rounds,
        round=round_no,
        topic=transcript.topic,
        idea=idea.to_json(),
        history="",
    )
    history = _trim_history(transcript.history(), max(context_tokens - estimate_tokens(base) - 512, 256))
    prompt = base.rstrip("\n") + "\n" + history + "\n"
    reply = llm.complete(ChatRequest([ChatMessage("user", prompt)], temperature=DEFAULT_TEMPERATURE["mentor"], tag=f"mentor:{round_no}"))
    transcript.turns.append(Turn("mentor", reply, round_no, "question"))
    return parse_mentor_reply(reply, round_no)


def final_verdict(
    idea: IdeaDocument, transcript: DialogueTranscript, llm, *, context_tokens: int = DEFAULT_CONTEXT_TOKENS
) -> MentorTurn:
    """One forced verdict request at the round limit; no marker counts as a rejection."""
    base = render("verdict", topic=transcript.topic, idea=idea.to_json(), history="")
    history = _trim_history(transcript.history(), max(context_tokens - estimate_tokens(base) - 512, 256))
    reply = llm.complete(
        ChatRequest([ChatMessage("user", base.rstrip("\n") + "\n" + history + "\n")],
                    temperature=DEFAULT_TEMPERATURE["mentor"], tag="mentor:verdict")
    )
    round_no = transcript.max_rounds + 1
    transcript.turns.append(Turn("mentor", reply, round_no, "verdict"))
    try:
        turn = parse_mentor_reply(reply, round_no)
    except AmbiguousVerdict:
        turn = None
    if turn is None or turn.decision is Decision.CONTINUE:
        return MentorTurn(AXIS_SCHEDULE[0], "", Decision.REJECT, round_no, False, reply)
    return turn


def deliberate(
    idea: IdeaDocument,
    researcher_llm,
    mentor_llm,
    tools: Toolbox,
    *,
    topic: str,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    exploration: SessionLog | None = None,
    tool_budget: int = DEFAULT_REVISION_BUDGET,
    clock: str | None = None,
    max_reprompts: int = DEFAULT_REPROMPTS,
    context_tokens: int = DEFAULT_CONTEXT_TOKENS,
) -> DialogueTranscript:
    """Question / revise rounds until the mentor decides or the round limit is hit.

    Round k: the mentor questions revision k-1; on Continue the researcher
    returns revision k. At the limit the mentor is asked once for a verdict.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    transcript = DialogueTranscript(topic, idea, max_rounds, exploration=exploration)
    current = idea
    try:
        for k in range(1, max_rounds + 1):
            turn = mentor_turn(current, transcript, mentor_llm, k, max_rounds, clock=clock, context_tokens=context_tokens)
            if turn.decision is not Decision.CONTINUE:
                transcript.rounds.append(Round(k, turn))
                transcript.stop_reason = transcript.verdict = turn.decision
                return transcript
            log = SessionLog()
            revised = researcher_revise(
                current, turn.question, researcher_llm, tools, tool_budget,
                topic=topic, exploration=exploration, log=log, round_no=k,
                max_reprompts=max_reprompts, context_tokens=context_tokens,
            )
            response = _strip_json(next(t.content for t in reversed(log.turns) if t.origin == "researcher"))
            transcript.turns.extend(t for t in log.turns if t.origin != "system")
            transcript.rounds.append(Round(k, turn, log.tool_events, revised, response))
            current = revised
        transcript.stop_reason = Decision.ROUND_LIMIT
        transcript.final_turn = final_verdict(current, transcript, mentor_llm, context_tokens=context_tokens)
        transcript.verdict = transcript.final_turn.decision
        return transcript
    except (LLMError, AmbiguousVerdict, IdeaValidationError, ExplorationError) as exc:
        raise DeliberationError(f"deliberation stopped: {exc}", transcript) from exc


def accepted_ideas(transcripts: list[DialogueTranscript]) -> list[IdeaDocument]:
    """Final ideas of accepted sessions; rejected ones are dropped."""
    return [t.final_idea for t in transcripts if not t.discarded]
