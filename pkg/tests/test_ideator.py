import json

import pytest

from helpers import idea_reply, index_for, make_idea, small_graph
from motivkg.embed import HashEmbedder
from motivkg.ideator import (
    ELIDED,
    IDEA_KEYS,
    AmbiguousVerdict,
    Axis,
    Decision,
    DeliberationError,
    ExplorationError,
    IdeaDocument,
    IdeaValidationError,
    Turn,
    accepted_ideas,
    deliberate,
    explore,
    fit_context,
    parse_mentor_reply,
    researcher_revise,
    validate_idea_json,
)
from motivkg.llm import mock_gateway
from motivkg.tools import StubLiterature, Toolbox

CALL = '```function call\nconducting node_search(search_query="ideas")\nSpecial token: <CALL>\n```'
RANDOM_CALL = "```function call\nconducting get_random_nodes(number=2)\nSpecial token: <CALL>\n```"


@pytest.fixture
def tools():
    g = small_graph()
    emb = HashEmbedder(32)
    return Toolbox(g, index_for(g, emb), emb, StubLiterature([{"title": "T", "year": 2020, "authors": ["A B"]}]))


def test_validate_accepts_exact_schema():
    idea = validate_idea_json(idea_reply())
    assert list(idea.fields()) == list(IDEA_KEYS)
    assert idea.groundings[0].href == "kg:challenge:Suboptimal initial output generation in language models"
    assert idea.groundings[0].field == "Motivation"


@pytest.mark.parametrize(
    "idea,fragment",
    [
        (make_idea(Extra="x"), "extra key: Extra"),
        (make_idea(Name="Has Spaces"), "Name must be"),
        (make_idea(Name="UPPER_case"), "Name must be"),
        ({k: v for k, v in make_idea().items() if k != "Method"}, "missing key: Method"),
        (make_idea(Abstract="  "), "empty or non-string value: Abstract"),
        (make_idea(Title=3), "empty or non-string value: Title"),
    ],
)
def test_validate_rejects(idea, fragment):
    with pytest.raises(IdeaValidationError) as info:
        validate_idea_json(idea_reply(idea))
    assert any(fragment in e for e in info.value.errors)


def test_validate_reports_every_error():
    bad = make_idea(Name="Bad Name", Extra="x")
    del bad["Title"]
    with pytest.raises(IdeaValidationError) as info:
        validate_idea_json(idea_reply(bad))
    assert len(info.value.errors) == 3


def test_escaped_anchor_and_method_alias_resolve(tools):
    idea = make_idea(
        Motivation='see &lt;a href="kg:challenge:Suboptimal initial output generation in language models">x&lt;/a>',
        Method='<a href="kg:method:Knowledge distillation from a large teacher into students">kd</a> and '
        '<a href="kg:solution:No such node">?</a> <a href="https://example.org">web</a>',
    )
    _, doc = explore("t", mock_gateway([idea_reply(idea)]), tools)
    assert [(g.field, g.resolved) for g in doc.groundings] == [("Motivation", True), ("Method", True), ("Method", False)]


def test_idea_document_roundtrip():
    doc = validate_idea_json(idea_reply(), revision=2)
    back = IdeaDocument.from_dict(json.loads(json.dumps(doc.to_dict())))
    assert back == doc


def test_explore_runs_tools_then_returns_idea(tools):
    gw = mock_gateway([CALL, RANDOM_CALL, idea_reply()])
    log, idea = explore("idea generation", gw, tools, budget=5)
    assert [e.call.tool for e in log.tool_events] == ["node_search", "get_random_nodes"]
    assert idea.revision == 0 and idea.groundings[0].resolved
    # the tool result is fed back as a user-side observation
    last = gw.provider.requests[-1].messages
    assert last[-1].role == "user" and last[-1].content.startswith("Result of get_random_nodes")


def test_explore_budget_allows_final_answer_but_not_more_calls(tools):
    log, _ = explore("t", mock_gateway([CALL, idea_reply()]), tools, budget=1)
    assert len(log.tool_events) == 1
    with pytest.raises(ExplorationError):
        explore("t", mock_gateway([CALL, CALL]), tools, budget=1)


def test_explore_reprompts_then_gives_up(tools):
    bad = idea_reply(make_idea(Name="Bad Name"))
    log, idea = explore("t", mock_gateway([bad, idea_reply()]), tools)
    assert len(log.reprompts) == 1 and idea.name == "graph_guided_ideation"
    with pytest.raises(IdeaValidationError):
        explore("t", mock_gateway([bad] * 3), tools, max_reprompts=2)


def test_explore_idle_and_parse_errors_get_nudged(tools):
    broken = '```function call\nconducting node_search(bogus="x")\nSpecial token: <CALL>\n```'
    gw = mock_gateway(["let me think", broken, idea_reply()])
    log, _ = explore("t", gw, tools)
    notes = [t.content for t in log.turns if t.origin == "orchestrator"]
    assert "Continue:" in notes[0] and "Tool call error" in notes[1]
    with pytest.raises(ExplorationError):
        explore("t", mock_gateway(["hmm"] * 10), tools)


def test_previous_ideas_listed_in_prompt(tools):
    prev = validate_idea_json(idea_reply())
    gw = mock_gateway([idea_reply()])
    explore("t", gw, tools, previous_ideas=[prev])
    assert "Graph guided ideation" in gw.provider.requests[0].messages[0].content


def test_fit_context_elides_observations_first():
    turns = [Turn("system", "task"), Turn("researcher", "call"), Turn("tool", "x" * 4000, kind="observation"),
             Turn("researcher", "call 2"), Turn("tool", "short", kind="observation")]
    msgs = fit_context(turns, 200)
    assert msgs[0].content == "task" and ELIDED in msgs[2].content and msgs[-1].content == "short"
    # roles alternate after merging
    assert all(a.role != b.role for a, b in zip(msgs, msgs[1:]))


def test_fit_context_drops_oldest_when_needed():
    turns = [Turn("system", "task")] + [Turn("researcher" if i % 2 else "tool", "y" * 400) for i in range(1, 9)]
    msgs = fit_context(turns, 400)
    assert msgs[0].content.startswith("task") and len(msgs) <= 3


@pytest.mark.parametrize(
    "reply,decision,axis",
    [
        ("Aspect: Feasibility\nQuestions: How will you get the data?", Decision.CONTINUE, Axis.FEASIBILITY),
        ("Is it novel enough compared with prior work?", Decision.CONTINUE, Axis.INNOVATIVENESS),
        ("Looks good. I decide to:<ACCEPT>", Decision.ACCEPT, Axis.INNOVATIVENESS),
        ("No. I decide to:<REJECT>", Decision.REJECT, Axis.INNOVATIVENESS),
    ],
)
def test_parse_mentor_reply(reply, decision, axis):
    turn = parse_mentor_reply(reply, 1)
    assert turn.decision is decision and turn.axis is axis
    if decision is Decision.CONTINUE:
        assert turn.question


def test_undeclared_axis_follows_schedule():
    assert parse_mentor_reply("Why?", 2).axis is Axis.RATIONALITY
    assert not parse_mentor_reply("Why?", 2).axis_declared


def test_both_markers_is_ambiguous():
    with pytest.raises(AmbiguousVerdict):
        parse_mentor_reply("<ACCEPT> or <REJECT>", 1)


def test_revise_bumps_revision_and_sees_question(tools):
    idea = validate_idea_json(idea_reply())
    gw = mock_gateway([idea_reply(make_idea(Method="Better method."))])
    new = researcher_revise(idea, "Why this dataset?", gw, tools, 2, topic="t")
    assert new.revision == 1 and new.method == "Better method."
    assert "Why this dataset?" in gw.provider.requests[0].messages[0].content


def test_revise_with_zero_budget_refuses_tools(tools):
    idea = validate_idea_json(idea_reply())
    with pytest.raises(ExplorationError):
        researcher_revise(idea, "q", mock_gateway([CALL, CALL]), tools, 0, topic="t")


def test_deliberate_accept_after_two_questions(tools):
    idea = validate_idea_json(idea_reply())
    mentor = mock_gateway(["Aspect: Innovativeness\nQuestions: Q1?", "Aspect: Rationality\nQuestions: Q2?", "I decide to:<ACCEPT>"])
    researcher = mock_gateway([idea_reply(make_idea(Method="m1")), CALL, idea_reply(make_idea(Method="m2"))])
    t = deliberate(idea, researcher, mentor, tools, topic="t", max_rounds=5)
    assert t.verdict is Decision.ACCEPT and t.stop_reason is Decision.ACCEPT
    assert [r.index for r in t.rounds] == [1, 2, 3]
    assert t.final_idea.method == "m2" and t.final_idea.revision == 2
    assert not t.discarded and accepted_ideas([t]) == [t.final_idea]
    assert len(t.rounds[1].tool_events) == 1


def test_deliberate_round_limit_forces_single_verdict(tools):
    idea = validate_idea_json(idea_reply())
    mentor = mock_gateway(["Questions: a?", "Questions: b?", "Hmm, still unsure."])
    researcher = mock_gateway([idea_reply(), idea_reply()])
    t = deliberate(idea, researcher, mentor, tools, topic="t", max_rounds=2)
    assert t.stop_reason is Decision.ROUND_LIMIT and t.verdict is Decision.REJECT
    assert mentor.provider.calls == 3 and t.discarded
    assert accepted_ideas([t]) == []


def test_deliberate_reject(tools):
    idea = validate_idea_json(idea_reply())
    t = deliberate(idea, mock_gateway(["unused"]), mock_gateway(["I decide to:<REJECT>"]), tools, topic="t")
    assert t.verdict is Decision.REJECT and t.final_idea == idea and t.discarded


def test_deliberation_error_keeps_partial_transcript(tools):
    idea = validate_idea_json(idea_reply())
    mentor = mock_gateway(["Questions: a?", "<ACCEPT> <REJECT>"])
    with pytest.raises(DeliberationError) as info:
        deliberate(idea, mock_gateway([idea_reply()]), mentor, tools, topic="t")
    assert len(info.value.transcript.rounds) == 1


def test_mentor_prompt_carries_round_and_clock(tools):
    idea = validate_idea_json(idea_reply())
    mentor = mock_gateway(["I decide to:<ACCEPT>"])
    deliberate(idea, mock_gateway(["x"]), mentor, tools, topic="graph ideas", max_rounds=4, clock="2025-01-01 10:00")
    prompt = mentor.provider.requests[0].messages[0].content
    assert "about 4 rounds; this is round 1." in prompt
    assert "2025-01-01 10:00" in prompt and "graph ideas" in prompt


def test_transcript_save(tmp_path, tools):
    idea = validate_idea_json(idea_reply())
    t = deliberate(idea, mock_gateway([idea_reply()]), mock_gateway(["Questions: a?", "<ACCEPT>"]), tools, topic="t")
    t.save(tmp_path / "t.json")
    data = json.loads((tmp_path / "t.json").read_text())
    assert data["verdict"] == "Accept" and data["rounds"][0]["mentor"]["question"] == "a?"
