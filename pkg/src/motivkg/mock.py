"""Deterministic rule-based stand-ins for every model role.

Each policy is a pure function of the request text, so pipelines driven by
them are reproducible even when sessions run concurrently. They understand
the package's own prompts and nothing more; use them for demos, offline
runs and tests.

Corpus convention for :func:`extractor`: the paper text carries lines
``Problem: <name> | <description>``, ``Challenge: ...`` and
``Solution: ...``; each Problem line opens a new triple.
"""

from __future__ import annotations

import hashlib
import json
import re

from .llm import ChatRequest

_LINE = re.compile(r"^\s*(Problem|Challenge|Solution)\s*:\s*(.+?)\s*\|\s*(.+?)\s*$", re.MULTILINE | re.IGNORECASE)
_STOP = {"for", "and", "the", "with", "from", "into", "over", "under", "using", "based", "via", "of", "in", "on", "to", "a", "an"}


def extractor(request: ChatRequest) -> str:
    text = request.prompt.split("Paper:", 1)[-1]
    triples, current = [], {}
    for kind, name, desc in _LINE.findall(text):
        kind = kind.lower()
        if kind == "problem":
            current = {}
        current[kind] = {"name": name, "description": desc}
        if kind == "solution" and len(current) == 3:
            triples.append(dict(current))
            del current["solution"]
    return "```json\n" + json.dumps({"triples": triples}, indent=1) + "\n```"


def _content_words(name: str) -> set[str]:
    return {w for w in re.findall(r"[a-z]+", name.lower()) if len(w) > 3 and w not in _STOP}


_NODE = re.compile(r"^- (.+?): ", re.MULTILINE)


def merger(request: ChatRequest) -> str:
    """Group the focal node with candidates sharing a content word with it."""
    prompt = request.messages[0].content
    kind = re.search(r"organise (\w+) nodes", prompt).group(1)
    focal_part, cand_part = prompt.split("Candidates:", 1)
    focal = _NODE.findall(focal_part)[0]
    if focal.startswith("Broader "):
        return '```json\n{"merge": false}\n```'
    words = _content_words(focal)
    candidates = [c for c in _NODE.findall(cand_part.split("If a parent", 1)[0]) if not c.startswith("Broader ")]
    shared = sorted({w for c in candidates for w in _content_words(c) & words})
    if not shared:
        return '```json\n{"merge": false}\n```'
    word = shared[0]
    children = [focal] + [c for c in candidates if word in _content_words(c)]
    decision = {
        "merge": True,
        "parent_name": f"Broader {word} {kind} theme",
        "parent_description": f"General {kind} theme covering work related to {word}.",
        "children": children,
    }
    return "```json\n" + json.dumps(decision) + "\n```"


def _call(tool: str, **args) -> str:
    parts = ", ".join(f"{k}={json.dumps(v)}" for k, v in args.items())
    return f"Next step.\n```function call\nconducting {tool}({parts})\nSpecial token: <CALL>\n```"


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")[:40] or "idea"


def researcher(request: ChatRequest) -> str:
    """Explore with node_search -> get_random_nodes, then write a grounded idea.

    When revising, run one semantic_search and append the answer to the method.
    """
    prompt = request.messages[0].content
    topic = re.search(r"Research topic: (.+)", prompt).group(1).strip()
    history = request.prompt
    results = history.count("Result of ")
    if "Supervisor's question:" in prompt:
        if results == 0:
            return _call("semantic_search", search_query=topic)
        idea = json.loads(prompt.split("```json\n", 2)[-1].split("\n```", 1)[0])
        question = prompt.split("Supervisor's question:", 1)[1].strip().splitlines()[0][:80]
        idea["Method"] += f" Clarification on '{question}': the step is justified by the retrieved literature."
        return "I addressed the question.\nIDEA JSON:\n```json\n" + json.dumps(idea, indent=1) + "\n```"
    if results == 0:
        return _call("node_search", search_query=topic)
    if results == 1:
        return _call("get_random_nodes", number=3)
    challenge = re.search(r"Challenge: (.+?): ", history)
    solution = re.search(r"Solution: (.+?): ", history)
    seed = int(hashlib.sha256(request.prompt.encode()).hexdigest()[:6], 16) % 1000
    ch = challenge.group(1) if challenge else "limited evidence"
    so = solution.group(1) if solution else "a transferred method"
    idea = {
        "Name": f"{_slug(topic)}_{seed}",
        "Title": f"Transferring {so} to {topic}",
        "Motivation": f'Work on {topic} faces <a href="kg:challenge:{ch}">{ch.lower()}</a>.',
        "Related Work": f"Prior graph entries on {topic} (Doe et al., 2024).",
        "Abstract": f"We adapt {so.lower()} to {topic}.",
        "Method": f'Apply <a href="kg:solution:{so}">{so.lower()}</a> step by step to {topic}.',
        "Experiments plan": "Compare against the strongest baseline with ablations of each component.",
        "Risk Factors and Limitations": "The transfer may not hold outside the source domain.",
    }
    return "IDEA JSON:\n```json\n" + json.dumps(idea, indent=1) + "\n```"


def mentor(accept_round: int = 2):
    """Mentor that asks questions until ``accept_round``, then accepts.

    Topics containing the word "reject" are rejected at that round instead.
    """

    def policy(request: ChatRequest) -> str:
        prompt = request.messages[0].content
        if "reached its round limit" in prompt:
            return "I decide to:<ACCEPT>"
        round_no = int(re.search(r"this is round (\d+)", prompt).group(1))
        topic = prompt.split("Your student works on:\n", 1)[1].split("\n", 1)[0]
        if round_no >= accept_round:
            return "I decide to:<REJECT>" if "reject" in topic.lower() else "I decide to:<ACCEPT>"
        aspects = ("Innovativeness", "Rationality", "Feasibility")
        aspect = aspects[(round_no - 1) % 3]
        return f"Aspect: {aspect}\nQuestions: Why is step {round_no} of the method effective for {topic}?"

    return policy


def judge(request: ChatRequest) -> str:
    """Scores from a hash of the idea; pairwise wins go to the longer method."""
    prompt = request.messages[0].content
    if "Winner: 1" in prompt:
        blocks = re.findall(r"```json\n(.*?)\n```", prompt, re.DOTALL)
        first, second = (json.loads(b) for b in blocks[:2])
        return "Winner: 1" if len(first["Method"]) >= len(second["Method"]) else "Winner: 2"
    h = hashlib.sha256(prompt.encode()).digest()
    return " / ".join(f"{5 + h[i] % 50 / 10:.1f}" for i in range(3))
