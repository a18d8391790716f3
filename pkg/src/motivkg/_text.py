"""Fenced-block and JSON extraction shared by the parsers."""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from string import Template

_FENCE = re.compile(r"```([^\n`]*)\n(.*?)```", re.DOTALL)


def fenced_blocks(text: str) -> list[tuple[str, str, int, int]]:
    """(info string, body, start, end) for every closed ``` fence, in order."""
    return [(m.group(1).strip(), m.group(2), m.start(), m.end()) for m in _FENCE.finditer(text or "")]


def first_json_block(text: str) -> tuple[object | None, str | None]:
    """Decode the first fenced block that holds JSON.

    Returns ``(value, None)`` on success or ``(None, reason)``.
    Blocks tagged ``json`` are preferred over untagged ones.
    """
    blocks = fenced_blocks(text)
    ordered = [b for b in blocks if b[0].lower() == "json"] + [b for b in blocks if b[0].lower() != "json"]
    reason = "no fenced JSON block found"
    for info, body, _, _ in ordered:
        if info and info.lower() != "json":
            continue
        try:
            return json.loads(body), None
        except json.JSONDecodeError as exc:
            reason = f"invalid JSON in fenced block: {exc}"
    return None, reason


@lru_cache(maxsize=None)
def prompt(name: str) -> Template:
    """Load a versioned prompt asset (``prompts/<name>.txt``) as a Template."""
    raw = resources.files("motivkg").joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")
    # First line is a "# version: N" header.
    body = raw.split("\n", 1)[1] if raw.startswith("# version") else raw
    return Template(body)


def render(name: str, **values) -> str:
    return prompt(name).substitute(**values).strip() + "\n"
