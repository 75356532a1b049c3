"""Reasoning traces and their renderers.

A trace is a tree with one node per evaluated goal. Each node carries
an ``o`` (success) or ``x`` (failure) outcome; edges to children are
either condition edges (solid, the conclusion-condition relation of a
rule) or exception edges (dotted, the exception relation of a
conclusion). Three renderers are provided: an indented text tree, DOT
for graph tooling, and a versioned JSON form that round-trips.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

from .ast import Atom
from .parser import parse_atom

TRACE_VERSION = 1

#: Marker used in ``TraceNode.via`` when a goal matched a case fact.
FACT_MARKER = "fact"

# DOT node outline colours distinguishing outcomes.
SUCCESS_NODE_COLOR = "darkgreen"
FAILURE_NODE_COLOR = "firebrick"


class Outcome(Enum):
    """Result of evaluating one goal; rendered as ``o`` or ``x``."""

    SUCCESS = "o"
    FAILURE = "x"

    @property
    def glyph(self) -> str:
        return self.value


class EdgeKind(Enum):
    CONDITION = "condition"
    EXCEPTION = "exception"


@dataclass(frozen=True)
class TraceNode:
    """One evaluated goal instance.

    ``via`` names the rule that produced a success (or ``fact``);
    ``defeated`` marks a conclusion whose conditions held but which an
    exception overturned, in which case at least one exception child
    succeeded.
    """

    goal: Atom
    outcome: Outcome
    via: Optional[str] = None
    defeated: bool = False
    children: tuple[tuple[EdgeKind, "TraceNode"], ...] = ()
    note: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))


def iter_nodes(root: TraceNode) -> Iterator[tuple[TraceNode, Optional[EdgeKind]]]:
    """Preorder walk yielding (node, incoming edge kind); the root has None."""

    def walk(node: TraceNode, edge: Optional[EdgeKind]) -> Iterator[tuple[TraceNode, Optional[EdgeKind]]]:
        yield node, edge
        for kind, child in node.children:
            yield from walk(child, kind)

    return walk(root, None)


def render_text(root: TraceNode) -> str:
    """Indented tree; condition children are prefixed ``->``, exception
    children ``~>`` (echoing solid versus dotted edges)."""
    lines: list[str] = []

    def emit(node: TraceNode, edge: Optional[EdgeKind], depth: int) -> None:
        prefix = ""
        if edge is EdgeKind.CONDITION:
            prefix = "-> "
        elif edge is EdgeKind.EXCEPTION:
            prefix = "~> "
        parts = []
        if node.via is not None:
            parts.append(node.via)
        if node.note is not None:
            parts.append(node.note)
        if node.defeated:
            parts.append("defeated")
        annot = f" ({'; '.join(parts)})" if parts else ""
        lines.append(f"{'  ' * depth}{prefix}{node.goal} [{node.outcome.glyph}]{annot}")
        for kind, child in node.children:
            emit(child, kind, depth + 1)

    emit(root, None, 0)
    return "".join(line + "\n" for line in lines)


def _dot_escape(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r")


def render_dot(root: TraceNode) -> str:
    """Directed graph in DOT text form.

    One box per node labelled with the goal and its outcome glyph;
    condition edges are solid, exception edges dotted; node colour
    separates success from failure (see SUCCESS_NODE_COLOR and
    FAILURE_NODE_COLOR).
    """
    lines = ["digraph trace {", "  node [shape=box];"]
    counter = [0]

    def emit(node: TraceNode) -> str:
        node_id = f"n{counter[0]}"
        counter[0] += 1
        color = SUCCESS_NODE_COLOR if node.outcome is Outcome.SUCCESS else FAILURE_NODE_COLOR
        label = f"{_dot_escape(str(node.goal))}\\n{node.outcome.glyph}"
        lines.append(f'  {node_id} [label="{label}", color="{color}"];')
        for kind, child in node.children:
            child_id = emit(child)
            style = "solid" if kind is EdgeKind.CONDITION else "dotted"
            lines.append(f"  {node_id} -> {child_id} [style={style}];")
        return node_id

    emit(root)
    lines.append("}")
    return "".join(line + "\n" for line in lines)


def _node_to_obj(node: TraceNode) -> dict:
    return {
        "goal": str(node.goal),
        "outcome": node.outcome.glyph,
        "via": node.via,
        "defeated": node.defeated,
        "note": node.note,
        "children": [
            {"edge": kind.value, "node": _node_to_obj(child)} for kind, child in node.children
        ],
    }


def render_json(root: TraceNode) -> str:
    """Canonical JSON with stable key order; the root object carries a
    ``trace_version`` field ahead of the node fields."""
    obj: dict = {"trace_version": TRACE_VERSION}
    obj.update(_node_to_obj(root))
    return json.dumps(obj, indent=2)


def _node_from_obj(obj: dict) -> TraceNode:
    try:
        goal = parse_atom(obj["goal"])
        outcome = Outcome(obj["outcome"])
        children = tuple(
            (EdgeKind(child["edge"]), _node_from_obj(child["node"]))
            for child in obj["children"]
        )
        return TraceNode(
            goal=goal,
            outcome=outcome,
            via=obj["via"],
            defeated=bool(obj["defeated"]),
            children=children,
            note=obj["note"],
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed trace JSON: {exc}") from exc


def trace_from_json(text: str) -> TraceNode:
    """Parse render_json output back into an equal TraceNode tree."""
    obj = json.loads(text)
    if not isinstance(obj, dict) or obj.get("trace_version") != TRACE_VERSION:
        raise ValueError("unsupported or missing trace_version")
    return _node_from_obj(obj)
