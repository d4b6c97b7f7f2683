"""DOT snapshots, JSONL event logs and replay of logged runs."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Iterable

from .graph import MSGraph

__all__ = ["apply_event", "read_events", "replay", "to_dot", "write_dot", "write_events"]


def _quote(s: str) -> str:
    return '"' + s.replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(graph: MSGraph, name: str = "msg") -> str:
    """Graphviz rendering: solo vertices are circles, compound ones diamonds.

    Labeled vertices carry a ``*`` and their label; tooltips hold the
    auxiliary data.
    """
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for vid in sorted(graph.vertices):
        v = graph.vertices[vid]
        shape = "circle" if v.is_solo else "diamond"
        text = f"v{vid}"
        if v.label is not None:
            text += f"*\n{v.label}"
        if not v.is_solo:
            text += f"\nx{v.members}"
        aux = graph.aux(vid)
        tip = ", ".join(f"{k}={getattr(aux, k)}" for k in aux.__dataclass_fields__) if aux else ""
        seg = " ".join(f"[{s},{'' if e is None else e}]" for s, e, _ in v.tracklet.segments)
        attrs = [f"shape={shape}", f"label={_quote(text)}", f"tooltip={_quote(tip + ' ' + seg)}"]
        if vid in graph.active:
            attrs.append("style=dashed")
        lines.append(f"  v{vid} [{', '.join(attrs)}];")
    for p in sorted(graph.vertices):
        for c in graph.vertices[p].children:
            lines.append(f"  v{p} -> v{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(graph: MSGraph, path: str | Path, name: str = "msg") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_dot(graph, name))
    return path


def write_events(events: Iterable[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in events:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def read_events(path: str | Path) -> list[dict]:
    out = []
    with Path(path).open() as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{n}: {exc}") from None
    return out


def apply_event(g: MSGraph, rec: dict) -> None:
    """Re-apply one logged event; raises if the graph diverges from the log."""
    kind, t, ids = rec["kind"], rec["t"], rec["vertex_ids"]
    g.tick(max(g.now, t))
    if kind == "add":
        got = g.add_vertex(t, members=rec.get("members", 1))
        expected = ids[0]
    elif kind == "close":
        g.close_vertex(ids[0], t)
        return
    elif kind == "join":
        got = g.record_join(ids[:-1], t)
        expected = ids[-1]
    elif kind == "split":
        got = g.record_split(ids[0], t, rec["shares"])
        expected = ids[1:]
    elif kind == "edges":
        g.add_ambiguity_edges(ids[0], ids[1:], merge=rec.get("merge", True))
        return
    elif kind == "merge":
        g.merge_chains(ids)
        return
    elif kind == "merge_head":
        g.merge_solo_chain(ids[0])
        return
    elif kind == "label":
        got = g.label_vertex(ids[0], rec["label"]).as_dict()
        expected = rec["outcome"]
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    if got != expected:
        raise ValueError(f"replay diverged at {rec}: got {got}")


def replay(events: list[dict],
           on_event: Callable[[MSGraph, dict], None] | None = None) -> MSGraph:
    """Rebuild a graph from its event log."""
    if not events or events[0].get("kind") != "config":
        raise ValueError("event log must start with a config record")
    cfg = events[0]
    g = MSGraph(refined=cfg["refined"], max_gap=cfg["max_gap"], matching=cfg["matching"],
                untangle=cfg["untangle"])
    for rec in events[1:]:
        apply_event(g, rec)
        if on_event is not None:
            on_event(g, rec)
    return g
