"""Scoring a finished run against ground truth."""
from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .graph import MSGraph
    from .simulator import GroundTruth

__all__ = [
    "components",
    "compute_m",
    "compute_m_by_observation",
    "compute_njs",
    "coverage",
    "ideal_bound",
    "is_ideal",
    "piece_lengths",
]


def _extension(graph: MSGraph, vid: int) -> list[int]:
    """The labeled vertex plus its forward and backward labeling chains.

    Forward steps go to a sole child, backward steps to a sole parent.
    """
    verts = graph.vertices
    out = [vid]
    seen = {vid}
    for attr in ("children", "parents"):
        cur = verts[vid]
        while len(getattr(cur, attr)) == 1:
            nxt = next(iter(getattr(cur, attr)))
            if nxt in seen:
                break
            seen.add(nxt)
            out.append(nxt)
            cur = verts[nxt]
    return out


def coverage(graph: MSGraph, truth: GroundTruth | None = None) -> set[tuple[int, object]]:
    """Every (piece, target) pair whose identity the graph has established.

    With ``truth`` each pair is checked against the recorded owners, so an
    unsound deduction raises instead of inflating the score.
    """
    covered = set()
    for vid, v in graph.vertices.items():
        if v.label is None:
            continue
        for w in _extension(graph, vid):
            for piece in graph.vertices[w].pieces:
                covered.add((piece, v.label))
    if truth is not None:
        for piece, z in covered:
            owners = truth.piece_owners.get(piece)
            if owners is None or z not in owners:
                raise AssertionError(f"piece {piece} credited to {z!r}, owners are {owners}")
    return covered


def piece_lengths(graph: MSGraph) -> dict[int, int]:
    out = {}
    for v in graph.vertices.values():
        for s, e, piece in v.tracklet.segments:
            e = graph.now if e is None else e
            length = e - s + 1
            if out.setdefault(piece, length) != length:
                raise AssertionError(f"piece {piece} has inconsistent extents")
    return out


def compute_m(graph: MSGraph, truth: GroundTruth) -> float:
    """Labeled fraction of all per-target tracklet time."""
    lengths = piece_lengths(graph)
    total = sum(lengths[p] * len(owners) for p, owners in truth.piece_owners.items())
    if total == 0:
        return 0.0
    covered = sum(lengths[p] for p, _ in coverage(graph, truth))
    return covered / total


def compute_m_by_observation(graph: MSGraph, truth: GroundTruth) -> float:
    """The same fraction, counted one observed (time, target) pair at a time."""
    obs = truth.observations
    if not obs:
        return 0.0
    covered = coverage(graph)
    return sum((piece, z) in covered for _, z, piece in obs) / len(obs)


def compute_njs(truth: GroundTruth) -> int:
    """Number of times any target goes back to walking alone after a group."""
    n = 0
    for entry in truth.log:
        if entry[1] == "split":
            n += sum(1 for part in entry[3] if len(part) == 1)
    return n


def components(graph: MSGraph) -> list[set[int]]:
    seen, out = set(), []
    for vid in graph.vertices:
        if vid in seen:
            continue
        comp = {vid}
        queue = deque([vid])
        while queue:
            v = graph.vertices[queue.popleft()]
            for w in (*v.parents, *v.children):
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        out.append(comp)
    return out


def _targets_in(graph: MSGraph, comp: set[int]) -> int:
    return sum(graph.vertices[v].members for v in comp if not graph.vertices[v].parents)


def ideal_bound(graph: MSGraph) -> int:
    """Sum over connected components of 2n-1, n being the targets in the component."""
    return sum(2 * _targets_in(graph, c) - 1 for c in components(graph))


def is_ideal(graph: MSGraph) -> bool:
    """Only disconnected labeled solo vertices remain."""
    return all(v.is_solo and v.label is not None and not v.parents and not v.children
               for v in graph.vertices.values())
