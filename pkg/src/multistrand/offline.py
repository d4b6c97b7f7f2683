"""Post-hoc offline solver used as a sanity check on the labeling bound.

The solver replays a scene with the camera never zooming, so the graph holds
every join and split and nothing else.  It then labels sources in order of
appearance and each target's final solo tracklet, skipping anything the graph
has already deduced.  On small components it must recover every trajectory
within ``2n - 1`` labelings, ``n`` being the targets of the component.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .graph import MSGraph
from .metrics import components, coverage
from .simulator import GroundTruth, ScenarioScript, Simulation

__all__ = ["ComponentCheck", "OfflineReport", "replay_unobstructed", "solve_offline"]

MAX_VERIFIABLE = 12


@dataclass
class ComponentCheck:
    vertices: int
    targets: int
    labelings: int
    recovered: bool

    @property
    def bound(self) -> int:
        return 2 * self.targets - 1

    @property
    def ok(self) -> bool:
        return self.recovered and self.labelings <= self.bound


@dataclass
class OfflineReport:
    checked: list = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checked)


def replay_unobstructed(script: ScenarioScript) -> tuple[MSGraph, GroundTruth]:
    """The graph a tracker would build if it never zoomed."""
    res = Simulation(script, camera=False, record=False).run()
    return res.graph, res.truth


def _verifiable(graph: MSGraph, comp: set[int], truth: GroundTruth) -> bool:
    if len(comp) > MAX_VERIFIABLE:
        return False
    verts = graph.vertices
    edges = sum(len(verts[v].children) for v in comp)
    if edges != len(comp) - 1:
        # undirected cycles make the brute-force deductions ambiguous
        return False
    last = {}
    for v in comp:
        for piece in verts[v].pieces:
            for z in truth.piece_owners[piece]:
                end = verts[v].tracklet.end
                if z not in last or end > last[z][0]:
                    last[z] = (end, v)
    return all(verts[v].is_solo for _, v in last.values())


def _owner(truth: GroundTruth, vert) -> object:
    (z,) = truth.piece_owners[vert.pieces[0]]
    return z


def solve_offline(graph: MSGraph, truth: GroundTruth) -> OfflineReport:
    """Greedily label each small component and check full recovery."""
    report = OfflineReport()
    for comp in components(graph):
        if not _verifiable(graph, comp, truth):
            report.skipped += 1
            continue
        g = graph.copy()
        g.record = False
        pieces = {p for v in comp for p in graph.vertices[v].pieces}
        need = {(p, z) for p in pieces for z in truth.piece_owners[p]}
        verts = [graph.vertices[v] for v in comp]
        sources = sorted((v for v in verts if not v.parents), key=lambda v: (v.tracklet.start, v.id))
        sinks = sorted((v for v in verts if not v.children and v.is_solo),
                       key=lambda v: (v.tracklet.start, v.id))
        labelings = 0
        for v in [*sources, *sinks]:
            if need <= coverage(g):
                break
            piece = v.pieces[0]
            z = _owner(truth, v)
            if (piece, z) in coverage(g):
                continue
            vid = next(w for w, x in g.vertices.items() if piece in x.pieces)
            g.label_vertex(vid, z)
            labelings += 1
        recovered = need <= coverage(g, truth)
        targets = sum(v.members for v in sources)
        report.checked.append(ComponentCheck(len(comp), targets, labelings, recovered))
    return report
