"""Per-vertex auxiliary data and its incremental maintenance.

Every field is a recursion over the vertex itself and its direct parents, so
a vertex can be (re)computed without walking the graph.  ``propagate`` pushes
changes downstream in topological order and stops as soon as a recomputed
record comes out unchanged.

``recompute_from_scratch`` evaluates the same recursions over the whole graph
with its own code path; it exists as a test oracle.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .graph import MSGraph, Vertex

__all__ = [
    "AuxData",
    "compute_on_insert",
    "delta_l_dir_refined",
    "delta_l_dir_unrefined",
    "on_label",
    "on_untangle_repair",
    "propagate",
    "recompute_from_scratch",
]

NONE = 0


@dataclass(frozen=True)
class AuxData:
    """Auxiliary record stored inline in each vertex.

    ``p_back`` and ``c_candidate`` hold vertex ids, with 0 meaning "none".
    Lengths are in time steps.
    """

    n_not_labeled: int
    p_back: int
    c_candidate: int
    n_origins: int
    n_labeled: int
    delta_l_dir: int
    l_not_dir: int
    n_ret: int

    def changed_fields(self, other: AuxData | None) -> int:
        if other is None:
            return len(_FIELDS)
        return sum(getattr(self, f) != getattr(other, f) for f in _FIELDS)


_FIELDS = tuple(f.name for f in fields(AuxData))

LABELED_FIELDS = dict(n_not_labeled=0, c_candidate=NONE, n_origins=1, n_labeled=1,
                      delta_l_dir=0, l_not_dir=0, n_ret=1)


def _unique_unlabeled_parent(parents: Sequence[Vertex]) -> int:
    found = NONE
    for p in parents:
        if p.aux.n_not_labeled > 0:
            if found:
                return NONE
            found = p.id
    return found


def _forward_chain_count(parents: Sequence[Vertex]) -> int:
    # chain(p): p has exactly one child
    return sum(p.aux.n_ret for p in parents if len(p.children) == 1)


def delta_l_dir_refined(vertex: Vertex, parents: Sequence[Vertex], now: int | None = None,
                        *, n_labeled: int | None = None, n_ret: int | None = None) -> int:
    """Direct-match gain with forward labeling extensions subtracted.

    ``n_labeled`` and ``n_ret`` may be passed when the caller already has them.
    """
    if vertex.label is not None:
        return 0
    if n_labeled is None:
        n_labeled = _n_origins(parents) - _n_not_labeled(parents)
    if n_ret is None:
        n_ret = _forward_chain_count(parents)
    if n_ret > n_labeled:
        raise AssertionError(f"n_ret={n_ret} exceeds n_labeled={n_labeled} at vertex {vertex.id}")
    length = vertex.tracklet.length(now)
    return length * (n_labeled - n_ret) + sum(p.aux.delta_l_dir for p in parents)


def delta_l_dir_unrefined(vertex: Vertex, parents: Sequence[Vertex], now: int | None = None,
                          *, n_labeled: int | None = None) -> int:
    if vertex.label is not None:
        return 0
    if n_labeled is None:
        n_labeled = _n_origins(parents) - _n_not_labeled(parents)
    length = vertex.tracklet.length(now)
    return length * n_labeled + sum(p.aux.delta_l_dir for p in parents)


def _n_not_labeled(parents: Sequence[Vertex]) -> int:
    return sum(p.aux.n_not_labeled for p in parents) if parents else 1


def _n_origins(parents: Sequence[Vertex]) -> int:
    return sum(p.aux.n_origins for p in parents) if parents else 1


def compute_on_insert(vertex: Vertex, parents: Sequence[Vertex], *, refined: bool = True,
                      now: int | None = None, as_unlabeled: bool = False) -> AuxData:
    """Evaluate every auxiliary field of ``vertex`` from its direct parents.

    Only ``vertex`` and the supplied ``parents`` are read.  With
    ``as_unlabeled`` the vertex is treated as if it carried no label, which is
    the view needed to look for an indirect match right after a labeling.
    """
    p_back = _unique_unlabeled_parent(parents)
    if vertex.label is not None and not as_unlabeled:
        return AuxData(p_back=p_back, **LABELED_FIELDS)

    n_nl = _n_not_labeled(parents)
    n_o = _n_origins(parents)
    n_l = n_o - n_nl
    back = None
    if p_back:
        back = next(p for p in parents if p.id == p_back)

    solo = vertex.id if vertex.members == 1 else NONE
    if n_nl == 0:
        cand = NONE
    elif back is not None and back.aux.c_candidate != NONE:
        cand = back.aux.c_candidate
    else:
        cand = solo

    n_ret = _forward_chain_count(parents)
    length = vertex.tracklet.length(now)
    if refined:
        if n_ret > n_l:
            raise AssertionError(f"n_ret={n_ret} exceeds n_labeled={n_l} at vertex {vertex.id}")
        delta = length * (n_l - n_ret)
    else:
        delta = length * n_l
    delta += sum(p.aux.delta_l_dir for p in parents)

    l_not_dir = length * n_nl
    if back is not None:
        l_not_dir += back.aux.l_not_dir

    return AuxData(n_not_labeled=n_nl, p_back=p_back, c_candidate=cand, n_origins=n_o,
                   n_labeled=n_l, delta_l_dir=delta, l_not_dir=l_not_dir, n_ret=n_ret)


def propagate(graph: MSGraph, seeds: Iterable[int]) -> int:
    """Recompute ``seeds`` and every descendant whose inputs changed.

    Vertices are processed by tracklet start time, which is a topological
    order because every edge points forward in time.  Returns the number of
    vertices recomputed.
    """
    verts = graph.vertices
    heap = []
    queued = set()
    for vid in seeds:
        if vid in verts and vid not in queued:
            queued.add(vid)
            heap.append((verts[vid].tracklet.start, vid))
    heapq.heapify(heap)
    done = 0
    while heap:
        _, vid = heapq.heappop(heap)
        queued.discard(vid)
        vert = verts.get(vid)
        if vert is None:
            continue
        new = compute_on_insert(vert, [verts[p] for p in vert.parents],
                                refined=graph.refined, now=graph.now)
        done += 1
        if new == vert.aux:
            continue
        graph.aux_writes += new.changed_fields(vert.aux)
        vert.aux = new
        for c in vert.children:
            if c not in queued:
                queued.add(c)
                heapq.heappush(heap, (verts[c].tracklet.start, c))
    return done


def on_label(graph: MSGraph, v: int) -> None:
    """Reset a freshly labeled vertex and refresh its descendants."""
    propagate(graph, [v])


def on_untangle_repair(graph: MSGraph, disconnected: Iterable[int]) -> None:
    propagate(graph, disconnected)


def recompute_from_scratch(graph: MSGraph, refined: bool | None = None) -> dict[int, AuxData]:
    """Whole-graph evaluation of the recursions, used as a test oracle.

    Raises ``ValueError`` if the graph contains a directed cycle.
    """
    if refined is None:
        refined = graph.refined
    verts = graph.vertices
    indeg = {vid: len(v.parents) for vid, v in verts.items()}
    ready = deque(sorted(vid for vid, d in indeg.items() if d == 0))
    order = []
    while ready:
        vid = ready.popleft()
        order.append(vid)
        for c in verts[vid].children:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != len(verts):
        raise ValueError("graph contains a directed cycle")

    n_nl, p_back, cand, n_o, n_ret, dl, lnd = {}, {}, {}, {}, {}, {}, {}
    out = {}
    for vid in order:
        v = verts[vid]
        ps = list(v.parents)
        length = v.tracklet.length(graph.now)
        carriers = [p for p in ps if n_nl[p] > 0]
        p_back[vid] = carriers[0] if len(carriers) == 1 else 0
        if v.label is not None:
            n_nl[vid], n_o[vid], n_ret[vid] = 0, 1, 1
            cand[vid], dl[vid], lnd[vid] = 0, 0, 0
        else:
            if ps:
                n_nl[vid] = sum(n_nl[p] for p in ps)
                n_o[vid] = sum(n_o[p] for p in ps)
            else:
                n_nl[vid] = n_o[vid] = 1
            n_ret[vid] = sum(n_ret[p] for p in ps if len(verts[p].children) == 1)
            if n_nl[vid] == 0:
                cand[vid] = 0
            elif p_back[vid] and cand[p_back[vid]]:
                cand[vid] = cand[p_back[vid]]
            else:
                cand[vid] = vid if v.members == 1 else 0
            n_l = n_o[vid] - n_nl[vid]
            own = n_l - n_ret[vid] if refined else n_l
            dl[vid] = length * own + sum(dl[p] for p in ps)
            lnd[vid] = length * n_nl[vid] + (lnd[p_back[vid]] if p_back[vid] else 0)
        out[vid] = AuxData(n_not_labeled=n_nl[vid], p_back=p_back[vid], c_candidate=cand[vid],
                           n_origins=n_o[vid], n_labeled=n_o[vid] - n_nl[vid],
                           delta_l_dir=dl[vid], l_not_dir=lnd[vid], n_ret=n_ret[vid])
    return out
