"""The multi-strand graph: tracklet vertices, association edges, labeling.

Vertices are solo (one target) or compound (several targets walking
together).  Edges always point forward in time.  The graph is built online
from tracker events; labels acquired in zoom-in mode are matched directly or
by elimination and then used to untangle the graph.

Strand semantics assumed throughout: targets start at sources and end at
sinks, every member of a non-sink vertex continues into one of its children,
and every member of a non-source vertex comes from one of its parents.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .auxdata import AuxData, compute_on_insert, on_label, on_untangle_repair, propagate

__all__ = [
    "ContractViolation",
    "EventRejected",
    "MSGraph",
    "MatchOutcome",
    "Tracklet",
    "Vertex",
]

log = logging.getLogger(__name__)


class EventRejected(ValueError):
    """A tracker event is inconsistent with the current graph."""


class ContractViolation(ValueError):
    """An operation was called outside its precondition."""


@dataclass
class Tracklet:
    """Observed time steps of a vertex, as ``[start, end, piece]`` segments.

    ``end`` is ``None`` while the tracklet is open.  A fresh vertex has a
    single segment whose piece id is the vertex id; merging concatenates
    segments, so each segment keeps track of the vertex it was first
    observed as.
    """

    segments: list
    observations: list = field(default_factory=list)

    @classmethod
    def open_at(cls, start: int, piece: int) -> Tracklet:
        return cls([[start, None, piece]])

    @classmethod
    def concat(cls, parts: Iterable[Tracklet]) -> Tracklet:
        segments, obs = [], []
        for p in parts:
            segments.extend(list(s) for s in p.segments)
            obs.extend(p.observations)
        return cls(segments, obs)

    @property
    def start(self) -> int:
        return self.segments[0][0]

    @property
    def end(self) -> int | None:
        return self.segments[-1][1]

    @property
    def is_open(self) -> bool:
        return self.segments[-1][1] is None

    @property
    def pieces(self) -> tuple:
        return tuple(s[2] for s in self.segments)

    def length(self, now: int | None = None) -> int:
        total = 0
        for s, e, _ in self.segments:
            if e is None:
                if now is None:
                    raise ValueError("length of an open tracklet needs the current time")
                e = now
            total += e - s + 1
        return total

    def close(self, end: int) -> None:
        if not self.is_open:
            raise EventRejected("tracklet already closed")
        if end < self.segments[-1][0]:
            raise EventRejected(f"closing at {end} before segment start {self.segments[-1][0]}")
        self.segments[-1][1] = end

    def copy(self) -> Tracklet:
        return Tracklet([list(s) for s in self.segments], list(self.observations))


@dataclass(eq=False)
class Vertex:
    id: int
    tracklet: Tracklet
    members: int = 1
    label: Hashable | None = None
    parents: dict = field(default_factory=dict)
    children: dict = field(default_factory=dict)
    aux: AuxData | None = None

    @property
    def kind(self) -> str:
        return "solo" if self.members == 1 else "compound"

    @property
    def is_solo(self) -> bool:
        return self.members == 1

    @property
    def pieces(self) -> tuple:
        return self.tracklet.pieces

    def __repr__(self):
        star = "*" if self.label is not None else ""
        return f"<v{self.id}{star} {self.kind} m={self.members} {self.tracklet.segments}>"


@dataclass(frozen=True)
class MatchOutcome:
    """What a labeling produced: ``kind`` is ``none``, ``direct`` or ``indirect``."""

    kind: str = "none"
    match: int | None = None
    untangled: bool = False
    deferred: bool = False

    def as_dict(self) -> dict:
        return dict(kind=self.kind, match=self.match, untangled=self.untangled,
                    deferred=self.deferred)


def _replace_key(d: dict, old, new) -> dict:
    return {(new if k == old else k): None for k in d}


def _end(v: Vertex) -> float:
    end = v.tracklet.end
    return float("inf") if end is None else end


def _depth_starts(ids: list, edges: list) -> dict:
    parents = {v: [] for v in ids}
    children = {v: [] for v in ids}
    for p, c in edges:
        parents[c].append(p)
        children[p].append(c)
    indeg = {v: len(parents[v]) for v in ids}
    ready = deque(v for v in ids if indeg[v] == 0)
    depth = {}
    while ready:
        v = ready.popleft()
        depth[v] = max((depth[p] + 1 for p in parents[v]), default=0)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    return {v: 10 * depth.get(v, 0) for v in ids}


class MSGraph:
    """Online multi-strand tracking graph.

    Parameters
    ----------
    refined : bool
        Feed the scheduler the forward-extension-aware direct gain.
    max_gap : int
        Longest blind gap, in time steps, allowed between a candidate
        predecessor and a reappearing vertex.
    matching : bool
        Look for direct and indirect matches when a vertex is labeled.
    untangle : bool
        Untangle the graph after a match.  Matches are still reported when off.
    """

    def __init__(self, *, refined: bool = True, max_gap: int = 7, matching: bool = True,
                 untangle: bool = True, record: bool = True):
        self.refined = refined
        self.max_gap = max_gap
        self.matching = matching
        self.untangle_enabled = untangle
        self.vertices: dict[int, Vertex] = {}
        self.active: dict[int, None] = {}
        self.labeled: dict[int, None] = {}
        self.retired: dict[int, int] = {}
        self.deferred: list[tuple[int, int]] = []
        self.now = 0
        self._next_id = 1
        self.aux_writes = 0
        self.vertices_created = 0
        self.record = record
        self.events: list[dict] = []
        if record:
            self.events.append(dict(t=0, kind="config", vertex_ids=[], outcome=None,
                                    refined=refined, max_gap=max_gap, matching=matching,
                                    untangle=untangle))

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], *, vertices: Iterable[int] = (),
                   members: dict | None = None, labels: dict | None = None,
                   lengths: dict | None = None, starts: dict | None = None,
                   compute_aux: bool = True, **kwargs) -> MSGraph:
        """Build a graph of closed vertices directly from an edge list.

        Meant for fixtures and tests.  Start times default to the longest-path
        depth times 10, so edges point forward in time.  Cycles are accepted
        (start times then fall back to 0 for vertices on them) but
        ``compute_aux`` must be off in that case.
        """
        kwargs.setdefault("record", False)
        g = cls(**kwargs)
        edges = list(edges)
        ids = list(dict.fromkeys([*vertices, *(x for e in edges for x in e)]))
        members = members or {}
        labels = labels or {}
        lengths = lengths or {}
        if starts is None:
            starts = _depth_starts(ids, edges)
        for vid in ids:
            start = starts.get(vid, 0)
            tr = Tracklet([[start, start + lengths.get(vid, 1) - 1, vid]])
            g.vertices[vid] = Vertex(id=vid, tracklet=tr, members=members.get(vid, 1),
                                     label=labels.get(vid))
            if g.vertices[vid].label is not None:
                g.labeled[vid] = None
        for p, c in edges:
            g._link(p, c)
        g._next_id = max(ids, default=0) + 1
        g.now = max((v.tracklet.end for v in g.vertices.values()), default=0)
        g.vertices_created = len(ids)
        if compute_aux:
            propagate(g, ids)
        return g

    def copy(self) -> MSGraph:
        import copy
        return copy.deepcopy(self)

    # ------------------------------------------------------------------
    # bookkeeping

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(p, c) for p, v in self.vertices.items() for c in v.children}

    def tick(self, t: int) -> None:
        if t < self.now:
            raise EventRejected(f"time went backwards: {t} < {self.now}")
        self.now = t

    def resolve(self, vid: int) -> int:
        """Follow the retired map to the live vertex that absorbed ``vid``."""
        seen = 0
        while vid in self.retired:
            vid = self.retired[vid]
            seen += 1
            if seen > len(self.retired) + 1:
                raise RuntimeError("retired map contains a loop")
        return vid

    def aux(self, vid: int) -> AuxData:
        """Current auxiliary data; open tracklets are evaluated at ``now``."""
        v = self.vertices[vid]
        if v.tracklet.is_open:
            return compute_on_insert(v, [self.vertices[p] for p in v.parents],
                                     refined=self.refined, now=self.now)
        return v.aux

    def length(self, vid: int) -> int:
        return self.vertices[vid].tracklet.length(self.now)

    def _log(self, kind: str, t: int, vertex_ids, outcome=None, **args) -> None:
        if self.record:
            self.events.append(dict(t=t, kind=kind, vertex_ids=list(vertex_ids),
                                    outcome=outcome, **args))

    def _new_vertex(self, start: int, members: int = 1) -> Vertex:
        vid = self._next_id
        self._next_id += 1
        v = Vertex(id=vid, tracklet=Tracklet.open_at(start, vid), members=members)
        self.vertices[vid] = v
        return v

    def _link(self, p: int, c: int) -> None:
        self.vertices[p].children[c] = None
        self.vertices[c].parents[p] = None

    def _unlink(self, p: int, c: int) -> None:
        del self.vertices[p].children[c]
        del self.vertices[c].parents[p]

    def _require_active(self, vid: int) -> Vertex:
        if vid not in self.active:
            raise EventRejected(f"vertex {vid} is not active")
        return self.vertices[vid]

    # ------------------------------------------------------------------
    # tracker events

    def add_solo_vertex(self, start: int) -> int:
        return self.add_vertex(start, members=1)

    def add_vertex(self, start: int, members: int = 1) -> int:
        """Open a new source vertex (entry, or reappearance before its edges)."""
        if members < 1:
            raise EventRejected("member count must be positive")
        self.tick(max(self.now, start))
        v = self._new_vertex(start, members)
        self.active[v.id] = None
        self.vertices_created += 1
        propagate(self, [v.id])
        self._log("add", start, [v.id], members=members)
        return v.id

    def close_vertex(self, vid: int, end: int) -> None:
        """Close an active tracklet (exit, or hidden by a zoom-in)."""
        v = self._require_active(vid)
        v.tracklet.close(end)
        del self.active[vid]
        propagate(self, [vid])
        self._log("close", end, [vid])

    def record_join(self, joining: Iterable[int], t: int) -> int:
        joining = list(dict.fromkeys(joining))
        if len(joining) < 2:
            raise EventRejected("a join needs at least two vertices")
        for vid in joining:
            v = self._require_active(vid)
            if v.tracklet.segments[-1][0] > t - 1:
                raise EventRejected(f"vertex {vid} opened at {v.tracklet.segments[-1][0]}, cannot close at {t - 1}")
        self.tick(t)
        for vid in joining:
            self.vertices[vid].tracklet.close(t - 1)
            del self.active[vid]
        members = sum(self.vertices[vid].members for vid in joining)
        c = self._new_vertex(t, members)
        self.active[c.id] = None
        self.vertices_created += 1
        for vid in joining:
            self._link(vid, c.id)
        propagate(self, joining + [c.id])
        self._log("join", t, joining + [c.id])
        return c.id

    def record_split(self, compound: int, t: int, shares: list[int]) -> list[int]:
        v = self._require_active(compound)
        if v.members < 2:
            raise EventRejected(f"vertex {compound} is solo and cannot split")
        if len(shares) < 2 or any(s < 1 for s in shares) or sum(shares) != v.members:
            raise EventRejected(f"shares {shares} do not partition {v.members} members")
        if v.tracklet.segments[-1][0] > t - 1:
            raise EventRejected(f"vertex {compound} cannot close at {t - 1}")
        self.tick(t)
        v.tracklet.close(t - 1)
        del self.active[compound]
        kids = []
        for share in shares:
            c = self._new_vertex(t, share)
            self.active[c.id] = None
            self.vertices_created += 1
            self._link(compound, c.id)
            kids.append(c.id)
        propagate(self, [compound] + kids)
        self._log("split", t, [compound] + kids, shares=list(shares))
        return kids

    def add_ambiguity_edges(self, new: int, candidates: Iterable[int], *, merge: bool = True) -> None:
        """Attach candidate predecessors to a vertex that reappeared after a blind gap.

        With ``merge`` a univocal solo-to-solo edge is collapsed right away;
        pass ``merge=False`` when more reappearances from the same gap follow
        and call ``merge_chains`` afterwards.
        """
        v = self.vertices[new]
        if v.parents:
            raise EventRejected(f"vertex {new} already has parents")
        candidates = list(dict.fromkeys(candidates))
        for cid in candidates:
            c = self.vertices.get(cid)
            if c is None:
                raise EventRejected(f"unknown candidate {cid}")
            if c.tracklet.is_open:
                raise EventRejected(f"candidate {cid} is still open")
            gap = v.tracklet.start - c.tracklet.end - 1
            if gap < 0 or gap > self.max_gap:
                raise EventRejected(f"candidate {cid} ends at {c.tracklet.end}, "
                                    f"vertex {new} starts at {v.tracklet.start}")
        seeds = [new]
        for cid in candidates:
            self._link(cid, new)
            seeds.extend(self.vertices[cid].children)
        propagate(self, seeds)
        self._log("edges", v.tracklet.start, [new] + candidates, merge=merge)
        if merge and len(candidates) == 1:
            self._merge_chains([new])

    # ------------------------------------------------------------------
    # chains

    def _mergeable(self, a: Vertex, b: Vertex) -> bool:
        return (len(a.children) == 1 and b.id in a.children and len(b.parents) == 1
                and a.members == b.members)

    def _chain_at(self, vid: int) -> list[int]:
        head = self.vertices[vid]
        seen = {head.id}
        while len(head.parents) == 1:
            p = self.vertices[next(iter(head.parents))]
            if p.id in seen or not self._mergeable(p, head):
                break
            seen.add(p.id)
            head = p
        chain = [head.id]
        cur = head
        while len(cur.children) == 1:
            nxt = self.vertices[next(iter(cur.children))]
            if nxt.id in chain or not self._mergeable(cur, nxt):
                break
            chain.append(nxt.id)
            cur = nxt
        return chain

    def merge_solo_chain(self, head: int) -> int:
        """Merge the chain starting at ``head``; returns the surviving vertex id.

        Compound chains (equal member counts, in/out degree one) merge the same way.
        """
        head = self.resolve(head)
        chain = [head]
        cur = self.vertices[head]
        while len(cur.children) == 1:
            nxt = self.vertices[next(iter(cur.children))]
            if nxt.id in chain or not self._mergeable(cur, nxt):
                break
            chain.append(nxt.id)
            cur = nxt
        self._log("merge_head", self.now, [head])
        if len(chain) == 1:
            return head
        new = self._merge(chain)
        propagate(self, [new] + list(self.vertices[new].children))
        return new

    def merge_chains(self, around: Iterable[int]) -> list[int]:
        """Merge every maximal chain through the given vertices."""
        around = list(around)
        self._log("merge", self.now, around)
        return self._merge_chains(around)

    def _merge_chains(self, around: list[int]) -> list[int]:
        created = []
        for vid in list(around):
            vid = self.resolve(vid)
            if vid not in self.vertices:
                continue
            chain = self._chain_at(vid)
            if len(chain) > 1:
                created.append(self._merge(chain))
        if created:
            seeds = set(created)
            for vid in created:
                if vid in self.vertices:
                    seeds.update(self.vertices[vid].children)
            propagate(self, seeds)
        return [self.resolve(v) for v in created]

    def _merge(self, chain: list[int]) -> int:
        verts = [self.vertices[v] for v in chain]
        labels = {v.label for v in verts if v.label is not None}
        if len(labels) > 1:
            raise AssertionError(f"chain {chain} carries conflicting labels {labels}")
        head, tail = verts[0], verts[-1]
        vid = self._next_id
        self._next_id += 1
        new = Vertex(id=vid, tracklet=Tracklet.concat(v.tracklet for v in verts),
                     members=head.members, label=labels.pop() if labels else None)
        new.parents = dict(head.parents)
        new.children = dict(tail.children)
        for p in head.parents:
            pv = self.vertices[p]
            pv.children = _replace_key(pv.children, head.id, vid)
        for c in tail.children:
            cv = self.vertices[c]
            cv.parents = _replace_key(cv.parents, tail.id, vid)
        was_active = tail.id in self.active
        for v in verts:
            del self.vertices[v.id]
            self.active.pop(v.id, None)
            self.labeled.pop(v.id, None)
            self.retired[v.id] = vid
        self.vertices[vid] = new
        if was_active:
            self.active[vid] = None
        if new.label is not None:
            self.labeled[vid] = None
        return vid

    # ------------------------------------------------------------------
    # labeling and matching

    def labeled_origins(self, vid: int) -> list[int]:
        """Labeled vertices reaching ``vid`` through unlabeled vertices, nearest first."""
        out, seen = [], {vid}
        queue = deque([vid])
        while queue:
            x = queue.popleft()
            for p in self.vertices[x].parents:
                if p in seen:
                    continue
                seen.add(p)
                if self.vertices[p].label is not None:
                    out.append(p)
                else:
                    queue.append(p)
        return out

    def direct_match(self, vid: int, label) -> int | None:
        """The same-label origin that ends last, or ``None``.

        Earlier vertices with the label already lie on the strand ahead of
        the latest one, so matching them could untangle a path the target
        never took.
        """
        best = None
        for u in self.labeled_origins(vid):
            x = self.vertices[u]
            if x.label == label and (best is None or _end(x) > _end(self.vertices[best])):
                best = u
        return best

    def indirect_match(self, vid: int) -> int | None:
        """Candidate matched by elimination, or ``None``.

        Uses the vertex's auxiliary data as if it were unlabeled, so it can be
        called right after the label is attached.
        """
        v = self.vertices[vid]
        view = compute_on_insert(v, [self.vertices[p] for p in v.parents],
                                 refined=self.refined, now=self.now, as_unlabeled=True)
        cand = view.c_candidate
        if cand in (0, vid) or self.vertices[cand].label is not None:
            return None
        return cand

    def label_vertex(self, vid: int, label) -> MatchOutcome:
        vid = self.resolve(vid)
        v = self.vertices[vid]
        if not v.is_solo:
            raise ContractViolation(f"vertex {vid} is compound; only solo vertices are labeled")
        if v.label is not None:
            raise ContractViolation(f"vertex {vid} is already labeled")
        t = self.now
        v.label = label
        self.labeled[vid] = None

        kind, match = "none", None
        if self.matching:
            match = self.direct_match(vid, label)
            if match is not None:
                kind = "direct"
            else:
                match = self.indirect_match(vid)
                if match is not None:
                    kind = "indirect"
        on_label(self, vid)

        untangled = deferred = False
        if match is not None and self.untangle_enabled:
            untangled = self._try_untangle(match, vid)
            if not untangled:
                self.deferred.append((match, vid))
                deferred = True
        if untangled:
            self._retry_deferred()
        outcome = MatchOutcome(kind, match, untangled, deferred)
        self._log("label", t, [vid], outcome=outcome.as_dict(), label=label)
        return outcome

    def _retry_deferred(self) -> None:
        progress = True
        while progress and self.deferred:
            progress = False
            pending, self.deferred = self.deferred, []
            for u, v in pending:
                u, v = self.resolve(u), self.resolve(v)
                if u == v or u not in self.vertices or v not in self.vertices:
                    continue
                if self._try_untangle(u, v):
                    progress = True
                else:
                    self.deferred.append((u, v))

    # ------------------------------------------------------------------
    # untangling

    def component(self, vid: int) -> set[int]:
        seen = {vid}
        queue = deque([vid])
        while queue:
            x = self.vertices[queue.popleft()]
            for y in (*x.parents, *x.children):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return seen

    def is_dag(self, vid: int) -> bool:
        """True iff the connected component containing ``vid`` has no directed cycle."""
        comp = self.component(vid)
        indeg = {x: len(self.vertices[x].parents) for x in comp}
        ready = [x for x, d in indeg.items() if d == 0]
        visited = 0
        while ready:
            x = ready.pop()
            visited += 1
            for c in self.vertices[x].children:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        return visited == len(comp)

    def unlabeled_path(self, u: int, v: int) -> list[int] | None:
        """The path from ``u`` to ``v`` with unlabeled interior, if it is unique."""
        region = {v}
        queue = deque([v])
        while queue:
            x = queue.popleft()
            for p in self.vertices[x].parents:
                if p in region:
                    continue
                if p == u:
                    region.add(p)
                elif self.vertices[p].label is None:
                    region.add(p)
                    queue.append(p)
        if u not in region:
            return None
        order = sorted(region, key=lambda x: (self.vertices[x].tracklet.start, x))
        count = {u: 1}
        pred = {}
        for x in order:
            if x == u:
                continue
            total, via = 0, None
            for p in self.vertices[x].parents:
                n = count.get(p, 0)
                if n:
                    total += n
                    via = p
            count[x] = min(total, 2)
            if total == 1:
                pred[x] = via
        if count.get(v) != 1:
            return None
        path = [v]
        while path[-1] != u:
            path.append(pred[path[-1]])
        return path[::-1]

    def _try_untangle(self, u: int, v: int) -> bool:
        if not self.is_dag(v):
            return False
        path = self.unlabeled_path(u, v)
        if path is None:
            return False
        self._untangle_path(path)
        return True

    def untangle(self, u: int, v: int) -> bool:
        """Untangle along the path between two solo vertices of the same target.

        Returns ``False`` (and changes nothing) when the component has a cycle
        or the unlabeled path between the two is not unique.
        """
        u, v = self.resolve(u), self.resolve(v)
        if not (self.vertices[u].is_solo and self.vertices[v].is_solo):
            raise ContractViolation("untangling needs two solo vertices")
        ok = self._try_untangle(u, v)
        if ok:
            self._retry_deferred()
        return ok

    def _untangle_path(self, path: list[int]) -> int:
        verts = [self.vertices[x] for x in path]
        touched = set(path)
        rep = []
        for w in verts:
            if w.is_solo:
                rep.append(w)
                continue
            s = self._new_vertex(0)
            self.vertices_created += 1
            s.tracklet = w.tracklet.copy()
            w.members -= 1
            rep.append(s)
            touched.add(s.id)

        for i in range(len(verts) - 1):
            a, b, ra, rb = verts[i], verts[i + 1], rep[i], rep[i + 1]
            if a is ra and b is rb:
                continue
            if a is ra or b is rb:
                self._unlink(a.id, b.id)
            self._link(ra.id, rb.id)

        last = len(verts) - 1
        for i, w in enumerate(verts):
            if w is not rep[i]:
                continue
            if i > 0:
                for p in [p for p in w.parents if p != rep[i - 1].id]:
                    self._unlink(p, w.id)
                    touched.add(p)
            if i < last:
                for c in [c for c in w.children if c != rep[i + 1].id]:
                    self._unlink(w.id, c)
                    touched.add(c)

        labels = {w.label for w in verts if w.label is not None}
        merged = self._merge([r.id for r in rep])
        touched = {self.resolve(x) for x in touched}
        touched.add(merged)
        for x in list(touched):
            if x in self.vertices:
                chain = self._chain_at(x)
                if len(chain) > 1:
                    touched.add(self._merge(chain))
        live = {self.resolve(x) for x in touched}
        seeds = set(live)
        for x in live:
            seeds.update(self.vertices[x].children)
        on_untangle_repair(self, seeds)
        assert len(labels) == 1
        return self.resolve(merged)
