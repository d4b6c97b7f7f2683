"""Brute-force reference implementations used by the tests.

Everything here enumerates paths or assignments explicitly, so it shares no
code with the incremental recursions it checks.
"""
from __future__ import annotations

import random
from collections import Counter

from multistrand.graph import MSGraph


def _is_labeled(g: MSGraph, x: int) -> bool:
    return g.vertices[x].label is not None


def paths_into(g: MSGraph, v: int, start_ok, interior_ok) -> list[list[int]]:
    """All paths ``[w, ..., v]`` with ``start_ok(w)`` and every vertex strictly
    between the ends satisfying ``interior_ok``."""
    out = []

    def back(path):
        head = path[-1]
        if start_ok(head):
            out.append(path[::-1])
        if head != v and not interior_ok(head):
            return
        for p in g.vertices[head].parents:
            if p in path:
                continue
            if interior_ok(p) or start_ok(p):
                back(path + [p])

    back([v])
    return out


def _unlabeled_source_paths(g: MSGraph, v: int, *, v_as_unlabeled=False) -> list[list[int]]:
    """Paths from unlabeled sources to ``v`` through unlabeled vertices."""
    if _is_labeled(g, v) and not v_as_unlabeled:
        return []
    unl = lambda x: not _is_labeled(g, x)
    src = lambda x: unl(x) and not g.vertices[x].parents
    return [p for p in paths_into(g, v, src, unl) if all(unl(x) for x in p[:-1])]


def n_not_labeled(g: MSGraph, v: int) -> int:
    return len(_unlabeled_source_paths(g, v))


def origin_paths(g: MSGraph, v: int) -> list[list[int]]:
    """Paths from an origin (labeled vertex or unlabeled source) to an
    unlabeled ``v`` whose other vertices are unlabeled."""
    if _is_labeled(g, v):
        return [[v]]
    unl = lambda x: not _is_labeled(g, x)
    origin = lambda x: _is_labeled(g, x) or not g.vertices[x].parents
    return [p for p in paths_into(g, v, origin, unl)
            if all(unl(x) for x in p[1:]) and (p[0] == v or origin(p[0]))
            and not (p[0] == v and g.vertices[v].parents)]


def n_origins(g: MSGraph, v: int) -> int:
    return len(origin_paths(g, v))


def delta_l_dir(g: MSGraph, v: int, refined: bool) -> int:
    """Sum over labeled origins and their paths of the newly labeled length.

    Unrefined: the path minus the origin.  Refined: the path minus the
    origin's forward single-child chain, cut off at ``v``.
    """
    if _is_labeled(g, v):
        return 0
    total = 0
    for path in origin_paths(g, v):
        if not _is_labeled(g, path[0]):
            continue
        gain = sum(g.length(x) for x in path)
        known = g.length(path[0])
        if refined:
            for i in range(1, len(path)):
                if len(g.vertices[path[i - 1]].children) != 1:
                    break
                known += g.length(path[i])
        total += gain - known
    return total


def elimination_match(g: MSGraph, v: int):
    """The vertex an elimination argument identifies as ``v``'s earlier self.

    ``v`` is judged as if unlabeled.  A candidate is an unlabeled solo vertex,
    other than ``v``, that lies on every unlabeled path from an unlabeled
    source to ``v`` and has exactly one unlabeled path of its own to ``v``.
    Returns the most upstream candidate, or ``None``.
    """
    paths = _unlabeled_source_paths(g, v, v_as_unlabeled=True)
    if not paths:
        return None
    on_all = set(paths[0]).intersection(*map(set, paths[1:]))
    best = None
    for w in on_all:
        x = g.vertices[w]
        if w == v or x.label is not None or not x.is_solo:
            continue
        unl = lambda y: not _is_labeled(g, y)
        own = [p for p in paths_into(g, v, lambda y: y == w, unl)
               if all(unl(y) for y in p[1:-1])]
        if len(own) != 1:
            continue
        if best is None or len(own[0]) > best[1]:
            best = (w, len(own[0]))
    return None if best is None else best[0]


# ----------------------------------------------------------------------
# feasible strand assignments

def _topo(g: MSGraph) -> list[int]:
    indeg = {x: len(v.parents) for x, v in g.vertices.items()}
    ready = sorted(x for x, d in indeg.items() if d == 0)
    out = []
    while ready:
        x = ready.pop()
        out.append(x)
        for c in g.vertices[x].children:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(out) != len(g.vertices):
        raise ValueError("cycle")
    return out


def feasible_assignments(g: MSGraph, limit: int = 200_000) -> set:
    """Every way to route target strands through the graph.

    A strand starts at a source and ends at a sink; each vertex carries as
    many strands as it has members, a labeled vertex gives its strand that
    label, and no strand carries two labels nor any label two strands.  An
    assignment is returned as the sorted tuple of ``(label, pieces)`` over its
    strands, where ``pieces`` lists the tracklet pieces walked in order, so
    assignments compare equal across chain merges and vertex copies.
    """
    order = _topo(g)
    verts = g.vertices
    results = set()
    budget = [limit]

    def run(i, arriving, done):
        budget[0] -= 1
        if budget[0] < 0:
            raise RuntimeError("assignment enumeration too large")
        if i == len(order):
            labels = [lab for lab, _ in done if lab is not None]
            if len(labels) == len(set(labels)):
                results.add(tuple(sorted(done, key=repr)))
            return
        x = order[i]
        v = verts[x]
        inc = arriving.get(x, [])
        if v.parents:
            if len(inc) != v.members:
                return
        else:
            inc = [(None, ())] * v.members
        here = []
        for lab, pieces in inc:
            if v.label is not None:
                if lab not in (None, v.label):
                    return
                lab = v.label
            here.append((lab, pieces + v.pieces))
        kids = list(v.children)
        if not kids:
            run(i + 1, arriving, done + here)
            return
        seen = set()

        def spread(j, acc):
            if j == len(here):
                key = tuple(sorted((c, repr(s)) for c, s in acc))
                if key in seen:
                    return
                seen.add(key)
                nxt = dict(arriving)
                for c, s in acc:
                    nxt[c] = nxt.get(c, []) + [s]
                if any(len(nxt[c]) > verts[c].members for c, _ in acc):
                    return
                run(i + 1, nxt, done)
                return
            for c in kids:
                spread(j + 1, acc + [(c, here[j])])

        spread(0, [])

    run(0, {}, [])
    return results


def truth_assignment(g: MSGraph, piece_owners: dict, labels: dict | None = None) -> tuple:
    """The assignment actually realised, in the same form as above."""
    walks: dict = {}
    starts = {}
    for v in g.vertices.values():
        for seg in v.tracklet.segments:
            starts[seg[2]] = seg[0]
    for piece in sorted(starts, key=lambda p: (starts[p], p)):
        for z in piece_owners[piece]:
            walks.setdefault(z, [])
            if piece not in walks[z]:
                walks[z].append(piece)
    labels = labels or {}
    return tuple(sorted(((labels.get(z), tuple(w)) for z, w in walks.items()), key=repr))


# ----------------------------------------------------------------------
# random DAGs

def random_dag(rng: random.Random, n: int, *, p_label: float = 0.25, p_compound: float = 0.15,
               max_parents: int = 3, labels: int = 4, **kwargs) -> MSGraph:
    """A random DAG over ``1..n`` with edges from lower to higher ids."""
    edges = []
    for v in range(2, n + 1):
        k = rng.choice([0, 1, 1, 1, 2, 2, max_parents])
        for p in rng.sample(range(1, v), min(k, v - 1)):
            edges.append((p, v))
    members = {v: rng.randint(2, 3) for v in range(1, n + 1) if rng.random() < p_compound}
    lab = {v: rng.randrange(labels) for v in range(1, n + 1)
           if v not in members and rng.random() < p_label}
    lengths = {v: rng.randint(1, 6) for v in range(1, n + 1)}
    return MSGraph.from_edges(edges, vertices=range(1, n + 1), members=members, labels=lab,
                              lengths=lengths, **kwargs)


def count_multiset(items) -> Counter:
    return Counter(items)
