import random

import pytest
from hypothesis import given, settings, strategies as st

import _oracles as oracles
from _eventgen import EventGen
from multistrand.auxdata import (
    LABELED_FIELDS,
    AuxData,
    compute_on_insert,
    delta_l_dir_refined,
    delta_l_dir_unrefined,
    on_label,
    recompute_from_scratch,
)
from multistrand.graph import MSGraph, Tracklet, Vertex


def _assert_matches_oracle(g: MSGraph):
    ref = recompute_from_scratch(g)
    assert set(ref) == set(g.vertices)
    for v in g.vertices:
        assert g.aux(v) == ref[v], v


# -- base cases and hand examples ---------------------------------------------

def test_unlabeled_source():
    g = MSGraph.from_edges([], vertices=[1], lengths={1: 4})
    assert g.aux(1) == AuxData(n_not_labeled=1, p_back=0, c_candidate=1, n_origins=1,
                               n_labeled=0, delta_l_dir=0, l_not_dir=4, n_ret=0)


def test_compound_source_has_no_candidate():
    g = MSGraph.from_edges([], vertices=[1], members={1: 2})
    assert g.aux(1).c_candidate == 0


def test_join_of_two_sources():
    g = MSGraph.from_edges([(1, 3), (2, 3)], lengths={1: 3, 2: 3, 3: 2}, members={3: 2})
    a = g.aux(3)
    assert (a.n_not_labeled, a.n_origins, a.p_back, a.c_candidate, a.l_not_dir) == (2, 2, 0, 0, 4)


def test_child_of_labeled_and_unlabeled_parent():
    g = MSGraph.from_edges([(1, 3), (2, 3)], labels={1: "a"})
    a = g.aux(3)
    assert a.p_back == 2
    assert a.c_candidate == g.aux(2).c_candidate == 2


def test_labeled_vertex_fields():
    g = MSGraph.from_edges([(1, 2)], labels={2: "a"})
    a = g.aux(2)
    for k, v in LABELED_FIELDS.items():
        assert getattr(a, k) == v


def test_labeling_a_source_updates_its_chain():
    g = MSGraph.from_edges([(1, 2), (2, 3)], members={2: 2, 3: 2})
    g.label_vertex(1, "a")
    for v in (2, 3):
        assert g.aux(v).n_not_labeled == 0
        assert g.aux(v).n_labeled == 1
    _assert_matches_oracle(g)


def test_labeling_inside_x_leaves_siblings_alone():
    g = MSGraph.from_edges([(1, 3), (1, 4), (2, 3), (2, 4), (3, 5), (4, 6)],
                           record=False)
    before = {v: g.aux(v) for v in g.vertices}
    g.untangle_enabled = False
    g.vertices[3].label = "a"
    g.labeled[3] = None
    on_label(g, 3)
    assert g.aux(4) == before[4]
    assert g.aux(6) == before[6]
    assert g.aux(5) != before[5]
    _assert_matches_oracle(g)


def test_labeling_a_sink_changes_only_it():
    g = MSGraph.from_edges([(1, 3), (2, 3), (3, 4), (3, 5)], members={3: 2})
    before = {v: g.aux(v) for v in g.vertices}
    g.untangle_enabled = False
    g.matching = False
    g.label_vertex(4, "a")
    changed = {v for v in g.vertices if g.aux(v) != before[v]}
    assert changed == {4}


def test_delta_l_dir_substitution():
    # n_L = 2, no chain extension, |tau| = 5, parents carry 3 and 4
    parents = [Vertex(id=i, tracklet=Tracklet([[0, 0, i]]), members=1) for i in (1, 2)]
    parents[0].aux = AuxData(0, 0, 0, 1, 1, 3, 0, 0)
    parents[1].aux = AuxData(0, 0, 0, 1, 1, 4, 0, 0)
    for p in parents:
        p.children = {3: None, 99: None}
    v = Vertex(id=3, tracklet=Tracklet([[1, 5, 3]]), members=2)
    assert delta_l_dir_refined(v, parents) == 17
    assert delta_l_dir_unrefined(v, parents) == 17


def test_refined_gain_drops_forward_chain():
    # labeled 1 has the single child 2: 2 is labeled for free
    g = MSGraph.from_edges([(1, 2)], labels={1: "a"}, lengths={1: 3, 2: 5})
    assert g.aux(2).delta_l_dir == 0
    g = MSGraph.from_edges([(1, 2)], labels={1: "a"}, lengths={1: 3, 2: 5}, refined=False)
    assert g.aux(2).delta_l_dir == 5


def test_diamond_counts_paths_not_sources():
    g = MSGraph.from_edges([(1, 2), (1, 3), (2, 4), (3, 4)], members={1: 2, 4: 2})
    assert g.aux(4).n_not_labeled == 2
    _assert_matches_oracle(g)


def test_all_labeled():
    g = MSGraph.from_edges([(1, 2), (2, 3)], labels={1: "a", 2: "a", 3: "a"})
    for v in g.vertices:
        assert (g.aux(v).n_not_labeled, g.aux(v).n_origins) == (0, 1)


def test_deep_cone_matches_oracle():
    edges = [(i, i + 1) for i in range(1, 10)] + [(i, i + 2) for i in range(1, 9)]
    g = MSGraph.from_edges(edges, members={i: 2 for i in range(3, 11)})
    _assert_matches_oracle(g)
    g.label_vertex(1, "a")
    _assert_matches_oracle(g)


def test_recompute_rejects_cycles():
    g = MSGraph.from_edges([(1, 2), (2, 1)], compute_aux=False)
    with pytest.raises(ValueError):
        recompute_from_scratch(g)


def test_open_tracklet_grows_with_time():
    g = MSGraph()
    a = g.add_solo_vertex(0)
    g.tick(9)
    assert g.aux(a).l_not_dir == 10


# -- update locality ----------------------------------------------------------

class Spy:
    """Wraps a vertex and records every attribute read."""

    def __init__(self, inner, log):
        object.__setattr__(self, "_inner", inner)
        object.__setattr__(self, "_log", log)

    def __getattr__(self, name):
        self._log.append((self._inner.id, name))
        return getattr(self._inner, name)


def test_compute_on_insert_reads_only_vertex_and_parents():
    g = MSGraph.from_edges([(1, 3), (2, 3), (0, 1), (3, 4)], vertices=[0],
                           labels={2: "a"}, members={3: 2})
    log = []
    v = g.vertices[3]
    got = compute_on_insert(Spy(v, log), [Spy(g.vertices[p], log) for p in v.parents])
    assert got == g.aux(3)
    assert {vid for vid, _ in log} <= {3, 1, 2}
    # the parents' own parents or children objects are never dereferenced
    assert all(name in {"aux", "children", "id", "label", "members", "tracklet"} for _, name in log)


# -- oracle properties --------------------------------------------------------

@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10**9), n=st.integers(1, 20), refined=st.booleans())
def test_path_enumeration_agrees(seed, n, refined):
    g = oracles.random_dag(random.Random(seed), n, refined=refined)
    for v in g.vertices:
        a = g.aux(v)
        assert a.n_not_labeled == oracles.n_not_labeled(g, v)
        assert a.n_origins == oracles.n_origins(g, v)
        assert a.n_labeled == a.n_origins - a.n_not_labeled >= 0
        assert a.delta_l_dir == oracles.delta_l_dir(g, v, refined)
        if a.p_back and g.vertices[v].label is None:
            assert a.l_not_dir >= g.aux(a.p_back).l_not_dir


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**9), n=st.integers(2, 15))
def test_incremental_equals_scratch_over_events(seed, n):
    def hook(g, stable):
        _assert_matches_oracle(g)

    EventGen(random.Random(seed), n, hook=hook).run(3 * n)


def test_scratch_oracle_both_variants():
    g = oracles.random_dag(random.Random(5), 15)
    for refined in (True, False):
        ref = recompute_from_scratch(g, refined=refined)
        for v in g.vertices:
            assert ref[v].delta_l_dir == oracles.delta_l_dir(g, v, refined)
