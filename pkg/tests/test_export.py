import pytest

from multistrand.export import read_events, replay, to_dot, write_dot, write_events
from multistrand.graph import MSGraph
from multistrand.scheduler import SchedulerConfig
from multistrand.simulator import SceneConfig, Simulation, generate_scene, scenario_a


def test_dot_shapes_and_labels():
    g = MSGraph.from_edges([(1, 3), (2, 3)], members={3: 2}, labels={1: "a"})
    dot = to_dot(g)
    assert dot.startswith("digraph msg {")
    assert "v1 -> v3;" in dot and "v2 -> v3;" in dot
    assert 'v3 [shape=diamond' in dot and 'v2 [shape=circle' in dot
    assert '"v1*\\na"' in dot


def test_dot_quotes_awkward_labels(tmp_path):
    g = MSGraph.from_edges([], vertices=[1], labels={1: 'say "hi"'})
    path = write_dot(g, tmp_path / "sub" / "g.dot")
    assert '\\"hi\\"' in path.read_text()


def _final_state(g):
    return {v: (x.label, x.members, tuple(sorted(x.parents)), tuple(sorted(x.children)),
                tuple(x.pieces), g.aux(v)) for v, x in g.vertices.items()}


@pytest.mark.parametrize("policy", ["msg", "naive"])
def test_event_log_replays_to_the_same_graph(tmp_path, policy):
    cfg = SceneConfig(n_targets=8, p_join=0.8, seed=5, arena=50.0, grid_size=4,
                      entry_edges="all", facing="any", speed_range=(0.75, 1.125), join_radius=4.0)
    res = Simulation(generate_scene(cfg), SchedulerConfig(policy=policy)).run()
    path = write_events(res.graph.events, tmp_path / "run.jsonl")
    events = read_events(path)
    assert events[0]["kind"] == "config"
    g = replay(events)
    assert _final_state(g) == _final_state(res.graph)


def test_replay_detects_divergence():
    res = Simulation(scenario_a()).run()
    events = [dict(e) for e in res.graph.events]
    split = next(e for e in events if e["kind"] == "split")
    split["vertex_ids"] = split["vertex_ids"][:-1] + [999]
    with pytest.raises(ValueError):
        replay(events)


def test_replay_needs_config_header():
    with pytest.raises(ValueError):
        replay([{"kind": "add", "t": 0, "vertex_ids": [1]}])


def test_bad_jsonl_line_is_reported(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"kind": "config"}\nnot json\n')
    with pytest.raises(ValueError, match=":2:"):
        read_events(p)
