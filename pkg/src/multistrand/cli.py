"""Command line entry point: ``multistrand run|batch|replay``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .batch import DEFAULT_SWEEP, SweepSpec, run_batch, write_csv
from .export import read_events, replay, write_dot, write_events
from .scheduler import SchedulerConfig
from .simulator import SceneConfig, Simulation, generate_scene, scenario_a

log = logging.getLogger("multistrand")

BUILTIN_SCENES = {"scenario-a": scenario_a}


def _load_json(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"cannot read {path}: {exc}")
    if not isinstance(data, dict):
        raise SystemExit(f"{path}: expected a JSON object")
    return data


def _scene_script(args):
    if args.scene in BUILTIN_SCENES:
        over = {} if args.seed is None else {"seed": args.seed}
        return BUILTIN_SCENES[args.scene](**over), {}
    data = _load_json(args.scene) if args.scene else {}
    sched = data.pop("scheduler", {})
    if args.seed is not None:
        data["seed"] = args.seed
    return generate_scene(SceneConfig.from_dict(data)), sched


def cmd_run(args) -> int:
    script, sched_over = _scene_script(args)
    sched = SchedulerConfig(**dict(sched_over, policy=args.policy))
    dot_dir = Path(args.dot_out) if args.dot_out else None
    snaps = []

    def on_event(sim, kind):
        if dot_dir is not None and kind.startswith("label-"):
            snaps.append(write_dot(sim.graph, dot_dir / f"label-{len(snaps) + 1:03d}-t{sim.world.t}.dot"))

    res = Simulation(script, sched, untangle=not args.no_untangle, on_event=on_event).run()
    if dot_dir is not None:
        write_dot(res.graph, dot_dir / "final.dot")
    if args.events_out:
        write_events(res.graph.events, args.events_out)
    if args.aux_dump:
        g = res.graph
        dump = {str(v): {"label": g.vertices[v].label, "members": g.vertices[v].members,
                         **asdict(g.aux(v))} for v in sorted(g.vertices)}
        Path(args.aux_dump).write_text(json.dumps(dump, indent=1, default=str) + "\n")
    out = asdict(res.metrics)
    out.update(seed=script.config.seed, policy=args.policy)
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_batch(args) -> int:
    spec = SweepSpec.from_dict(_load_json(args.sweep) if args.sweep else dict(DEFAULT_SWEEP))
    report = run_batch(spec, reps=args.reps, jobs=args.jobs)
    if args.csv_out:
        write_csv(report, args.csv_out)
    print(f"paired runs: {report.paired_runs()}")
    print("n_js bucket   M_msg (n)      M_naive (n)")
    for b, d in report.buckets().items():
        cells = [f"{d[p][0]:.3f} ({d[p][1]:3d})" if p in d else "      -      " for p in ("msg", "naive")]
        print(f"{b:3d}-{b + 2:<3d}       {cells[0]}    {cells[1]}")
    for n, ratio in report.amortized_writes().items():
        print(f"aux writes per created vertex, n_targets={n}: {ratio:.2f}")
    if report.failures:
        target = Path(args.csv_out).with_suffix(".failures.json") if args.csv_out \
            else Path("batch.failures.json")
        report.write_manifest(target)
        print(f"{len(report.failures)} job(s) failed, manifest: {target}", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    try:
        events = read_events(args.events_in)
    except (OSError, ValueError) as exc:
        raise SystemExit(f"cannot read {args.events_in}: {exc}")
    dot_dir = Path(args.dot_out) if args.dot_out else None
    n = 0

    def on_event(g, rec):
        nonlocal n
        if dot_dir is not None and rec["kind"] == "label":
            n += 1
            write_dot(g, dot_dir / f"label-{n:03d}-t{rec['t']}.dot")

    try:
        g = replay(events, on_event)
    except ValueError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 1
    if dot_dir is not None:
        write_dot(g, dot_dir / "final.dot")
    print(json.dumps({"events": len(events), "vertices": len(g.vertices),
                      "labeled": len(g.labeled), "snapshots": n}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multistrand", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one simulation")
    r.add_argument("--seed", type=int)
    r.add_argument("--scene", help="scene JSON file, or 'scenario-a'")
    r.add_argument("--policy", choices=("msg", "naive"), default="msg")
    r.add_argument("--dot-out", metavar="DIR", help="write DOT snapshots at each labeling")
    r.add_argument("--events-out", metavar="FILE", help="write the JSONL event log")
    r.add_argument("--no-untangle", action="store_true")
    r.add_argument("--aux-dump", metavar="FILE", help="write final aux data as JSON")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run a paired msg/naive sweep")
    b.add_argument("--sweep", metavar="FILE", help="sweep JSON file (default: built-in sweep)")
    b.add_argument("--reps", type=int, help="override repetitions per setting")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--csv-out", metavar="FILE")
    b.set_defaults(func=cmd_batch)

    rp = sub.add_parser("replay", help="rebuild a graph from an event log")
    rp.add_argument("--events-in", metavar="FILE", required=True)
    rp.add_argument("--dot-out", metavar="DIR")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
