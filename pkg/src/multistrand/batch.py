"""Paired msg/naive sweeps over scene parameters, CSV output and bucketing."""
from __future__ import annotations

import csv
import json
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path

from .offline import replay_unobstructed, solve_offline
from .scheduler import SchedulerConfig
from .simulator import SceneConfig, generate_scene, run_simulation

__all__ = [
    "BatchReport",
    "DEFAULT_SWEEP",
    "Job",
    "RunRow",
    "SweepSpec",
    "expand_jobs",
    "read_csv",
    "run_batch",
    "run_job",
    "write_csv",
]

log = logging.getLogger(__name__)

POLICIES = ("msg", "naive")
BUCKET_WIDTH = 3

# The sweep used for the comparison curve: 16 scene settings x 26 repetitions
# gives 416 scenes, each run under both policies.  Walkers linger and turn at
# crossings so that small crowds still meet often.
DEFAULT_SWEEP = {
    "scene": {
        "arena": 50.0,
        "grid_size": 4,
        "speed_range": [0.75, 1.125],
        "join_radius": 4.0,
        "join_duration_range": [5, 15],
        "gate_radius": 3.0,
        "zoom_duration": 10,
        "p_turn": 0.6,
        "entry_edges": "all",
        "facing": "any",
        "entry_window": [0, 60],
        "dwell_range": [150, 300],
    },
    "n_targets": [4, 8, 12, 16],
    "p_join": [0.25, 0.5, 0.75, 1.0],
    "entry_window_per_target": None,
    "reps": 26,
    "base_seed": 0,
    "scheduler": {},
}


@dataclass
class SweepSpec:
    scene: dict = field(default_factory=dict)
    n_targets: list = field(default_factory=lambda: [10])
    p_join: list = field(default_factory=lambda: [0.5])
    entry_window_per_target: float | None = None
    reps: int = 1
    base_seed: int = 0
    scheduler: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> SweepSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        spec = cls(**d)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str | Path) -> SweepSpec:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def validate(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.n_targets or not self.p_join:
            raise ValueError("sweep axes must be non-empty")
        for key in ("n_targets", "p_join", "seed", "entry_window"):
            if key in self.scene and (key != "entry_window" or self.entry_window_per_target is not None):
                raise ValueError(f"scene.{key} is set by the sweep itself")
        SchedulerConfig(**self.scheduler)
        # fail early on bad scene keys
        SceneConfig.from_dict(self.scene)


@dataclass(frozen=True)
class Job:
    seed: int
    scene: SceneConfig
    scheduler: dict

    @property
    def n_targets(self) -> int:
        return self.scene.n_targets

    @property
    def p_join(self) -> float:
        return self.scene.p_join


def expand_jobs(spec: SweepSpec) -> list[Job]:
    """One job per (n_targets, p_join, repetition), each with its own seed."""
    jobs = []
    seed = spec.base_seed
    for n, pj in product(spec.n_targets, spec.p_join):
        for _ in range(spec.reps):
            over = dict(spec.scene, n_targets=n, p_join=pj, seed=seed)
            if spec.entry_window_per_target is not None:
                over["entry_window"] = (0, max(0, round(spec.entry_window_per_target * n)))
            jobs.append(Job(seed, SceneConfig.from_dict(over), dict(spec.scheduler)))
            seed += 1
    return jobs


@dataclass
class RunRow:
    seed: int
    policy: str
    n_js: int
    m: float
    labelings: int
    vertices: int
    edges: int
    ideal_bound: int
    wall_time: float
    n_targets: int
    p_join: float
    labelings_attempted: int
    aux_writes: int
    vertices_created: int
    m_check: float
    offline_checked: int
    offline_ok: int


COLUMNS = [f.name for f in fields(RunRow)]
_TYPES = {f.name: f.type for f in fields(RunRow)}
_PARSE = {"int": int, "float": float, "str": str}


def run_job(job: Job, offline: bool = True) -> list[RunRow]:
    """Run one scene under both policies; n_js must agree between them."""
    script = generate_scene(job.scene)
    checked = ok = 0
    if offline:
        report = solve_offline(*replay_unobstructed(script))
        checked, ok = len(report.checked), int(report.ok)
    rows = []
    for policy in POLICIES:
        sched = SchedulerConfig(**dict(job.scheduler, policy=policy))
        res = run_simulation(script, sched, record=False)
        mt = res.metrics
        if mt.ideal_bound > 2 * len(res.truth.entered) - 1 and res.truth.entered:
            raise AssertionError(f"ideal bound {mt.ideal_bound} exceeds 2N-1")
        rows.append(RunRow(
            seed=job.seed, policy=policy, n_js=mt.n_js, m=mt.m,
            labelings=mt.labelings_succeeded, vertices=mt.vertices, edges=mt.edges,
            ideal_bound=mt.ideal_bound, wall_time=mt.wall_time,
            n_targets=job.n_targets, p_join=job.p_join,
            labelings_attempted=mt.labelings_attempted, aux_writes=mt.aux_writes,
            vertices_created=mt.vertices_created, m_check=mt.m_check,
            offline_checked=checked, offline_ok=ok,
        ))
    if rows[0].n_js != rows[1].n_js:
        raise AssertionError(f"n_js differs between policies on seed {job.seed}")
    return rows


def _guarded(job: Job, offline: bool):
    try:
        return run_job(job, offline), None
    except Exception as exc:  # reported in the failure manifest
        return [], {"seed": job.seed, "n_targets": job.n_targets, "p_join": job.p_join,
                    "error": repr(exc), "traceback": traceback.format_exc()}


@dataclass
class BatchReport:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def paired_runs(self) -> int:
        return len({r.seed for r in self.rows})

    def by_policy(self, policy: str) -> list[RunRow]:
        return [r for r in self.rows if r.policy == policy]

    def buckets(self, width: int = BUCKET_WIDTH) -> dict[int, dict[str, tuple[float, int]]]:
        """Mean m per policy in n_js buckets ``[k*width, (k+1)*width)``."""
        acc: dict[int, dict[str, list[float]]] = {}
        for r in self.rows:
            acc.setdefault(r.n_js // width * width, {}).setdefault(r.policy, []).append(r.m)
        return {b: {p: (math.fsum(v) / len(v), len(v)) for p, v in sorted(d.items())}
                for b, d in sorted(acc.items())}

    def amortized_writes(self) -> dict[int, float]:
        """Aux-field writes per created vertex, for each scene size."""
        acc: dict[int, list[int]] = {}
        for r in self.rows:
            w, v = acc.setdefault(r.n_targets, [0, 0])
            acc[r.n_targets] = [w + r.aux_writes, v + r.vertices_created]
        return {n: w / v for n, (w, v) in sorted(acc.items()) if v}

    def write_manifest(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.failures, indent=2) + "\n")
        return path


def run_batch(spec: SweepSpec | dict, *, reps: int | None = None, jobs: int = 1,
              offline: bool = True) -> BatchReport:
    """Run every job of the sweep; failures are collected, not raised."""
    if isinstance(spec, dict):
        spec = SweepSpec.from_dict(spec)
    if reps is not None:
        spec = SweepSpec(**dict(asdict(spec), reps=reps))
        spec.validate()
    work = expand_jobs(spec)
    results: dict[int, tuple] = {}
    if jobs <= 1:
        for i, job in enumerate(work):
            results[i] = _guarded(job, offline)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_guarded, job, offline): i for i, job in enumerate(work)}
            for fut in as_completed(futures):
                i = futures[fut]
                try:
                    results[i] = fut.result()
                except Exception as exc:  # the worker process itself died
                    job = work[i]
                    results[i] = [], {"seed": job.seed, "n_targets": job.n_targets,
                                      "p_join": job.p_join, "error": repr(exc), "traceback": ""}
    report = BatchReport()
    for i in range(len(work)):
        rows, failure = results[i]
        report.rows.extend(rows)
        if failure is not None:
            log.warning("seed %s failed: %s", failure["seed"], failure["error"])
            report.failures.append(failure)
    return report


def write_csv(report: BatchReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in report.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in astuple_row(r)])
    return path


def astuple_row(r: RunRow) -> tuple:
    return tuple(getattr(r, c) for c in COLUMNS)


def read_csv(path: str | Path) -> BatchReport:
    report = BatchReport()
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            report.rows.append(RunRow(**{c: _PARSE[_TYPES[c]](rec[c]) for c in COLUMNS}))
    return report
