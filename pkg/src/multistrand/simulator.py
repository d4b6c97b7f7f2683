"""Synthetic pedestrian scene, zooming camera and tracker stub.

Targets walk on two families of diagonal roads across a square arena, meet,
walk together for a while and split again.  The camera alternates between a
wide view, where every blob is tracked, and zoom-in on a single target, during
which everything else is unobserved.  The tracker stub turns what the camera
sees into graph events and keeps ground truth for scoring.

Physics draws from its own random stream and never looks at the camera, so
two runs with the same scene seed see the same walks, joins and splits
whichever policy drives the camera.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

from .graph import MSGraph
from .metrics import compute_m, compute_m_by_observation, compute_njs, ideal_bound
from .scheduler import Decision, Prediction, SchedulerConfig, decide

__all__ = [
    "Blob",
    "GroundTruth",
    "RunResult",
    "SceneConfig",
    "ScenarioScript",
    "Simulation",
    "TargetSpec",
    "World",
    "generate_scene",
    "predict",
    "run_simulation",
    "scenario_a",
]

DIAG = 1 / math.sqrt(2)


@dataclass
class SceneConfig:
    n_targets: int = 10
    grid_size: int = 8
    arena: float = 100.0
    entry_window: tuple = (0, 150)
    speed_range: tuple = (1.0, 2.0)
    p_join: float = 0.5
    join_duration_range: tuple = (8, 20)
    zoom_duration: int = 5
    join_radius: float = 2.5
    gate_radius: float = 8.0
    facing: str = "south"
    p_turn: float = 0.0
    entry_edges: str = "north"
    dwell_range: tuple = (0, 0)
    seed: int = 0

    def __post_init__(self):
        self.entry_window = tuple(self.entry_window)
        self.speed_range = tuple(self.speed_range)
        self.join_duration_range = tuple(self.join_duration_range)
        if self.grid_size < 1:
            raise ValueError("grid_size must be at least 1")
        if self.n_targets < 0:
            raise ValueError("n_targets must be nonnegative")
        for name in ("p_join", "p_turn"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.entry_edges not in ("north", "all"):
            raise ValueError(f"unknown entry_edges {self.entry_edges!r}")
        self.dwell_range = tuple(self.dwell_range)
        for name in ("entry_window", "speed_range", "join_duration_range", "dwell_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty")
        if self.speed_range[0] <= 0 or self.join_duration_range[0] < 1:
            raise ValueError("speeds and join durations must be positive")
        if self.zoom_duration < 1:
            raise ValueError("zoom_duration must be at least 1")
        if self.facing not in ("south", "any"):
            raise ValueError(f"unknown facing rule {self.facing!r}")

    @classmethod
    def from_dict(cls, d: dict) -> SceneConfig:
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown scene keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


@dataclass(frozen=True)
class TargetSpec:
    id: int
    entry_time: int
    x: float
    y: float
    vx: float
    vy: float
    dwell: int = 0

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass
class ScenarioScript:
    config: SceneConfig
    targets: list


def _entry_roads(cfg: SceneConfig) -> list[tuple[float, float, float, float]]:
    """Entry point and unit heading of every road usable by a new target.

    Roads are the lines x+y=a and x-y=b, spaced ``arena / grid_size`` apart.
    With ``entry_edges="north"`` targets only enter walking south, on roads
    crossing the middle of the arena; with ``"all"`` every road end is an
    entrance.
    """
    size, g = cfg.arena, cfg.grid_size
    s = size / g
    roads = []
    for k in range(1, 2 * g):
        a = k * s
        if cfg.entry_edges == "north":
            if size / 2 <= a <= 1.5 * size:
                roads.append((*((0.0, a) if a <= size else (a - size, size)), DIAG, -DIAG))
            continue
        if a <= size:
            roads += [(0.0, a, DIAG, -DIAG), (a, 0.0, -DIAG, DIAG)]
        else:
            roads += [(a - size, size, DIAG, -DIAG), (size, a - size, -DIAG, DIAG)]
    for k in range(-g + 1, g):
        b = k * s
        if cfg.entry_edges == "north":
            if -size / 2 <= b <= size / 2:
                roads.append((*((size, size - b) if b >= 0 else (size + b, size)), -DIAG, -DIAG))
            continue
        if b >= 0:
            roads += [(b, 0.0, DIAG, DIAG), (size, size - b, -DIAG, -DIAG)]
        else:
            roads += [(0.0, -b, DIAG, DIAG), (size + b, size, -DIAG, -DIAG)]
    return roads


def generate_scene(cfg: SceneConfig) -> ScenarioScript:
    """Random entries, roads and speeds; a pure function of ``cfg.seed``."""
    rng = random.Random(cfg.seed)
    roads = _entry_roads(cfg)
    if not roads:
        raise ValueError("the road grid has no usable roads")
    lo, hi = cfg.entry_window
    targets = []
    for z in range(1, cfg.n_targets + 1):
        t = rng.randint(lo, hi)
        x, y, dx, dy = rng.choice(roads)
        speed = rng.uniform(*cfg.speed_range)
        dwell = rng.randint(*cfg.dwell_range) if cfg.dwell_range != (0, 0) else 0
        targets.append(TargetSpec(z, t, x, y, dx * speed, dy * speed, dwell))
    targets.sort(key=lambda s: (s.entry_time, s.id))
    return ScenarioScript(cfg, targets)


def scenario_a(**overrides) -> ScenarioScript:
    """Three targets; the first two meet, walk together and split again.

    The third target crosses nobody and leaves first.  The pair meets while
    a camera busy with the third target is still zoomed in.
    """
    base = dict(n_targets=3, p_join=1.0, join_duration_range=(12, 12), arena=100.0,
                entry_window=(0, 0), speed_range=(1.0, 1.0), seed=0)
    base.update(overrides)
    cfg = SceneConfig(**base)
    v = DIAG
    targets = [
        TargetSpec(1, 0, 45.0, 100.0, v, -v),
        TargetSpec(2, 0, 55.0, 100.0, -v, -v),
        TargetSpec(3, 0, 100.0, 25.0, -v, -v),
    ]
    return ScenarioScript(cfg, targets)


# ----------------------------------------------------------------------
# physics


class Blob:
    """A target or a group of targets moving as one."""

    __slots__ = ("bid", "members", "x", "y", "vx", "vy", "created", "joinable_from",
                 "split_at", "vertex", "piece", "contacts", "cross")

    def __init__(self, bid, members, x, y, vx, vy, created, joinable_from, split_at=None):
        self.bid = bid
        self.members = tuple(sorted(members))
        self.x, self.y, self.vx, self.vy = x, y, vx, vy
        self.created = created
        self.joinable_from = joinable_from
        self.split_at = split_at
        self.vertex = None
        self.piece = None
        self.contacts = set()
        self.cross = None

    @property
    def size(self) -> int:
        return len(self.members)

    def __repr__(self):
        return f"<blob {self.bid} {self.members} ({self.x:.1f},{self.y:.1f})>"


@dataclass
class PhysicsEvents:
    exits: list = field(default_factory=list)
    splits: list = field(default_factory=list)
    joins: list = field(default_factory=list)
    enters: list = field(default_factory=list)


class World:
    """Target motion, joins, splits, entries and exits."""

    def __init__(self, script: ScenarioScript):
        self.cfg = script.config
        self.script = script
        self.rng = random.Random(self.cfg.seed * 2 + 1)
        self.blobs: dict[int, Blob] = {}
        self.speed = {s.id: (s.vx, s.vy) for s in script.targets}
        self.leave_at = {s.id: s.entry_time + s.dwell for s in script.targets}
        self._pending = list(script.targets)
        self._next_bid = 1
        self.t = -1
        size = self.cfg.arena
        self.margin = (self.cfg.zoom_duration + 2) * self.cfg.speed_range[1]
        self.bounds = (0.0, size)
        self.spacing = size / self.cfg.grid_size

    @property
    def done(self) -> bool:
        return not self._pending and not self.blobs

    def inside(self, x: float, y: float) -> bool:
        lo, hi = self.bounds
        return lo <= x <= hi and lo <= y <= hi

    def _new_blob(self, members, x, y, vx, vy, joinable_from, split_at=None) -> Blob:
        b = Blob(self._next_bid, members, x, y, vx, vy, self.t, joinable_from, split_at)
        self._next_bid += 1
        self.blobs[b.bid] = b
        return b

    def _duration(self) -> int:
        return self.rng.randint(*self.cfg.join_duration_range)

    def _velocity_for(self, members, direction) -> tuple[float, float]:
        lead = min(members)
        vx, vy = self.speed[lead]
        speed = math.hypot(vx, vy)
        dx, dy = direction
        norm = math.hypot(dx, dy)
        return dx / norm * speed, dy / norm * speed

    def _perpendicular(self, vx: float, vy: float) -> tuple[float, float]:
        options = [(-vy, vx), (vy, -vx)]
        if self.cfg.p_turn == 0.0:
            # without turning everybody keeps walking south
            return min(options, key=lambda d: d[1])
        return self.rng.choice(options)

    def lingering(self, b: Blob) -> bool:
        """Whether some member still wants to stay inside the arena."""
        return any(self.leave_at[z] > self.t for z in b.members)

    def _next_inside(self, px: float, py: float, dx: float, dy: float) -> bool:
        step = self.spacing / math.sqrt(2) / math.hypot(dx, dy)
        lo, hi = self.bounds
        x, y = px + dx * step, py + dy * step
        return lo + 1e-6 < x < hi - 1e-6 and lo + 1e-6 < y < hi - 1e-6

    def _stay_inside(self, b: Blob, px: float, py: float) -> None:
        # a lingering walker never takes a road that leaves before the next crossing
        if self._next_inside(px, py, b.vx, b.vy):
            return
        perp = [(-b.vy, b.vx), (b.vy, -b.vx)]
        self.rng.shuffle(perp)
        for d in (*perp, (-b.vx, -b.vy)):
            if self._next_inside(px, py, *d):
                b.vx, b.vy = d
                return

    def _move(self, b: Blob) -> None:
        """Advance one step along the road, possibly turning at an intersection."""
        s = self.spacing
        if b.vx * b.vy < 0:
            q0, dq = b.x - b.y, b.vx - b.vy
        else:
            q0, dq = b.x + b.y, b.vx + b.vy
        if dq > 0:
            qc = (math.floor(q0 / s + 1e-9) + 1) * s
        else:
            qc = (math.ceil(q0 / s - 1e-9) - 1) * s
        f = (qc - q0) / dq
        b.cross = None
        if 0 < f <= 1:
            px, py = b.x + b.vx * f, b.y + b.vy * f
            b.cross = (px, py, f)
            heading = (b.vx, b.vy)
            if self.cfg.p_turn and self.rng.random() < self.cfg.p_turn:
                b.vx, b.vy = self._perpendicular(b.vx, b.vy)
            if self.lingering(b):
                self._stay_inside(b, px, py)
            if (b.vx, b.vy) != heading:
                b.x, b.y = px + b.vx * (1 - f), py + b.vy * (1 - f)
                return
        b.x += b.vx
        b.y += b.vy

    def advance(self) -> PhysicsEvents:
        self.t += 1
        t = self.t
        ev = PhysicsEvents()
        for b in self.blobs.values():
            self._move(b)

        for bid in [bid for bid, b in self.blobs.items() if not self.inside(b.x, b.y)]:
            ev.exits.append(self.blobs.pop(bid))

        lo, hi = self.bounds
        for b in list(self.blobs.values()):
            if b.split_at is None or b.split_at > t or b.cross is None:
                continue
            if min(b.x - lo, hi - b.x, b.y - lo, hi - b.y) < self.margin:
                continue
            px, py, f = b.cross
            k = self.rng.randint(1, b.size - 1)
            detached = tuple(sorted(self.rng.sample(b.members, k)))
            kept = tuple(z for z in b.members if z not in detached)
            del self.blobs[b.bid]
            parts = []
            for members, direction in ((kept, (b.vx, b.vy)),
                                       (detached, self._perpendicular(b.vx, b.vy))):
                vx, vy = self._velocity_for(members, direction)
                split_at = t + self._duration() if len(members) > 1 else None
                x, y = px + vx * (1 - f), py + vy * (1 - f)
                parts.append(self._new_blob(members, x, y, vx, vy, t + 1, split_at))
            parts[0].contacts.add(parts[1].bid)
            parts[1].contacts.add(parts[0].bid)
            ev.splits.append((b, parts))

        self._update_contacts(ev)

        while self._pending and self._pending[0].entry_time <= t:
            s = self._pending.pop(0)
            b = self._new_blob((s.id,), s.x, s.y, s.vx, s.vy, t + self.cfg.zoom_duration + 1)
            ev.enters.append(b)
        if ev.enters:
            self._refresh_contacts()
        return ev

    def _refresh_contacts(self) -> None:
        r2 = self.cfg.join_radius ** 2
        blobs = list(self.blobs.values())
        for b in blobs:
            b.contacts = {o.bid for o in blobs
                          if o is not b and (o.x - b.x) ** 2 + (o.y - b.y) ** 2 <= r2}

    def _update_contacts(self, ev: PhysicsEvents) -> None:
        t = self.t
        r2 = self.cfg.join_radius ** 2
        blobs = sorted(self.blobs.values(), key=lambda b: b.bid)
        near = {b.bid: set() for b in blobs}
        fresh = []
        for i, a in enumerate(blobs):
            for b in blobs[i + 1:]:
                if (a.x - b.x) ** 2 + (a.y - b.y) ** 2 <= r2:
                    near[a.bid].add(b.bid)
                    near[b.bid].add(a.bid)
                    if b.bid not in a.contacts:
                        fresh.append((a, b))
        for b in blobs:
            b.contacts = near[b.bid]
        used = set()
        for a, b in fresh:
            # one coin per new meeting, drawn whether or not the pair may join
            coin = self.rng.random()
            if a.bid in used or b.bid in used:
                continue
            if a.joinable_from > t or b.joinable_from > t:
                continue
            if coin >= self.cfg.p_join:
                continue
            used.update((a.bid, b.bid))
            lead = a if min(a.members) < min(b.members) else b
            del self.blobs[a.bid], self.blobs[b.bid]
            g = self._new_blob(a.members + b.members, lead.x, lead.y, lead.vx, lead.vy,
                               t + 1, t + self._duration())
            g.contacts = (a.contacts | b.contacts) - {a.bid, b.bid}
            for o in g.contacts:
                other = self.blobs.get(o)
                if other is not None:
                    other.contacts.discard(a.bid)
                    other.contacts.discard(b.bid)
                    other.contacts.add(g.bid)
            ev.joins.append(((a, b), g))


# ----------------------------------------------------------------------
# tracker predictions


def _exit_steps(cfg: SceneConfig, b: Blob) -> float:
    lo, hi = 0.0, cfg.arena
    steps = math.inf
    for p, v in ((b.x, b.vx), (b.y, b.vy)):
        if v > 0:
            steps = min(steps, (hi - p) / v)
        elif v < 0:
            steps = min(steps, (p - lo) / -v)
    # first step at which the blob is outside
    return math.floor(steps) + 1


def _closest_approach(a: Blob, b: Blob, horizon: float) -> float:
    """Smallest distance between two straight-line extrapolations within ``horizon``."""
    px, py = b.x - a.x, b.y - a.y
    vx, vy = b.vx - a.vx, b.vy - a.vy
    vv = vx * vx + vy * vy
    s = 0.0 if vv == 0 else min(max(-(px * vx + py * vy) / vv, 0.0), horizon)
    return math.hypot(px + vx * s, py + vy * s)


def facing(cfg: SceneConfig, b: Blob) -> bool:
    return cfg.facing == "any" or b.vy < 0


def predict(world: World, blobs: list[Blob], horizon: int | None = None) -> dict[int, Prediction]:
    """Per-blob tracker predictions, keyed by blob id."""
    cfg = world.cfg
    d = cfg.zoom_duration
    horizon = 2 * d if horizon is None else horizon
    out = {}
    for b in blobs:
        exit_in = _exit_steps(cfg, b)
        # the tracker is told how long a walker intends to stay
        stay = max(world.leave_at[z] for z in b.members) - world.t
        if stay > 0:
            exit_in += stay
        join_flag = False
        for o in blobs:
            if o is b or o.bid in b.contacts:
                continue
            if _closest_approach(b, o, min(horizon, exit_in)) <= cfg.join_radius:
                join_flag = True
                break
        out[b.bid] = Prediction(
            e_s=exit_in > d and facing(cfg, b),
            exit_time=world.t + exit_in,
            join_flag=join_flag,
            expected_sink=exit_in <= horizon and not join_flag,
        )
    return out


# ----------------------------------------------------------------------
# ground truth and run driver


@dataclass
class GroundTruth:
    trajectories: dict = field(default_factory=dict)
    piece_owners: dict = field(default_factory=dict)
    log: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    entered: dict = field(default_factory=dict)
    exited: dict = field(default_factory=dict)

    @property
    def targets(self) -> list:
        return sorted(self.entered)


@dataclass
class RunMetrics:
    m: float
    n_js: int
    labelings_attempted: int
    labelings_succeeded: int
    vertices: int
    edges: int
    ideal_bound: int
    wall_time: float
    aux_writes: int
    vertices_created: int
    m_check: float


@dataclass
class RunResult:
    graph: MSGraph
    truth: GroundTruth
    metrics: RunMetrics
    script: ScenarioScript
    decisions: list


@dataclass
class _Hidden:
    vertex: int
    members: tuple
    x: float
    y: float
    vx: float
    vy: float
    t: int


class Simulation:
    """Drive a scene, the camera and the graph to completion.

    ``camera=False`` never zooms (used to replay the unobstructed graph).
    ``on_event`` is called after every graph mutation, for invariant checks.
    """

    def __init__(self, script: ScenarioScript, sched: SchedulerConfig | None = None, *,
                 untangle: bool = True, camera: bool = True, max_gap: int | None = None,
                 horizon: int | None = None, record: bool = True,
                 on_event: Callable[[Simulation, str], None] | None = None):
        self.script = script
        self.cfg = script.config
        self.sched = sched or SchedulerConfig()
        self.world = World(script)
        d = self.cfg.zoom_duration
        self.graph = MSGraph(refined=self.sched.refined_delta,
                             max_gap=d + 2 if max_gap is None else max_gap,
                             matching=self.sched.policy == "msg",
                             untangle=untangle, record=record)
        self.camera = camera
        self.horizon = horizon
        self.truth = GroundTruth()
        self.on_event = on_event
        self.zoom = None
        self.decisions: list[tuple[int, int, int, bool]] = []
        self.attempted = 0
        self.succeeded = 0

    # -- helpers

    def _emit(self, kind: str) -> None:
        if self.on_event is not None:
            self.on_event(self, kind)

    def _open(self, b: Blob, t: int) -> None:
        vid = self.graph.add_vertex(t, members=b.size)
        b.vertex = b.piece = vid
        self.truth.piece_owners[vid] = frozenset(b.members)

    def vertex_of(self, b: Blob) -> int:
        return self.graph.resolve(b.vertex)

    @property
    def zoomed(self) -> bool:
        return self.zoom is not None

    def visible_blobs(self) -> list[Blob]:
        if self.zoom is None:
            return sorted(self.world.blobs.values(), key=lambda b: b.bid)
        tb = self.zoom["blob"]
        return [tb] if tb is not None and tb.bid in self.world.blobs else []

    # -- main loop

    def run(self) -> RunResult:
        start = time.perf_counter()
        world = self.world
        while not world.done or self.zoom is not None:
            ev = world.advance()
            t = world.t
            self._record_truth(ev, t)
            if self.zoom is None:
                self._apply_tracked(ev, t)
            elif t <= self.zoom["end"]:
                self._apply_zoomed(ev, t)
            else:
                self._return(ev, t)
            for b in self.visible_blobs():
                for z in b.members:
                    self.truth.observations.append((t, z, b.piece))
            self._emit("step")
            if self.zoom is None and self.camera:
                self._decide(t)
        g = self.graph
        metrics = RunMetrics(
            m=compute_m(g, self.truth),
            n_js=compute_njs(self.truth),
            labelings_attempted=self.attempted,
            labelings_succeeded=self.succeeded,
            vertices=len(g.vertices),
            edges=len(g.edges),
            ideal_bound=ideal_bound(g),
            wall_time=time.perf_counter() - start,
            aux_writes=g.aux_writes,
            vertices_created=g.vertices_created,
            m_check=compute_m_by_observation(g, self.truth),
        )
        return RunResult(g, self.truth, metrics, self.script, self.decisions)

    def _record_truth(self, ev: PhysicsEvents, t: int) -> None:
        tr = self.truth
        for b in ev.exits:
            for z in b.members:
                tr.exited[z] = t
        for old, parts in ev.splits:
            tr.log.append((t, "split", old.members, tuple(p.members for p in parts)))
        for (a, b), g in ev.joins:
            tr.log.append((t, "join", (a.members, b.members), g.members))
        for b in ev.enters:
            tr.entered[b.members[0]] = t
        for b in self.world.blobs.values():
            for z in b.members:
                tr.trajectories.setdefault(z, []).append((t, b.x, b.y))

    def _apply_tracked(self, ev: PhysicsEvents, t: int) -> None:
        g = self.graph
        for b in ev.exits:
            g.close_vertex(self.vertex_of(b), t - 1)
            self._emit("exit")
        for old, parts in ev.splits:
            kids = g.record_split(self.vertex_of(old), t, [p.size for p in parts])
            for p, k in zip(parts, kids):
                p.vertex = p.piece = k
                self.truth.piece_owners[k] = frozenset(p.members)
            self._emit("split")
        for (a, b), grp in ev.joins:
            c = g.record_join([self.vertex_of(a), self.vertex_of(b)], t)
            grp.vertex = grp.piece = c
            self.truth.piece_owners[c] = frozenset(grp.members)
            self._emit("join")
        for b in ev.enters:
            self._open(b, t)
            self._emit("enter")

    def _decide(self, t: int) -> None:
        g = self.graph
        g.tick(t)
        blobs = self.visible_blobs()
        preds = predict(self.world, blobs, self.horizon)
        by_vertex = {}
        for b in blobs:
            by_vertex[self.vertex_of(b)] = preds[b.bid]
        decision: Decision = decide(g, list(by_vertex), by_vertex, self.sched)
        if not decision.zoom:
            return
        target = decision.target
        blob = next(b for b in blobs if self.vertex_of(b) == target)
        hidden = []
        for b in blobs:
            if b is blob:
                continue
            vid = self.vertex_of(b)
            g.close_vertex(vid, t)
            hidden.append(_Hidden(vid, b.members, b.x, b.y, b.vx, b.vy, t))
            self._emit("hide")
        self.zoom = dict(blob=blob, vertex=target, start=t, end=t + self.cfg.zoom_duration,
                         e_s=by_vertex[target].e_s, hidden=hidden, target=blob.members[0],
                         closed=False)
        self.attempted += 1

    def _track_target(self, ev: PhysicsEvents, t: int) -> None:
        """Close the zoom target's vertex if it left or merged into a group."""
        z = self.zoom
        blob = z["blob"]
        if blob is None:
            return
        gone = blob in ev.exits
        joined = any(blob in pair for pair, _ in ev.joins)
        if not (gone or joined):
            return
        vid = self.vertex_of(blob)
        self.graph.close_vertex(vid, t - 1)
        if joined:
            z["hidden"].append(_Hidden(vid, blob.members, blob.x - blob.vx,
                                       blob.y - blob.vy, blob.vx, blob.vy, t - 1))
        z["blob"] = None
        self._emit("zoom-lost")

    def _apply_zoomed(self, ev: PhysicsEvents, t: int) -> None:
        z = self.zoom
        g = self.graph
        self._track_target(ev, t)
        if t != z["end"]:
            return
        target = z["target"]
        if z["e_s"] and target not in self.truth.exited:
            g.tick(t)
            outcome = g.label_vertex(g.resolve(z["vertex"]), target)
            self.succeeded += 1
            self.decisions.append((z["start"], z["vertex"], target, True))
            self._emit(f"label-{outcome.kind}")
        else:
            self.decisions.append((z["start"], z["vertex"], target, False))

    def _return(self, ev: PhysicsEvents, t: int) -> None:
        z = self.zoom
        self._track_target(ev, t)
        self.zoom = None
        g = self.graph
        g.tick(t)
        hidden = z["hidden"]
        keep = z["blob"]
        gate2 = self.cfg.gate_radius ** 2
        alive = [h for h in hidden if any(m not in self.truth.exited for m in h.members)]
        news, cands = [], {}
        for b in sorted(self.world.blobs.values(), key=lambda b: b.bid):
            if b is keep:
                continue
            self._open(b, t)
            news.append(b)
            if all(self.truth.entered[m] > z["start"] for m in b.members):
                cands[b.bid] = []
                continue
            c = []
            for h in alive:
                dt = t - h.t
                px, py = h.x + h.vx * dt, h.y + h.vy * dt
                true = not set(h.members).isdisjoint(b.members)
                if true or (px - b.x) ** 2 + (py - b.y) ** 2 <= gate2:
                    c.append(h)
            cands[b.bid] = c
        self._prune(news, cands)
        for b in news:
            g.add_ambiguity_edges(b.vertex, [g.resolve(h.vertex) for h in cands[b.bid]], merge=False)
            self._emit("reappear")
        g.merge_chains([b.vertex for b in news])
        self._emit("merge")

    @staticmethod
    def _prune(news: list[Blob], cands: dict) -> None:
        # a solo blob with a single solo candidate owns that candidate
        changed = True
        while changed:
            changed = False
            for b in news:
                c = cands[b.bid]
                if b.size != 1 or len(c) != 1 or len(c[0].members) != 1:
                    continue
                owner = c[0]
                for o in news:
                    if o is not b and owner in cands[o.bid]:
                        cands[o.bid] = [h for h in cands[o.bid] if h is not owner]
                        changed = True


def run_simulation(cfg: SceneConfig | ScenarioScript, sched: SchedulerConfig | None = None,
                   **kwargs) -> RunResult:
    script = cfg if isinstance(cfg, ScenarioScript) else generate_scene(cfg)
    return Simulation(script, sched, **kwargs).run()
