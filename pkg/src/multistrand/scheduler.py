"""Zoom decisions: the labeling score policy and the exit-first baseline."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .graph import ContractViolation, MSGraph

__all__ = [
    "Decision",
    "Prediction",
    "STAY",
    "ScoreBreakdown",
    "SchedulerConfig",
    "decide",
    "decide_naive",
    "score_vertex",
]


@dataclass(frozen=True)
class Prediction:
    """What the tracker expects of one visible vertex."""

    e_s: bool
    exit_time: float
    join_flag: bool = False
    expected_sink: bool = False


@dataclass(frozen=True)
class SchedulerConfig:
    s_zo: float = 0.5
    alpha_source: float = 2.0
    alpha_default: float = 1.0
    beta_sink: float = 2.0
    beta_default: float = 1.0
    refined_delta: bool = True
    policy: str = "msg"

    def __post_init__(self):
        if self.policy not in ("msg", "naive"):
            raise ValueError(f"unknown policy {self.policy!r}")
        for name in ("alpha_source", "alpha_default", "beta_sink", "beta_default"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.s_zo < 0:
            raise ValueError("s_zo must be nonnegative")


@dataclass(frozen=True)
class ScoreBreakdown:
    vertex: int
    e_s: bool
    join_flag: bool
    s_f: float
    s_p: float
    alpha: float
    beta: float
    s_l: float


@dataclass(frozen=True)
class Decision:
    """``target`` is the vertex to zoom on, or ``None`` to stay zoomed out."""

    target: int | None = None

    @property
    def zoom(self) -> bool:
        return self.target is not None


STAY = Decision()


def score_vertex(graph: MSGraph, v: int, predictions: Mapping[int, Prediction],
                 cfg: SchedulerConfig) -> ScoreBreakdown:
    vert = graph.vertices.get(v)
    if vert is None or v not in graph.active:
        raise ContractViolation(f"vertex {v} is not on the active frontier")
    if vert.label is not None or not vert.is_solo:
        raise ContractViolation(f"vertex {v} is not an unlabeled solo vertex")
    if vert.aux is None:
        raise ContractViolation(f"vertex {v} has no auxiliary data")
    pred = predictions[v]
    aux = graph.aux(v)
    s_f = aux.n_not_labeled / aux.n_origins if pred.join_flag else 0.0
    s_p = (aux.delta_l_dir + aux.l_not_dir) / aux.n_origins
    alpha = cfg.alpha_source if not vert.parents else cfg.alpha_default
    beta = cfg.beta_sink if pred.expected_sink else cfg.beta_default
    s_l = (alpha * s_f + beta * s_p) if pred.e_s else 0.0
    return ScoreBreakdown(v, pred.e_s, pred.join_flag, s_f, s_p, alpha, beta, s_l)


def candidates(graph: MSGraph, visible: Iterable[int]) -> list[int]:
    out = []
    for v in visible:
        vert = graph.vertices.get(v)
        if vert is not None and vert.label is None and vert.is_solo:
            out.append(v)
    return out


def decide(graph: MSGraph, visible: Iterable[int], predictions: Mapping[int, Prediction],
           cfg: SchedulerConfig) -> Decision:
    """Zoom on the highest-scoring vertex if it beats the zoom-out score."""
    if cfg.policy == "naive":
        return decide_naive(graph, visible, predictions)
    if graph.refined != cfg.refined_delta:
        raise ContractViolation("graph and scheduler disagree on the direct-gain variant")
    best, best_key = None, None
    for v in candidates(graph, visible):
        sc = score_vertex(graph, v, predictions, cfg)
        key = (-sc.s_l, predictions[v].exit_time, v)
        if best_key is None or key < best_key:
            best, best_key = sc, key
    if best is None or best.s_l <= cfg.s_zo:
        return STAY
    return Decision(best.vertex)


def decide_naive(graph: MSGraph, visible: Iterable[int],
                 predictions: Mapping[int, Prediction]) -> Decision:
    """Zoom on the capturable unlabeled target expected to leave first.

    Reads only labels and member counts, never auxiliary data.
    """
    best, best_key = None, None
    for v in candidates(graph, visible):
        pred = predictions[v]
        if not pred.e_s:
            continue
        key = (pred.exit_time, v)
        if best_key is None or key < best_key:
            best, best_key = v, key
    return STAY if best is None else Decision(best)
