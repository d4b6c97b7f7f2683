"""Multi-strand tracking graphs with a label-scheduling camera policy."""
from .auxdata import AuxData, compute_on_insert, propagate, recompute_from_scratch
from .batch import BatchReport, SweepSpec, read_csv, run_batch, write_csv
from .export import read_events, replay, to_dot, write_dot, write_events
from .graph import ContractViolation, EventRejected, MatchOutcome, MSGraph, Tracklet, Vertex
from .metrics import compute_m, compute_njs, coverage, ideal_bound, is_ideal
from .offline import replay_unobstructed, solve_offline
from .scheduler import Decision, Prediction, SchedulerConfig, decide, decide_naive, score_vertex
from .simulator import SceneConfig, Simulation, generate_scene, run_simulation, scenario_a

__version__ = "0.1.0"
