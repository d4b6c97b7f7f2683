"""Labeled fraction against crowd interaction, for both policies.

Runs a reduced copy of the default sweep and prints mean M per bucket of
n_js (the number of times a walker leaves a group), first for the
graph-aware policy, then for the exit-order baseline.

    python demos/policy_curve.py [reps]
"""
import sys

from multistrand import run_batch
from multistrand.batch import DEFAULT_SWEEP

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 4
report = run_batch(DEFAULT_SWEEP, reps=reps, offline=False)
print(f"{report.paired_runs()} scenes, each under both policies")
print("n_js      graph-aware   exit order   scenes")
for b, d in report.buckets().items():
    (m, n), (naive, _) = d["msg"], d["naive"]
    bar = "#" * round(20 * (m - naive)) if m > naive else ""
    print(f"{b:2d}-{b + 2:<2d}     {m:.3f}         {naive:.3f}        {n:3d}  {bar}")
