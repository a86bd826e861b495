"""A small success-frequency sweep and the files it produces.

This is the same harness the command-line ``bench`` uses, on a grid small
enough to finish in well under a minute.
"""
import os
import tempfile

from nnsparse import bench
from nnsparse.recovery import RecoveryConfig

# %% Plan: 100 x 300, sparsity 10..50, 5 paired trials per level.
plan = bench.ExperimentPlan(
    m=100, n=300, k_grid=list(range(10, 51, 10)), trials_per_k=5, seed=11,
    algorithms=[RecoveryConfig(a, 1, max_iters=400 if a in ("NDRT", "RHT", "NNSP") else None)
                for a in ("NDRT", "NDRTP", "RHT", "RHTP", "NNOMP", "NNSP")])
outcomes, summary = bench.run_sweep(plan)

# %% Success frequency table, one row per algorithm.
print("k      " + " ".join(f"{k:5d}" for k in summary.k_grid))
for a, row in zip(summary.algorithms, summary.frequency_table()):
    print(f"{a:6s} " + " ".join(f"{f:5.2f}" for f in row))

print("\nlargest k reaching each success level:")
for a in summary.algorithms:
    print(f"  {a:6s}", summary.thresholds[a])

# %% Everything can be written to disk in the CSV and gnuplot formats.
out = tempfile.mkdtemp(prefix="nnsparse_demo_")
bench.write_outcomes(os.path.join(out, "outcomes.csv"), outcomes)
bench.write_summary(os.path.join(out, "summary.csv"), summary)
bench.write_thresholds(os.path.join(out, "thresholds.csv"), summary)
bench.write_plot_data(out, summary)
print("\nwrote", sorted(os.listdir(out)), "to", out)
