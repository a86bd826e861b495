"""Phase-transition experiment harness.

Random instances follow the usual Gaussian ensemble: ``A`` has i.i.d.
``N(0, 1/m)`` entries, ``x*`` is nonnegative and k-sparse with a uniformly
random support and values ``|N(0, 1)|``, and ``y = A x* + noise_level * h/||h||``
with ``h`` standard Gaussian.

Randomness
----------
Every (k, trial) pair owns an independent stream. Its 64-bit key is
``SeedSequence(plan.seed, spawn_key=(k, trial)).generate_state(1, uint64)``
and the stream is ``Generator(Philox(key=...))`` (counter-based, so trials can
run in any order or in parallel). Normals come from numpy's ziggurat sampler;
the support is drawn by a partial Fisher-Yates shuffle over ``range(n)``.
"""
import csv
import logging
import math
import os

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import MeasurementMatrix
from .recovery import ALGORITHMS, RecoveryConfig, run_recovery

__all__ = [
    "ExperimentPlan",
    "Instance",
    "SweepSummary",
    "TrialOutcome",
    "desk_plan",
    "gen_instance",
    "paper_plan",
    "run_sweep",
    "success_check",
    "summarize",
    "trial_rng",
    "trial_seed",
    "write_outcomes",
    "write_plot_data",
    "write_summary",
    "write_thresholds",
]

log = logging.getLogger(__name__)

LEVELS = (0.9, 0.8, 0.5)
OUTCOME_HEADER = ["algo", "k", "trial", "seed", "success", "rel_error", "iters", "wall_time_s"]
SUMMARY_HEADER = ["algo", "k", "success_freq", "mean_time_success"]


@dataclass
class Instance:
    A: np.ndarray
    x_star: np.ndarray
    y: np.ndarray
    noise: np.ndarray


def trial_seed(seed, k, trial):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(k), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_rng(key):
    return np.random.Generator(np.random.Philox(key=int(key)))


def _partial_fisher_yates(rng, n, k):
    idx = np.arange(n)
    for i in range(k):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    return np.sort(idx[:k])


def gen_instance(m, n, k, noise_level, rng):
    """Draw ``(A, x*, y)``; ``rng`` is a Generator or an integer stream key."""
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")
    if not isinstance(rng, np.random.Generator):
        rng = trial_rng(rng)
    A = rng.standard_normal((m, n)) / math.sqrt(m)
    supp = _partial_fisher_yates(rng, n, k)
    x = np.zeros(n)
    x[supp] = np.abs(rng.standard_normal(k))
    y = A @ x
    noise = np.zeros(m)
    if noise_level > 0:
        h = rng.standard_normal(m)
        noise = noise_level * h / np.linalg.norm(h)
        y = y + noise
    return Instance(A, x, y, noise)


def success_check(x_hat, x_star, tol=1e-4):
    """``(rel_error <= tol, rel_error)`` with ``rel_error = ||x_hat - x*|| / ||x*||``."""
    x_star = np.asarray(x_star, dtype=np.float64)
    ref = np.linalg.norm(x_star)
    if ref == 0:
        raise ValueError("relative error undefined for a zero ground truth")
    err = float(np.linalg.norm(np.asarray(x_hat, dtype=np.float64) - x_star) / ref)
    return err <= tol, err


@dataclass
class ExperimentPlan:
    m: int
    n: int
    k_grid: list
    trials_per_k: int
    noise_level: float = 0.0
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    seed: int = 0
    success_tol: float = 1e-4

    def __post_init__(self):
        self.k_grid = [int(k) for k in self.k_grid]
        if self.k_grid != sorted(self.k_grid):
            raise ValueError("k_grid must be sorted ascending")
        if self.k_grid and not (1 <= self.k_grid[0] and self.k_grid[-1] <= self.n):
            raise ValueError("k_grid entries must lie in [1, n]")
        if self.trials_per_k < 1:
            raise ValueError("trials_per_k must be at least 1")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        self.algorithms = [a if isinstance(a, RecoveryConfig) else RecoveryConfig(a, 1)
                           for a in self.algorithms]

    def label(self, cfg):
        return cfg.algorithm


def paper_plan(noise_level=0.0, seed=0):
    return ExperimentPlan(600, 2000, list(range(5, 401, 5)), 50, noise_level,
                          seed=seed, success_tol=1e-4 if noise_level == 0 else 1e-3)


def desk_plan(noise_level=0.0, seed=0):
    """Quarter-scale version of :func:`paper_plan`.

    The methods whose default cap is ``m`` keep the 600-iteration budget they
    get at full scale; a cap of 150 would truncate RHT and NDRT long before
    they converge at the larger sparsity levels.
    """
    algos = [RecoveryConfig(a, 1, max_iters=600 if a in ("RHT", "NDRT", "NNSP") else None)
             for a in ALGORITHMS]
    return ExperimentPlan(150, 500, list(range(5, 126, 5)), 20, noise_level, algos,
                          seed=seed, success_tol=1e-4 if noise_level == 0 else 1e-3)


@dataclass
class TrialOutcome:
    algorithm: str
    k: int
    trial_index: int
    success: bool
    rel_error: float
    wall_time_s: float
    iterations: int
    seed_used: int


def _run_trial(plan, k, trial):
    key = trial_seed(plan.seed, k, trial)
    inst = gen_instance(plan.m, plan.n, k, plan.noise_level, trial_rng(key))
    A = MeasurementMatrix(inst.A)
    out = []
    for template in plan.algorithms:
        cfg = replace(template, k=k)
        name = plan.label(cfg)
        try:
            res = run_recovery(A, inst.y, cfg)
            ok, err = success_check(res.x, inst.x_star, plan.success_tol)
            out.append(TrialOutcome(name, k, trial, ok, err, res.wall_time_s,
                                    res.iterations, key))
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.warning("%s failed at k=%d trial=%d: %s", name, k, trial, exc)
            out.append(TrialOutcome(name, k, trial, False, math.inf, 0.0, 0, key))
    return out


def _run_trial_args(args):
    return _run_trial(*args)


@dataclass
class SweepSummary:
    algorithms: list
    k_grid: list
    success_frequency: dict
    mean_time_success: dict
    thresholds: dict

    def frequency_table(self):
        """Array of shape (len(algorithms), len(k_grid))."""
        return np.array([[self.success_frequency[a, k] for k in self.k_grid]
                         for a in self.algorithms])


def summarize(outcomes, algorithms, k_grid, levels=LEVELS):
    buckets = {(a, k): [] for a in algorithms for k in k_grid}
    for o in outcomes:
        buckets[o.algorithm, o.k].append(o)
    freq, mean_t = {}, {}
    for key, group in buckets.items():
        freq[key] = sum(o.success for o in group) / len(group) if group else 0.0
        times = [o.wall_time_s for o in group if o.success]
        mean_t[key] = sum(times) / len(times) if times else None
    thresholds = {}
    for a in algorithms:
        thresholds[a] = {}
        for lev in levels:
            ok = [k for k in k_grid if freq[a, k] >= lev]
            thresholds[a][lev] = max(ok) if ok else 0
    return SweepSummary(list(algorithms), list(k_grid), freq, mean_t, thresholds)


def run_sweep(plan, workers=1, progress=None):
    """Run every algorithm on the same fresh instance for each (k, trial).

    Returns ``(outcomes, summary)``; outcomes are ordered by k, trial, then
    the plan's algorithm order regardless of ``workers``.
    """
    names = [plan.label(c) for c in plan.algorithms]
    jobs = [(plan, k, t) for k in plan.k_grid for t in range(plan.trials_per_k)]
    outcomes = []
    if not names:
        return outcomes, summarize(outcomes, names, plan.k_grid)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, chunk in enumerate(pool.map(_run_trial_args, jobs, chunksize=1)):
                outcomes.extend(chunk)
                if progress:
                    progress(i + 1, len(jobs))
    else:
        for i, job in enumerate(jobs):
            outcomes.extend(_run_trial(*job))
            if progress:
                progress(i + 1, len(jobs))
    return outcomes, summarize(outcomes, names, plan.k_grid)


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_outcomes(path, outcomes):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OUTCOME_HEADER)
        for o in outcomes:
            w.writerow([o.algorithm, o.k, o.trial_index, o.seed_used, int(o.success),
                        _fmt(o.rel_error), o.iterations, _fmt(o.wall_time_s)])


def read_outcomes(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialOutcome(row["algo"], int(row["k"]), int(row["trial"]),
                                    bool(int(row["success"])), float(row["rel_error"]),
                                    float(row["wall_time_s"]), int(row["iters"]),
                                    int(row["seed"])))
    return out


def write_summary(path, summary):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for a in summary.algorithms:
            for k in summary.k_grid:
                w.writerow([a, k, _fmt(summary.success_frequency[a, k]),
                            _fmt(summary.mean_time_success[a, k])])


def write_thresholds(path, summary):
    """One row per success level, one column per algorithm."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["success_frequency"] + summary.algorithms)
        levels = next(iter(summary.thresholds.values())).keys() if summary.thresholds else []
        for lev in levels:
            w.writerow([f"{lev:g}"] + [summary.thresholds[a][lev] for a in summary.algorithms])


def write_plot_data(directory, summary):
    """Gnuplot-style blocks (``k value`` pairs), one block per algorithm.

    Times are written as ``log2(seconds)`` and only where some trial succeeded.
    """
    paths = []
    for fname, getter in (("plot_success.dat", lambda a, k: summary.success_frequency[a, k]),
                          ("plot_time_log2.dat", lambda a, k: summary.mean_time_success[a, k])):
        path = os.path.join(directory, fname)
        with open(path, "w") as fh:
            for a in summary.algorithms:
                fh.write(f"# {a}\n")
                for k in summary.k_grid:
                    v = getter(a, k)
                    if v is None:
                        continue
                    if fname.startswith("plot_time"):
                        v = math.log2(v) if v > 0 else float("-inf")
                    fh.write(f"{k} {v!r}\n")
                fh.write("\n\n")
        paths.append(path)
    return paths


