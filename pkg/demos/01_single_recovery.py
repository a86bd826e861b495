"""Recover one nonnegative sparse signal with every algorithm in the package.

A 600 x 2000 Gaussian matrix and a 120-sparse nonnegative signal: hard enough
that the greedy baselines start to struggle, easy enough for the Newton-type
pursuit to finish in a handful of iterations.
"""
import numpy as np

from nnsparse import ALGORITHMS, MeasurementMatrix, RecoveryConfig, run_recovery
from nnsparse.bench import gen_instance, success_check

# %% Draw an instance. The integer is a stream key, so this is reproducible.
inst = gen_instance(600, 2000, 120, noise_level=0.0, rng=2024)
A = MeasurementMatrix(inst.A)   # caches A A^T and its Cholesky factors across runs
print(f"signal has {np.count_nonzero(inst.x_star)} nonzeros, "
      f"min value {inst.x_star[inst.x_star > 0].min():.3g}")

# %% Run each method with its default parameters.
print(f"\n{'algo':6s} {'iters':>5s} {'stop':>12s} {'rel_error':>10s} {'time [s]':>9s}")
for algo in ALGORITHMS:
    res = run_recovery(A, inst.y, RecoveryConfig(algo, k=120))
    ok, err = success_check(res.x, inst.x_star)
    print(f"{algo:6s} {res.iterations:5d} {res.stop_reason:>12s} {err:10.2e} "
          f"{res.wall_time_s:9.3f}{'' if ok else '   (failed)'}")

# %% Resolved parameters are kept on the result.
res = run_recovery(A, inst.y, RecoveryConfig("NDRTP", k=120))
cfg = res.config
print(f"\nNDRTP ran with stepsize={cfg.stepsize}, eps={cfg.eps}, cap={cfg.max_iters}")

# %% The error trace shows how fast the iterates approach the truth.
res = run_recovery(A, inst.y, RecoveryConfig("NDRT", k=120), ground_truth=inst.x_star)
trace = res.error_trace / np.linalg.norm(inst.x_star)
print("NDRT relative error every 10 iterations:",
      " ".join(f"{e:.1e}" for e in trace[::10]))
