"""Checking the convergence theory numerically at toy scale.

Restricted isometry constants are computed exactly by enumerating supports,
so everything here uses matrices with a dozen or so columns.
"""
import numpy as np

from nnsparse import theory
from nnsparse.cli import certified_instances
from nnsparse.recovery import RecoveryConfig, run_recovery

rng = np.random.default_rng(0)

# %% Exact RICs of a small Gaussian matrix.
A = rng.standard_normal((8, 12)) / np.sqrt(8)
print("RIC by order:", {s: round(d, 3) for s, d in theory.ric(A, range(1, 5)).items()})

# %% Inequality suites with random vectors; each line is one inequality.
for rep in (theory.check_lemma1(A, 3, 10_000, rng=1),
            theory.check_lemma2(12, 3, 10_000, rng=2),
            theory.check_relu_contraction(12, 10_000, rng=3)):
    print("\n".join(rep.lines()))

# %% Random matrices this small almost never satisfy the contraction condition.
bc = theory.bound_constants(A, 0.5, 1.0, 1)
print(f"\nGaussian 8x12: condition {bc.condition_ndrt:.2f} "
      f"(needs < {theory.NDRT_THRESHOLD:.3f})")

# %% Near-isometric matrices do, and then the error recursion can be watched directly.
(B, lam, bc), = certified_instances(1, seed=4)
print(f"near-isometry {B.shape}: condition {bc.condition_ndrt:.3f}, "
      f"alpha={bc.alpha:.3f}, gamma={bc.gamma:.3f}, stepsize {lam:.3f}")
x = np.zeros(B.shape[1])
x[5] = 1.3
e = 1e-3 * rng.standard_normal(B.shape[0])
res = run_recovery(B, B @ x + e, RecoveryConfig("NDRT", 1, stepsize=lam, eps=0.5,
                                                max_iters=12), ground_truth=x)
err = res.error_trace
bound = bc.alpha * err[:-1] + bc.gamma * np.linalg.norm(e)
for p in range(len(bound)):
    print(f"  iter {p + 1:2d}: error {err[p + 1]:.2e}  bound {bound[p]:.2e}")

# %% The same check, packaged.
print("\n".join(theory.check_contraction(B, 1, 0.5, lam, "NDRTP", constants=bc,
                                         rng=5).lines()))
