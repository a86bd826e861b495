"""Choosing the stepsize for the Newton-type methods.

Two rules are built in: a data-free formula that only needs the matrix shape,
and the window in which the convergence analysis applies, which needs the
extreme singular values.
"""
from nnsparse import (MeasurementMatrix, RecoveryConfig, empirical_stepsize, run_recovery,
                      spectral_extremes, theory_stepsize_window)
from nnsparse.bench import gen_instance, success_check

# %% The shape-only rule.
for m, n in [(600, 2000), (150, 500), (100, 900), (300, 300)]:
    print(f"{m:4d} x {n:4d}: stepsize {empirical_stepsize(m, n):g}")

# %% The analysis window for a Gaussian matrix is far below that value.
inst = gen_instance(150, 500, 30, 0.0, 5)
A = MeasurementMatrix(inst.A)
sp = spectral_extremes(A)
print(f"\nsigma_max={sp.sigma_max:.3f} sigma_min={sp.sigma_min:.3f}")
for eps in (0.1, 0.5, 2.0):
    lo, hi = theory_stepsize_window(A, eps)
    print(f"eps={eps}: window [{lo:.3f}, {hi:.3f}]")

# %% Scan the stepsize for NDRTP on a few instances at a harder sparsity.
print("\nNDRTP successes out of 10 at k=55 (150 x 500):")
instances = [gen_instance(150, 500, 55, 0.0, 100 + t) for t in range(10)]
for lam in (1, 2, 4, 6, 8, 12):
    wins = 0
    for inst in instances:
        res = run_recovery(inst.A, inst.y, RecoveryConfig("NDRTP", 55, stepsize=lam, eps=0.5))
        wins += success_check(res.x, inst.x_star)[0]
    print(f"  stepsize {lam:3g}: {wins}/10")

# %% Or let the configuration pick from the window.
cfg = RecoveryConfig("NDRT", 30, eps=0.5, stepsize_mode="theory_window").resolve(A)
print(f"\ntheory_window mode resolves to stepsize {cfg.stepsize:.3f}")
