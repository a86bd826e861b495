"""Nonnegative least squares: gradient projection against the exact oracle.

The pursuit algorithms solve a small NNLS problem on the selected support at
every iteration. The gradient projection solver uses a fixed step cap of 0.6,
which is safe for matrices whose columns have roughly unit norm.
"""
import numpy as np

from nnsparse import GpConfig, active_set_oracle, gradient_projection_nnls, kkt_residual

rng = np.random.default_rng(3)

# %% A problem where some constraints are active at the optimum.
B = rng.standard_normal((40, 6)) / np.sqrt(40)
y = rng.standard_normal(40)

gp = gradient_projection_nnls(B, y)
exact = active_set_oracle(B, y)     # enumerates all 2^6 free sets
print("gradient projection:", np.round(gp.w, 6), f"({gp.iterations} iters, {gp.status})")
print("exhaustive oracle:  ", np.round(exact.w, 6))
print(f"objective gap {gp.objective - exact.objective:.2e}, "
      f"KKT residual gp {gp.kkt_residual:.1e} / oracle {exact.kkt_residual:.1e}")

# %% The KKT residual certifies optimality and grows when we move off the optimum.
for shift in (1e-2, 1e-4, 1e-6):
    print(f"KKT residual after shifting by {shift:g}: "
          f"{kkt_residual(B, y, exact.w + shift):.2e}")

# %% Tighter settings trade time for accuracy.
for cfg in (GpConfig(max_iters=20), GpConfig(), GpConfig(max_iters=3000, eta2=1e-12)):
    sol = gradient_projection_nnls(B, y, cfg)
    print(f"max_iters={cfg.max_iters:5d}: gap {sol.objective - exact.objective:.1e}")

# %% Warm starts help when consecutive problems are similar.
y2 = y + 1e-3 * rng.standard_normal(40)
cold = gradient_projection_nnls(B, y2)
warm = gradient_projection_nnls(B, y2, w0=gp.w)
print(f"cold start {cold.iterations} iterations, warm start {warm.iterations}")
