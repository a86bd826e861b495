"""Nonnegative least squares ``min 0.5 ||y - B w||^2  s.t.  w >= 0``.

Three pieces:

* :func:`gradient_projection_nnls` -- the fixed-cap gradient projection loop
  used inside the pursuit algorithms.
* :func:`kkt_residual` -- optimality certificate for a candidate ``w``.
* :func:`active_set_oracle` -- exhaustive enumeration of free sets, used as a
  ground-truth solver in tests (small ``k`` only).
"""
import itertools
import logging
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "GpConfig",
    "NnlsProblem",
    "NnlsSolution",
    "active_set_oracle",
    "gradient_projection_nnls",
    "kkt_residual",
    "objective",
]

log = logging.getLogger(__name__)

CONVERGED = "converged_step_tol"
ITERATION_CAP = "hit_iteration_cap"
EXHAUSTIVE = "exhaustive"

ORACLE_MAX_K = 16


@dataclass(frozen=True)
class GpConfig:
    step_cap: float = 0.6
    max_iters: int = 300
    eta1: float = 1e-6
    eta2: float = 1e-8
    warm_start: bool = False

    def __post_init__(self):
        if not self.step_cap > 0:
            raise ValueError("step_cap must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise ValueError("eta1 and eta2 must be positive")


@dataclass(frozen=True)
class NnlsProblem:
    B: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64)
        if B.shape[1] < 1:
            raise ValueError("NNLS problem needs at least one column")
        if y.ndim != 1 or y.shape[0] != B.shape[0]:
            raise ValueError(f"y has shape {y.shape}, expected ({B.shape[0]},)")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "y", y)

    @property
    def k(self):
        return self.B.shape[1]


@dataclass
class NnlsSolution:
    w: np.ndarray
    iterations: int
    status: str
    kkt_residual: float
    objective: float
    nonmonotone_steps: int = 0


def _as_problem(B, y):
    if isinstance(B, NnlsProblem):
        return B
    return NnlsProblem(B, y)


def objective(B, y, w):
    r = y - B @ w
    return 0.5 * float(r @ r)


def kkt_residual(B, y=None, w=None):
    """Violation of the NNLS optimality system at ``w``.

    With ``g = B^T (B w - y)`` this is
    ``max(max_i max(-g_i, 0), max_i |g_i w_i|)``, which is zero exactly when
    ``w`` is optimal.
    """
    if isinstance(B, NnlsProblem):
        B, y, w = B.B, B.y, y if w is None else w
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("kkt_residual requires w >= 0")
    g = B.T @ (B @ w - y)
    if g.size == 0:
        return 0.0
    return float(max(np.max(np.maximum(-g, 0.0)), np.max(np.abs(g * w))))


def _gp_loop_numpy(G, b, w, C, eta1, eta2, max_iters):
    """Reference (vectorised) version of :func:`_gp_kernel`."""
    converged = False
    nonmono = 0
    f_old = 0.5 * float(w @ G @ w) - float(b @ w)
    it = 0
    while it < max_iters:
        a = b - G @ w
        d = np.where((a < 0) & (np.abs(w) < eta1), 0.0, a)
        neg = d < 0
        beta = min(C, -np.max(w[neg] / d[neg])) if neg.any() else C
        it += 1
        if not beta > 0:
            converged = True
            break
        step = beta * d
        w = w + step
        f_new = 0.5 * float(w @ G @ w) - float(b @ w)
        nonmono += f_new > f_old
        f_old = f_new
        if np.linalg.norm(step) < eta2:
            converged = True
            break
        if not np.isfinite(f_new):
            break
    return w, it, converged, nonmono


@numba.njit(cache=True)
def _gp_kernel(G, b, w, C, eta1, eta2, max_iters):
    k = w.shape[0]
    a = np.empty(k)
    d = np.empty(k)
    gw = G @ w
    f_old = 0.0
    for i in range(k):
        f_old += 0.5 * w[i] * gw[i] - b[i] * w[i]
    converged = False
    nonmono = 0
    it = 0
    while it < max_iters:
        for i in range(k):
            a[i] = b[i] - gw[i]
        # largest feasible step over coordinates moving toward the bound
        beta = C
        for i in range(k):
            if a[i] < 0 and abs(w[i]) < eta1:
                d[i] = 0.0
            else:
                d[i] = a[i]
            if d[i] < 0:
                r = -w[i] / d[i]
                if r < beta:
                    beta = r
        it += 1
        if not beta > 0:
            converged = True
            break
        nrm = 0.0
        for i in range(k):
            w[i] += beta * d[i]
            nrm += (beta * d[i]) ** 2
        f_new = 0.0
        for i in range(k):
            s = 0.0
            for j in range(k):
                s += G[i, j] * w[j]
            gw[i] = s
            f_new += 0.5 * w[i] * s - b[i] * w[i]
        if f_new > f_old:
            nonmono += 1
        f_old = f_new
        if np.sqrt(nrm) < eta2:
            converged = True
            break
        if not np.isfinite(f_new):
            break
    return w, it, converged, nonmono


def gradient_projection_nnls(B, y=None, cfg=None, w0=None):
    """Gradient projection with a capped feasible step.

    Each sweep computes ``a = B^T (y - B w)``, freezes coordinates that sit on
    the bound (``|w_i| < eta1``) with ``a_i < 0``, and moves along the remaining
    direction by ``min(C, largest step keeping w >= 0)``. Stops after
    ``max_iters`` sweeps or when ``||w_new - w_old|| < eta2``.

    Parameters
    ----------
    B : ndarray, shape (m, k) or NnlsProblem
    y : ndarray, shape (m,)
    cfg : GpConfig, optional
    w0 : ndarray, shape (k,), optional
        Starting point; zero when omitted.

    Returns
    -------
    NnlsSolution
        ``w`` is clamped so that ``w >= 0`` holds exactly.
    """
    p = _as_problem(B, y)
    cfg = cfg or GpConfig()
    B, y = p.B, p.y
    G = B.T @ B
    b = B.T @ y

    w = np.zeros(p.k) if w0 is None else np.maximum(np.asarray(w0, dtype=np.float64), 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        w, it, converged, nonmono = _gp_kernel(G, b, w.copy(), cfg.step_cap, cfg.eta1,
                                               cfg.eta2, cfg.max_iters)
    status = CONVERGED if converged else ITERATION_CAP
    if nonmono:
        log.debug("gradient projection: %d non-monotone steps", nonmono)
    w = np.where(w > 0, w, 0.0)
    if not np.all(np.isfinite(w)):
        log.warning("gradient projection diverged (step cap too large for this B)")
        w = np.where(np.isfinite(w), w, 0.0)
    return NnlsSolution(w, it, status, kkt_residual(B, y, w), objective(B, y, w), nonmono)


def active_set_oracle(B, y=None):
    """Exact NNLS by enumerating every free set (``2^k`` least-squares solves).

    Candidates whose free coordinates are not all ``> -1e-12`` are discarded;
    rank-deficient free sets are skipped. Returns the feasible candidate of
    least objective, which is the global optimum when ``B`` has full column rank.
    """
    p = _as_problem(B, y)
    B, y, k = p.B, p.y, p.k
    if k > ORACLE_MAX_K:
        raise ValueError(f"exhaustive oracle limited to k <= {ORACLE_MAX_K}, got {k}")
    best_w = np.zeros(k)
    best_f = objective(B, y, best_w)
    for size in range(1, k + 1):
        for F in itertools.combinations(range(k), size):
            F = list(F)
            sol, _, rank, _ = np.linalg.lstsq(B[:, F], y, rcond=None)
            if rank < size or np.any(sol <= -1e-12):
                continue
            w = np.zeros(k)
            w[F] = np.maximum(sol, 0.0)
            f = objective(B, y, w)
            if f < best_f:
                best_f, best_w = f, w
    return NnlsSolution(best_w, 2 ** k, EXHAUSTIVE, kkt_residual(B, y, best_w), best_f)
