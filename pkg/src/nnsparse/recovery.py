"""Nonnegative sparse recovery algorithms and a common driver.

Proposed methods
    NDRT   x+ = H_k(relu(x + lam * (A^T A + eps I)^{-1} A^T (y - A x)))
    NDRTP  same trial point; support S = top-k positive entries, then NNLS on A_S

Baselines
    RHT    x+ = H_k(relu(x + lam * A^T (y - A x)))
    RHTP   RHT support selection followed by NNLS on A_S
    NNOMP  greedy: add argmax of the signed correlation, refit by NNLS
    NNSP   subspace pursuit with NNLS in both the merge and prune stages
"""
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import as_matrix, newton_apply, spectral_extremes
from .nnls import GpConfig, gradient_projection_nnls
from .thresholding import SparseSignal, relu_threshold

__all__ = [
    "ALGORITHMS",
    "RecoveryConfig",
    "RecoveryResult",
    "empirical_stepsize",
    "ndrt_step",
    "ndrtp_step",
    "nnomp_run",
    "nnsp_run",
    "nnsp_step",
    "rht_step",
    "rhtp_step",
    "run_recovery",
    "theory_stepsize_window",
]

ALGORITHMS = ("NDRT", "NDRTP", "RHT", "RHTP", "NNOMP", "NNSP")
NEWTON_ALGORITHMS = ("NDRT", "NDRTP")
STEPSIZE_MODES = ("fixed", "empirical_formula", "theory_window")
FIXED_POINT_TOL = 1e-12

DEFAULT_EPS = {"NDRT": 0.1, "NDRTP": 0.5}


def empirical_stepsize(m, n):
    """``ceil((1 + sqrt(n/m))^2)``, a proxy for the squared top singular value
    of an ``N(0, 1/m)`` Gaussian ``m x n`` matrix."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    return float(math.ceil((1.0 + math.sqrt(n / m)) ** 2))


def theory_stepsize_window(A, eps):
    """Admissible stepsizes ``(s_m^2 + (s_m/s_1)^2 eps, s_m^2 + eps)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    sp = spectral_extremes(A)
    if sp.sigma_max == 0:
        raise ValueError("zero matrix has no stepsize window")
    s1, sm = sp.sigma_max ** 2, sp.sigma_min ** 2
    return sm + (sm / s1) * eps, sm + eps


def _paper_stepsize(algorithm, m, n, k):
    if algorithm == "NDRTP":
        return empirical_stepsize(m, n)
    if algorithm == "NDRT":
        return 2.0
    if algorithm == "RHT":
        return 0.6 - k / (2.0 * m)
    if algorithm == "RHTP":
        return 1.6
    return None


def _default_max_iters(algorithm, m, k):
    if algorithm in ("RHT", "NNSP", "NDRT"):
        return m
    if algorithm == "NNOMP":
        return k
    return 50


@dataclass(frozen=True)
class RecoveryConfig:
    """Algorithm choice and parameters.

    ``stepsize``, ``eps`` and ``max_iters`` may be left as ``None``; they are
    filled in by :meth:`resolve` from the problem dimensions (stepsize per
    ``stepsize_mode``, defaults otherwise).
    """

    algorithm: str
    k: int
    stepsize: float = None
    eps: float = None
    max_iters: int = None
    residual_tol: float = 0.0
    nnls_cfg: GpConfig = field(default_factory=GpConfig)
    stepsize_mode: str = "fixed"

    def __post_init__(self):
        algo = self.algorithm.upper()
        object.__setattr__(self, "algorithm", algo)
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if int(self.k) < 1:
            raise ValueError("k must be at least 1")
        if self.stepsize_mode not in STEPSIZE_MODES:
            raise ValueError(f"unknown stepsize_mode {self.stepsize_mode!r}")
        if self.stepsize is not None and not self.stepsize > 0:
            raise ValueError(f"stepsize must be positive, got {self.stepsize}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be nonnegative")

    def resolve(self, A):
        """Return a copy with every parameter the algorithm needs made concrete."""
        A = as_matrix(A)
        m, n = A.shape
        algo = self.algorithm
        eps = self.eps
        if algo in NEWTON_ALGORITHMS and eps is None:
            eps = DEFAULT_EPS[algo]
        lam = self.stepsize
        if algo in ("NNOMP", "NNSP"):
            lam = None
        elif self.stepsize_mode == "empirical_formula":
            lam = empirical_stepsize(m, n)
        elif self.stepsize_mode == "theory_window":
            if algo not in NEWTON_ALGORITHMS:
                raise ValueError("theory_window stepsize only applies to NDRT/NDRTP")
            lam = theory_stepsize_window(A, eps)[1]
        elif lam is None:
            lam = _paper_stepsize(algo, m, n, self.k)
        if lam is not None and not lam > 0:
            raise ValueError(f"resolved stepsize {lam} for {algo} is not positive")
        max_iters = self.max_iters or _default_max_iters(algo, m, self.k)
        return replace(self, stepsize=lam, eps=eps, max_iters=max_iters,
                       stepsize_mode="fixed")


@dataclass
class RecoveryResult:
    x_final: SparseSignal
    iterations: int
    residual_norm: float
    stop_reason: str
    error_trace: np.ndarray = None
    config: RecoveryConfig = None
    wall_time_s: float = 0.0

    @property
    def x(self):
        return self.x_final.values


def _embed(n, S, w):
    x = np.zeros(n)
    x[S] = w
    return x


def _nnls_on(A, y, S, nnls_cfg, nnls, x_prev=None):
    S = np.asarray(S, dtype=np.intp)
    if S.size == 0:
        return np.zeros(A.n)
    B = A.columns(S)
    if nnls is not None:
        w = nnls(B, y)
    else:
        w0 = x_prev[S] if (x_prev is not None and nnls_cfg.warm_start) else None
        w = gradient_projection_nnls(B, y, nnls_cfg, w0=w0).w
    return _embed(A.n, S, w)


def _newton_point(A, y, x, lam, eps):
    return x + lam * newton_apply(A, eps, y - A.array @ x)


def _gradient_point(A, y, x, lam):
    return x + lam * (A.T @ (y - A.array @ x))


def _relu_hk(u, k):
    S = relu_threshold(u, k)
    out = np.zeros_like(u)
    out[S] = u[S]
    return out


def ndrt_step(A, y, x_p, lam, eps, k):
    """One NDRT iteration: ReLU then hard threshold of the Newton trial point."""
    A = as_matrix(A)
    u = _newton_point(A, y, np.asarray(x_p, dtype=np.float64), lam, eps)
    return SparseSignal.from_dense(_relu_hk(u, k), nonneg=True)


def ndrtp_step(A, y, x_p, lam, eps, k, nnls_cfg=None, nnls=None):
    """One NDRTP iteration.

    ``nnls`` optionally replaces the gradient projection solver with any
    callable ``(B, y) -> w``.
    """
    A = as_matrix(A)
    x_p = np.asarray(x_p, dtype=np.float64)
    u = _newton_point(A, y, x_p, lam, eps)
    S = relu_threshold(u, k)
    x = _nnls_on(A, y, S, nnls_cfg or GpConfig(), nnls, x_p)
    return SparseSignal.from_dense(x, nonneg=True)


def rht_step(A, y, x_p, lam, k):
    A = as_matrix(A)
    u = _gradient_point(A, y, np.asarray(x_p, dtype=np.float64), lam)
    return SparseSignal.from_dense(_relu_hk(u, k), nonneg=True)


def rhtp_step(A, y, x_p, lam, k, nnls_cfg=None, nnls=None):
    A = as_matrix(A)
    x_p = np.asarray(x_p, dtype=np.float64)
    S = relu_threshold(_gradient_point(A, y, x_p, lam), k)
    x = _nnls_on(A, y, S, nnls_cfg or GpConfig(), nnls, x_p)
    return SparseSignal.from_dense(x, nonneg=True)


def nnsp_step(A, y, x_p, k, nnls_cfg=None, nnls=None):
    """Merge ``supp(x_p)`` with the top-k positive correlations, fit, prune to
    the k largest coefficients, refit."""
    A = as_matrix(A)
    cfg = nnls_cfg or GpConfig()
    x_p = np.asarray(x_p, dtype=np.float64)
    corr = A.T @ (y - A.array @ x_p)
    C = np.union1d(np.flatnonzero(x_p), relu_threshold(corr, k))
    w = _nnls_on(A, y, C, cfg, nnls, x_p)
    S = relu_threshold(w, k)
    x = _nnls_on(A, y, S, cfg, nnls, x_p)
    return SparseSignal.from_dense(x, nonneg=True)


def _residual(A, y, x):
    return float(np.linalg.norm(y - A.array @ x))


def _trace_error(trace, x, ground_truth):
    if trace is not None:
        trace.append(float(np.linalg.norm(x - ground_truth)))


def nnomp_run(A, y, k, nnls_cfg=None, residual_tol=0.0, ground_truth=None, nnls=None):
    """Nonnegative OMP: ``k`` greedy passes, each followed by an NNLS refit.

    The atom maximising the signed correlation ``(A^T r)_i`` is added; ties go
    to the smaller index. Stops early once no unselected atom has positive
    correlation or the residual drops to ``residual_tol``.
    """
    A = as_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    cfg = nnls_cfg or GpConfig()
    x = np.zeros(A.n)
    selected = np.zeros(A.n, dtype=bool)
    trace = [] if ground_truth is not None else None
    _trace_error(trace, x, ground_truth)
    stop = "max_iters"
    it = 0
    while it < k:
        r = y - A.array @ x
        if residual_tol > 0 and np.linalg.norm(r) <= residual_tol:
            stop = "residual_tol"
            break
        corr = A.T @ r
        corr[selected] = -np.inf
        i = int(np.argmax(corr))
        if not corr[i] > 0:
            stop = "fixed_point"
            break
        selected[i] = True
        it += 1
        x = _nnls_on(A, y, np.flatnonzero(selected), cfg, nnls, x)
        _trace_error(trace, x, ground_truth)
    return RecoveryResult(
        SparseSignal.from_dense(x, nonneg=True), it, _residual(A, y, x), stop,
        None if trace is None else np.array(trace))


def nnsp_run(A, y, k, nnls_cfg=None, max_iters=None, residual_tol=0.0,
             ground_truth=None, nnls=None):
    A = as_matrix(A)
    cfg = RecoveryConfig("NNSP", k, max_iters=max_iters, residual_tol=residual_tol,
                         nnls_cfg=nnls_cfg or GpConfig())
    return run_recovery(A, y, cfg, ground_truth=ground_truth, nnls=nnls)


def _stepper(cfg, nnls):
    algo, k, lam, eps, gp = cfg.algorithm, cfg.k, cfg.stepsize, cfg.eps, cfg.nnls_cfg
    if algo == "NDRT":
        return lambda A, y, x: ndrt_step(A, y, x, lam, eps, k)
    if algo == "NDRTP":
        return lambda A, y, x: ndrtp_step(A, y, x, lam, eps, k, gp, nnls)
    if algo == "RHT":
        return lambda A, y, x: rht_step(A, y, x, lam, k)
    if algo == "RHTP":
        return lambda A, y, x: rhtp_step(A, y, x, lam, k, gp, nnls)
    if algo == "NNSP":
        return lambda A, y, x: nnsp_step(A, y, x, k, gp, nnls)
    raise ValueError(algo)


def run_recovery(A, y, cfg, x0=None, ground_truth=None, nnls=None):
    """Iterate the configured algorithm from ``x0`` (zero by default).

    Stops when the residual ``||y - A x||`` reaches ``cfg.residual_tol`` (if
    positive), when two successive iterates differ by less than ``1e-12``, or
    after ``cfg.max_iters`` iterations.

    Parameters
    ----------
    A : MeasurementMatrix or array_like, shape (m, n)
    y : array_like, shape (m,)
    cfg : RecoveryConfig
    x0 : array_like, shape (n,), optional
    ground_truth : array_like, shape (n,), optional
        When given, ``error_trace[p] = ||x^(p) - ground_truth||`` for
        ``p = 0 .. iterations``.
    nnls : callable, optional
        Replacement NNLS solver ``(B, y) -> w`` for the pursuit variants.

    Returns
    -------
    RecoveryResult
    """
    A = as_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.m,):
        raise ValueError(f"y has shape {y.shape}, expected ({A.m},)")
    cfg = cfg.resolve(A)
    if cfg.k > A.n:
        raise ValueError(f"k={cfg.k} exceeds n={A.n}")
    if ground_truth is not None:
        ground_truth = np.asarray(ground_truth, dtype=np.float64)
    t0 = time.perf_counter()

    if cfg.algorithm == "NNOMP":
        if x0 is not None and np.any(x0):
            raise ValueError("NNOMP always starts from zero")
        res = nnomp_run(A, y, min(cfg.k, cfg.max_iters), cfg.nnls_cfg, cfg.residual_tol,
                        ground_truth, nnls)
        res.config = cfg
        res.wall_time_s = time.perf_counter() - t0
        return res

    step = _stepper(cfg, nnls)
    x = np.zeros(A.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    trace = [] if ground_truth is not None else None
    _trace_error(trace, x, ground_truth)
    stop = "max_iters"
    it = 0
    r_old = math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        while it < cfg.max_iters:
            if cfg.residual_tol > 0 and _residual(A, y, x) <= cfg.residual_tol:
                stop = "residual_tol"
                break
            x_new = step(A, y, x).values
            it += 1
            _trace_error(trace, x_new, ground_truth)
            moved = np.linalg.norm(x_new - x)
            if cfg.algorithm == "NNSP":
                # subspace pursuit halts once the residual stops shrinking and
                # keeps the better iterate
                r_new = _residual(A, y, x_new)
                if r_new >= r_old:
                    stop = "fixed_point"
                    if trace is not None:
                        trace[-1] = trace[-2]
                    break
                r_old = r_new
                if np.array_equal(np.flatnonzero(x_new), np.flatnonzero(x)):
                    moved = 0.0
            x = x_new
            if moved < FIXED_POINT_TOL:
                stop = "fixed_point"
                break
            if not np.all(np.isfinite(x)):
                break
    if not np.all(np.isfinite(x)):
        x = np.zeros(A.n)
        stop = "diverged"
    return RecoveryResult(
        SparseSignal.from_dense(x, nonneg=True), it, _residual(A, y, x), stop,
        None if trace is None else np.array(trace), cfg, time.perf_counter() - t0)


