"""Numerical checks of the recovery guarantees at toy scale.

Restricted isometry constants are computed exactly by enumerating supports,
so everything here is meant for matrices with a few dozen columns at most.
Each ``check_*`` function draws random inputs satisfying the hypotheses of one
inequality and counts violations; a violation means a defect somewhere.
"""
import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .linalg import as_matrix, spectral_extremes
from .nnls import active_set_oracle
from .recovery import RecoveryConfig, run_recovery
from .thresholding import hard_threshold, relu

__all__ = [
    "BoundConstants",
    "CheckResult",
    "RicEstimate",
    "VerificationReport",
    "bound_constants",
    "check_lemma1",
    "check_lemma2",
    "check_lemma3",
    "check_relu_contraction",
    "check_ric_monotone",
    "check_theorem2",
    "check_contraction",
    "near_isometry_matrix",
    "ric",
    "ric_bruteforce",
    "ric_montecarlo",
    "write_reports",
]

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
NDRT_THRESHOLD = (math.sqrt(5.0) - 1.0) / 2.0
NDRTP_THRESHOLD = 1.0 / math.sqrt(3.0)
MAX_SUPPORTS = 10 ** 6
# floating-point allowance on every inequality: lhs <= rhs * (1 + RTOL) + ATOL
RTOL = 1e-10
ATOL = 1e-12


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class RicEstimate:
    order: int
    delta: float
    mode: str
    supports_checked: int


def _gram_deviation(A, supports):
    """``max(lam_max - 1, 1 - lam_min)`` of ``A_T^T A_T`` for each row of ``supports``."""
    sub = A[:, supports]                        # (m, N, s)
    G = np.einsum("mNi,mNj->Nij", sub, sub)
    ev = np.linalg.eigvalsh(G)
    return np.maximum(ev[:, -1] - 1.0, 1.0 - ev[:, 0])


def ric_bruteforce(A, s, chunk=20000):
    """Exact RIC of order ``s`` by enumerating all ``C(n, s)`` supports."""
    A = as_matrix(A).array
    n = A.shape[1]
    if not 1 <= s <= n:
        raise ValueError(f"order must lie in [1, {n}]")
    total = math.comb(n, s)
    if total > MAX_SUPPORTS:
        raise EnumerationTooLarge(
            f"C({n}, {s}) = {total} supports exceeds {MAX_SUPPORTS}; use ric_montecarlo")
    delta = 0.0
    combos = itertools.combinations(range(n), s)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        delta = max(delta, float(_gram_deviation(A, block).max()))
    return RicEstimate(s, delta, "exact_bruteforce", total)


def ric_montecarlo(A, s, samples, rng=None):
    """Lower bound on the RIC from ``samples`` random supports."""
    A = as_matrix(A).array
    n = A.shape[1]
    rng = np.random.default_rng(rng)
    supports = np.array([np.sort(rng.choice(n, s, replace=False)) for _ in range(samples)])
    return RicEstimate(s, float(_gram_deviation(A, supports).max()),
                       "monte_carlo_lower_bound", samples)


def ric(A, orders):
    """Exact RICs for several orders, as ``{order: delta}``."""
    return {s: ric_bruteforce(A, s).delta for s in orders}


@dataclass
class CheckResult:
    name: str
    trials: int
    violations: int
    worst_ratio: float
    min_slack: float

    @property
    def passed(self):
        return self.violations == 0


@dataclass
class VerificationReport:
    check: str
    results: list
    seed: object = None
    params: dict = field(default_factory=dict)
    hypothesis_ok: bool = True
    note: str = ""

    @property
    def passed(self):
        return self.hypothesis_ok and all(r.passed for r in self.results)

    def lines(self):
        out = []
        for r in self.results:
            flag = "PASS" if r.passed else "FAIL"
            out.append(f"{flag} {self.check}/{r.name}: trials={r.trials} "
                       f"violations={r.violations} worst_ratio={r.worst_ratio:.6g} "
                       f"min_slack={r.min_slack:.3g}")
        if not self.hypothesis_ok:
            out.append(f"REFUSED {self.check}: {self.note}")
        return out


class _Tally:
    """Accumulates ``lhs <= rhs`` comparisons."""

    def __init__(self, name):
        self.name = name
        self.trials = 0
        self.violations = 0
        self.worst = 0.0
        self.slack = math.inf

    def add(self, lhs, rhs):
        lhs = np.atleast_1d(np.asarray(lhs, dtype=np.float64))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
        self.trials += lhs.size
        self.violations += int(np.count_nonzero(lhs > rhs * (1 + RTOL) + ATOL))
        with np.errstate(divide="ignore", invalid="ignore"):
            # comparisons at round-off scale say nothing about tightness
            ratio = np.where(rhs > ATOL, lhs / rhs, np.where(lhs > ATOL, np.inf, 0.0))
        self.worst = max(self.worst, float(ratio.max()))
        self.slack = min(self.slack, float((rhs - lhs).min()))

    def result(self):
        return CheckResult(self.name, self.trials, self.violations, self.worst, self.slack)


def _random_subsets(rng, n, s, trials):
    """Rows of indices: a random s-subset of range(n) per trial (sorted)."""
    keys = rng.random((trials, n))
    return np.sort(np.argpartition(keys, s - 1, axis=1)[:, :s], axis=1)


def _sparse_on(rng, base, keep_prob=0.5):
    """Gaussian vectors supported on random sub-masks of the support rows ``base``."""
    trials, s = base.shape
    mask = rng.random((trials, s)) < keep_prob
    vals = rng.standard_normal((trials, s)) * mask
    return vals, mask


def _scatter(n, base, vals):
    out = np.zeros((base.shape[0], n))
    np.put_along_axis(out, base, vals, axis=1)
    return out


def check_lemma1(A, s, trials=10_000, rng=None, delta=None):
    """Three RIC consequences at order ``s``.

    (a) ``||(A^T u)_Omega|| <= sqrt(1 + d_s) ||u||`` for ``|Omega| <= s``;
    (b) ``||((I - A^T A) v)_Gamma|| <= d_s ||v||`` for ``|Gamma u supp v| <= s``;
    (c) ``|<v, (I - A^T A) w>| <= d_s ||v|| ||w||`` for ``|supp v u supp w| <= s``.
    """
    Amat = as_matrix(A).array
    m, n = Amat.shape
    seed = rng
    rng = np.random.default_rng(rng)
    d = ric_bruteforce(Amat, s).delta if delta is None else delta
    M = np.eye(n) - Amat.T @ Amat

    ta, tb, tc = _Tally("a"), _Tally("b"), _Tally("c")
    base = _random_subsets(rng, n, s, trials)
    u = rng.standard_normal((trials, m))
    u[rng.random(trials) < 0.01] = 0.0
    _, om = _sparse_on(rng, base)
    Atu = u @ Amat
    lhs = np.sqrt(np.sum(np.where(_scatter(n, base, om) > 0, Atu, 0.0) ** 2, axis=1))
    ta.add(lhs, math.sqrt(1 + d) * np.linalg.norm(u, axis=1))

    v = _scatter(n, base, _sparse_on(rng, base)[0])
    w = _scatter(n, base, _sparse_on(rng, base)[0])
    _, gm = _sparse_on(rng, base)
    gamma = _scatter(n, base, gm) > 0
    Mv = v @ M.T
    tb.add(np.sqrt(np.sum(np.where(gamma, Mv, 0.0) ** 2, axis=1)),
           d * np.linalg.norm(v, axis=1))
    tc.add(np.abs(np.sum(v * (w @ M.T), axis=1)),
           d * np.linalg.norm(v, axis=1) * np.linalg.norm(w, axis=1))
    return VerificationReport("lemma1", [ta.result(), tb.result(), tc.result()], seed,
                              {"s": s, "delta": d, "m": m, "n": n})


def check_lemma2(n, k, trials=10_000, rng=None):
    """Golden-ratio thresholding bound
    ``||H_k(u) - x|| <= phi ||(u - x)_Omega||``, ``Omega = supp H_k(u) u supp x``,
    for nonnegative k-sparse ``x``."""
    seed = rng
    rng = np.random.default_rng(rng)
    t = _Tally("golden_ratio")
    for i in range(trials):
        x = np.zeros(n)
        sx = rng.choice(n, rng.integers(1, k + 1), replace=False)
        x[sx] = np.abs(rng.standard_normal(sx.size))
        u = rng.standard_normal(n)
        if i % 3 == 0:
            # u close to x: the bound is near its tight regime
            u = x + 0.3 * rng.standard_normal(n)
        hk = hard_threshold(u, k)
        omega = np.union1d(hk.support, np.flatnonzero(x))
        t.add(np.linalg.norm(hk.values - x), GOLDEN * np.linalg.norm((u - x)[omega]))
    return VerificationReport("lemma2", [t.result()], seed, {"n": n, "k": k})


def check_relu_contraction(n, trials=10_000, rng=None):
    """``||(relu(u) - x)_Omega|| <= ||(u - x)_Omega||`` for nonnegative ``x``."""
    seed = rng
    rng = np.random.default_rng(rng)
    u = rng.standard_normal((trials, n))
    x = np.abs(rng.standard_normal((trials, n))) * (rng.random((trials, n)) < 0.4)
    om = rng.random((trials, n)) < 0.5
    t = _Tally("relu")
    t.add(np.linalg.norm((relu(u) - x) * om, axis=1), np.linalg.norm((u - x) * om, axis=1))
    return VerificationReport("relu_contraction", [t.result()], seed, {"n": n})


def _lemma3_operator(Amat, eps, lam):
    n = Amat.shape[1]
    AtA = Amat.T @ Amat
    return np.eye(n) - lam * sla.solve(AtA + eps * np.eye(n), AtA, assume_a="pos"), AtA


def check_lemma3(A, eps, lam, s, trials=10_000, rng=None, delta=None):
    """Spectral bound on ``M = I - lam (A^T A + eps I)^{-1} A^T A``.

    With ``c = d_s + s1^2 - lam s1^2 / (s1^2 + eps)`` checks
    the bilinear bound ``|<u, M v>| <= c ||u|| ||v||`` and the restricted bound
    ``||(M v)_Omega|| <= c ||v||``
    on supports of total size ``s``, and that the spectral norm of
    ``q(A^T A) = (I - lam (A^T A + eps I)^{-1}) A^T A`` equals
    ``q(s1^2) = s1^2 - lam s1^2 / (s1^2 + eps)``.
    Refuses (``hypothesis_ok=False``) when ``lam > s_m^2 + eps``.
    """
    Amat = as_matrix(A).array
    m, n = Amat.shape
    seed = rng
    sp = spectral_extremes(Amat, "exact_svd")
    s1, sm = sp.sigma_max ** 2, sp.sigma_min ** 2
    params = {"s": s, "eps": eps, "lam": lam, "sigma1": sp.sigma_max, "sigma_m": sp.sigma_min}
    if lam > sm + eps or lam < 0:
        return VerificationReport("lemma3", [], seed, params, False,
                                  f"stepsize {lam} outside [0, sigma_m^2 + eps = {sm + eps}]")
    rng = np.random.default_rng(rng)
    d = ric_bruteforce(Amat, s).delta if delta is None else delta
    c = d + s1 - lam * s1 / (s1 + eps)
    params.update(delta=d, coefficient=c)
    M, AtA = _lemma3_operator(Amat, eps, lam)

    t6, t7, tq = _Tally("bilinear"), _Tally("restricted"), _Tally("q_norm")
    base = _random_subsets(rng, n, s, trials)
    u = _scatter(n, base, _sparse_on(rng, base)[0])
    v = _scatter(n, base, _sparse_on(rng, base)[0])
    Mv = v @ M.T
    nv = np.linalg.norm(v, axis=1)
    t6.add(np.abs(np.sum(u * Mv, axis=1)), c * np.linalg.norm(u, axis=1) * nv)
    _, om = _sparse_on(rng, base)
    omega = _scatter(n, base, om) > 0
    t7.add(np.sqrt(np.sum(np.where(omega, Mv, 0.0) ** 2, axis=1)), c * nv)

    Q = AtA - lam * sla.solve(AtA + eps * np.eye(n), AtA, assume_a="pos")
    q_direct = float(np.linalg.norm(Q, 2))
    q_formula = s1 - lam * s1 / (s1 + eps)
    # two-sided: both orderings must agree within tolerance
    tq.add(q_direct, q_formula)
    tq.add(q_formula, q_direct)
    params.update(q_direct=q_direct, q_formula=q_formula)
    return VerificationReport("lemma3", [t6.result(), t7.result(), tq.result()], seed, params)


@dataclass
class BoundConstants:
    alpha: float
    gamma: float
    rho: float
    tau: float
    condition_ndrt: float
    condition_ndrtp: float
    lambda_window: tuple
    deltas: dict
    sigma_max: float
    sigma_min: float

    def certifies_ndrt(self, lam):
        lo, hi = self.lambda_window
        return self.condition_ndrt < NDRT_THRESHOLD and lo <= lam <= hi

    def certifies_ndrtp(self, lam):
        lo, hi = self.lambda_window
        return (self.condition_ndrtp < NDRTP_THRESHOLD and lo <= lam <= hi
                and not math.isnan(self.rho))


def bound_constants(A, eps, lam, k, deltas=None, sigma=None):
    """Contraction and noise constants of both convergence results.

    ``alpha = phi (d_3k + s1^2 - lam s1^2/(s1^2+eps))``,
    ``gamma = phi lam s1 / (s_m^2 + eps)``,
    ``rho = sqrt(2/(1-d_2k^2)) (d_3k + s1^2 - lam s1^2/(s1^2+eps))``,
    ``tau = sqrt(2/(1-d_2k^2)) lam s1/(s_m^2+eps) + sqrt(1+d_k)/(1-d_2k)``.
    ``rho`` and ``tau`` are NaN when ``d_2k >= 1``.

    ``deltas`` (``{k: d_k, 2k: d_2k, 3k: d_3k}``) and ``sigma`` (``(s1, s_m)``)
    are computed by enumeration / SVD when omitted.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if deltas is None:
        deltas = ric(A, (k, 2 * k, 3 * k))
    if sigma is None:
        sp = spectral_extremes(A, "exact_svd")
        sigma = (sp.sigma_max, sp.sigma_min)
    s1, sm = sigma
    dk, d2k, d3k = deltas[k], deltas[2 * k], deltas[3 * k]
    core = d3k + s1 ** 2 - lam * s1 ** 2 / (s1 ** 2 + eps)
    alpha = GOLDEN * core
    gamma = GOLDEN * lam * s1 / (sm ** 2 + eps)
    if d2k < 1:
        f = math.sqrt(2.0 / (1.0 - d2k ** 2))
        rho = f * core
        tau = f * lam * s1 / (sm ** 2 + eps) + math.sqrt(1 + dk) / (1 - d2k)
    else:
        rho = tau = math.nan
    cond = d3k + s1 ** 2 - sm ** 2
    window = (sm ** 2 + (sm ** 2 / s1 ** 2) * eps, sm ** 2 + eps)
    return BoundConstants(alpha, gamma, rho, tau, cond, cond, window,
                          {k: dk, 2 * k: d2k, 3 * k: d3k}, s1, sm)


def check_theorem2(A, k, trials=1000, rng=None, deltas=None):
    """Projection bound for ``z* = argmin{||y - A z|| : supp z in Lambda, z >= 0}``::

        ||z* - x|| <= ||(z* - x)_{Lambda^c}|| / sqrt(1 - d_2k^2)
                      + sqrt(1 + d_k) / (1 - d_2k) ||e||

    for nonnegative k-sparse ``x``, ``y = A x + e`` and ``|Lambda| <= k``.
    """
    Amat = as_matrix(A).array
    m, n = Amat.shape
    seed = rng
    rng = np.random.default_rng(rng)
    if deltas is None:
        deltas = ric(Amat, (k, 2 * k))
    dk, d2k = deltas[k], deltas[2 * k]
    params = {"k": k, "delta_k": dk, "delta_2k": d2k}
    if d2k >= 1:
        return VerificationReport("theorem2", [], seed, params, False,
                                  f"delta_2k = {d2k:.4f} >= 1")
    c1 = 1.0 / math.sqrt(1.0 - d2k ** 2)
    c2 = math.sqrt(1.0 + dk) / (1.0 - d2k)
    t = _Tally("projection_bound")
    for i in range(trials):
        x = np.zeros(n)
        sx = rng.choice(n, rng.integers(0, k + 1), replace=False)
        x[sx] = np.abs(rng.standard_normal(sx.size))
        e = rng.standard_normal(m) * (0.0 if i % 4 == 0 else 10 ** rng.uniform(-4, 0))
        y = Amat @ x + e
        # Lambda mixes true-support indices with random others
        pool = np.concatenate([sx, rng.choice(n, k, replace=False)]) if sx.size else \
            rng.choice(n, k, replace=False)
        lam_set = np.unique(rng.choice(pool, rng.integers(0, k + 1), replace=False)) \
            if pool.size else np.array([], dtype=int)
        lam_set = lam_set[:k]
        z = np.zeros(n)
        if lam_set.size:
            z[lam_set] = active_set_oracle(Amat[:, lam_set], y).w
        off = np.ones(n, dtype=bool)
        off[lam_set] = False
        t.add(np.linalg.norm(z - x),
              c1 * np.linalg.norm((z - x)[off]) + c2 * np.linalg.norm(e))
    return VerificationReport("theorem2", [t.result()], seed, params)


def check_ric_monotone(A, max_order):
    d = ric(A, range(1, max_order + 1))
    t = _Tally("monotone")
    for s in range(1, max_order):
        t.add(d[s], d[s + 1])
    return VerificationReport("ric_monotone", [t.result()], None,
                              {"deltas": d})


def near_isometry_matrix(m, n, perturbation=0.01, rng=None):
    """Scaled tight frame with a flat null space, plus a small perturbation.

    The ``n - m`` null-space directions are orthonormalised random sign
    vectors, so every column has nearly the same norm and small supports see
    an almost isometric Gram matrix. Rows span the orthogonal complement,
    scaled by ``sqrt(n/m)`` so that ``s1 = s_m`` before perturbation.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    rng = np.random.default_rng(rng)
    signs = rng.choice([-1.0, 1.0], size=(n, n - m))
    full, _ = np.linalg.qr(np.hstack([signs, rng.standard_normal((n, m))]))
    rows = full[:, n - m:].T
    rot, _ = np.linalg.qr(rng.standard_normal((m, m)))
    A = math.sqrt(n / m) * rot @ rows
    return A + perturbation * rng.standard_normal((m, n)) / math.sqrt(m)


def check_contraction(A, k, eps, lam, algorithm="NDRT", trials=5, noise=1e-3,
                      iters=30, rng=None, constants=None):
    """Per-iterate error recursion of the two convergence theorems.

    For NDRT: ``||x^(p+1) - x|| <= alpha ||x^(p) - x|| + gamma ||e||``;
    for NDRTP: the same with ``rho, tau``. NDRTP uses the exact NNLS oracle,
    as the recursion assumes an exact projection. Refuses unless the matrix
    condition and the stepsize window are certified.
    """
    algorithm = algorithm.upper()
    Amat = as_matrix(A)
    m, n = Amat.shape
    seed = rng
    rng = np.random.default_rng(rng)
    bc = constants or bound_constants(Amat, eps, lam, k)
    params = {"k": k, "eps": eps, "lam": lam, "alpha": bc.alpha, "gamma": bc.gamma,
              "rho": bc.rho, "tau": bc.tau, "condition": bc.condition_ndrt,
              "window": bc.lambda_window}
    if algorithm == "NDRT":
        ok, factor, offset = bc.certifies_ndrt(lam), bc.alpha, bc.gamma
    elif algorithm == "NDRTP":
        ok, factor, offset = bc.certifies_ndrtp(lam), bc.rho, bc.tau
    else:
        raise ValueError("contraction check covers NDRT and NDRTP only")
    name = "theorem1" if algorithm == "NDRT" else "theorem3"
    if not ok:
        return VerificationReport(name, [], seed, params, False,
                                  "matrix condition or stepsize window not certified")
    oracle = None if algorithm == "NDRT" else (lambda B, y: active_set_oracle(B, y).w)
    cfg = RecoveryConfig(algorithm, k, stepsize=lam, eps=eps, max_iters=iters)
    t = _Tally("recursion")
    for i in range(trials):
        x = np.zeros(n)
        sx = rng.choice(n, k, replace=False)
        x[sx] = 0.5 + np.abs(rng.standard_normal(k))
        e = np.zeros(m) if i % 2 == 0 else noise * rng.standard_normal(m)
        y = Amat.array @ x + e
        res = run_recovery(Amat, y, cfg, ground_truth=x, nnls=oracle)
        err = res.error_trace
        t.add(err[1:], factor * err[:-1] + offset * np.linalg.norm(e))
    return VerificationReport(name, [t.result()], seed, params)


def write_reports(path, reports):
    """CSV with one row per (check, part)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "part", "trials", "violations", "worst_ratio", "min_slack",
                    "seed", "passed", "note"])
        for rep in reports:
            if not rep.results:
                w.writerow([rep.check, "", 0, "", "", "", rep.seed, 0, rep.note])
            for r in rep.results:
                w.writerow([rep.check, r.name, r.trials, r.violations, repr(r.worst_ratio),
                            repr(r.min_slack), rep.seed, int(r.passed), rep.note])
