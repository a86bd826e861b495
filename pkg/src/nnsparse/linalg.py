"""Dense kernels for the measurement matrix.

The regularized Newton direction ``(A^T A + eps I)^{-1} A^T r`` is never formed
in ``n x n``; it is evaluated as ``A^T (A A^T + eps I)^{-1} r`` with a cached
Cholesky factor of the ``m x m`` Gram matrix.
"""
import threading
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

__all__ = [
    "ConvergenceError",
    "MeasurementMatrix",
    "SpectralSummary",
    "as_matrix",
    "matvec",
    "newton_apply",
    "spectral_extremes",
]

EXACT_SVD_LIMIT = 512
POWER_TOL = 1e-8
POWER_MAXITER = 5000


class ConvergenceError(RuntimeError):
    """Raised when an iterative eigen-solver hits its cap.

    The last estimate is kept on ``self.estimate``.
    """

    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


@dataclass(frozen=True)
class SpectralSummary:
    sigma_max: float
    sigma_min: float
    method: str
    tol: float = 0.0


class MeasurementMatrix:
    """Immutable dense ``m x n`` matrix with lazily built caches.

    Parameters
    ----------
    data : array_like, shape (m, n)
        Matrix entries. Copied into column-major storage and made read-only.
    """

    def __init__(self, data):
        a = np.array(data, dtype=np.float64, order="F", copy=True)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("measurement matrix must be a nonempty 2-D array")
        if not np.all(np.isfinite(a)):
            raise ValueError("measurement matrix has non-finite entries")
        a.setflags(write=False)
        self._a = a
        self._lock = threading.Lock()
        self._spectral = {}
        self._factors = {}
        self._gram = None

    @property
    def array(self):
        return self._a

    @property
    def shape(self):
        return self._a.shape

    @property
    def m(self):
        return self._a.shape[0]

    @property
    def n(self):
        return self._a.shape[1]

    @property
    def T(self):
        return self._a.T

    def __matmul__(self, other):
        return self._a @ other

    def __repr__(self):
        return f"MeasurementMatrix(m={self.m}, n={self.n})"

    def columns(self, idx):
        """Column submatrix ``A_S`` for an index array ``idx``."""
        return self._a[:, np.asarray(idx, dtype=np.intp)]

    def gram(self):
        """``A A^T`` (m x m), cached."""
        with self._lock:
            if self._gram is None:
                g = self._a @ self._a.T
                g.setflags(write=False)
                self._gram = g
            return self._gram

    def spectral(self, method="auto", tol=POWER_TOL):
        key = (method, tol)
        with self._lock:
            cached = self._spectral.get(key)
        if cached is None:
            cached = _compute_spectral(self, method, tol)
            with self._lock:
                cached = self._spectral.setdefault(key, cached)
        return cached

    def newton_factor(self, eps):
        """Cholesky factor of ``A A^T + eps I``; built at most once per ``eps``."""
        eps = float(eps)
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        with self._lock:
            fac = self._factors.get(eps)
        if fac is not None:
            return fac
        gram = self.gram()
        with self._lock:
            fac = self._factors.get(eps)
            if fac is None:
                g = gram + eps * np.eye(self.m)
                try:
                    fac = sla.cho_factor(g, lower=True, check_finite=False)
                except np.linalg.LinAlgError as exc:
                    raise np.linalg.LinAlgError(
                        f"A A^T + {eps} I is not numerically positive definite"
                    ) from exc
                self._factors[eps] = fac
            return fac


def as_matrix(A):
    """Wrap ``A`` in a :class:`MeasurementMatrix` unless it already is one."""
    if isinstance(A, MeasurementMatrix):
        return A
    return MeasurementMatrix(A)


def _vector(x, length, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != length:
        raise ValueError(f"{name} must have shape ({length},), got {x.shape}")
    return x


def matvec(A, x):
    """Dense product ``A x``."""
    A = as_matrix(A)
    return A.array @ _vector(x, A.n)


def spectral_extremes(A, method="auto", tol=POWER_TOL):
    """Largest singular value and the m-th largest one.

    Parameters
    ----------
    A : MeasurementMatrix or array_like
    method : {'auto', 'exact_svd', 'power_iteration'}
        ``'auto'`` uses a full SVD when ``min(m, n) <= 512``.
    tol : float
        Relative tolerance for the power/inverse iterations.

    Returns
    -------
    SpectralSummary
        ``sigma_min`` is 0 when ``A`` has rank below ``m`` (including ``m > n``).
    """
    return as_matrix(A).spectral(method, tol)


def _compute_spectral(A, method, tol):
    if method == "auto":
        method = "exact_svd" if min(A.shape) <= EXACT_SVD_LIMIT else "power_iteration"
    if method == "exact_svd":
        s = sla.svdvals(A.array)
        smax = float(s[0])
        smin = float(s[A.m - 1]) if A.m <= s.size else 0.0
        return SpectralSummary(smax, smin, "exact_svd", 0.0)
    if method == "power_iteration":
        smax, smin = _power_extremes(A, tol, POWER_MAXITER)
        return SpectralSummary(smax, smin, "power_iteration", tol)
    raise ValueError(f"unknown spectral method {method!r}")


def _power_extremes(A, tol, maxiter):
    # Power iteration on G = A A^T for sigma_1^2, inverse iteration for sigma_m^2.
    G = A.gram()
    m = A.m
    v = np.ones(m) / np.sqrt(m)
    lam = 0.0
    for _ in range(maxiter):
        w = G @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0, 0.0
        v = w / new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    else:
        raise ConvergenceError("power iteration did not converge", np.sqrt(lam))
    smax = float(np.sqrt(lam))

    if m > A.n:
        return smax, 0.0
    try:
        fac = sla.cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return smax, 0.0
    v = np.ones(m) / np.sqrt(m)
    mu = 0.0
    for _ in range(maxiter):
        w = sla.cho_solve(fac, v, check_finite=False)
        new = float(np.linalg.norm(w))
        v = w / new
        if abs(new - mu) <= tol * new:
            mu = new
            break
        mu = new
    else:
        raise ConvergenceError("inverse iteration did not converge", 1.0 / np.sqrt(mu))
    return smax, float(1.0 / np.sqrt(mu))


def newton_apply(A, eps, r):
    """Regularized Newton direction ``(A^T A + eps I)^{-1} A^T r``.

    Evaluated as ``A^T (A A^T + eps I)^{-1} r`` so only an ``m x m`` SPD system
    is factored; the factor is cached on ``A`` per ``eps``.
    """
    A = as_matrix(A)
    r = _vector(r, A.m, "r")
    fac = A.newton_factor(eps)
    return A.T @ sla.cho_solve(fac, r, check_finite=False)
