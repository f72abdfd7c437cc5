"""Dense linear algebra: jittered Cholesky solves, SVD and ridge pseudo-inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from dyntex.errors import NumericalError

# diagonal jitter schedule, as multiples of trace/n
JITTER_STEPS = (0.0, 1e-10, 1e-8)


@dataclass(frozen=True, eq=False)
class SpdFactorization:
    """Lower Cholesky factor of ``lam*I + omega + jitter*I``."""

    n: int
    factor: np.ndarray
    jitter_applied: float

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape[0] != self.n:
            raise ValueError(f"rhs has {rhs.shape[0]} rows, system order is {self.n}")
        return scipy.linalg.cho_solve((self.factor, True), rhs, check_finite=False)


def spd_factor(omega, lam: float) -> SpdFactorization:
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {omega.shape}")
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("lambda must be finite and >= 0")
    if not np.all(np.isfinite(omega)):
        raise NumericalError("matrix has non-finite entries")
    n = omega.shape[0]
    system = omega + lam * np.eye(n)
    scale = abs(np.trace(system)) / n if n else 0.0
    for step in JITTER_STEPS:
        jitter = step * scale
        try:
            factor = np.linalg.cholesky(system + jitter * np.eye(n) if jitter else system)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(factor)):
            return SpdFactorization(n, factor, jitter)
    raise NumericalError("matrix not positive definite; increase lambda")


def spd_solve(omega, lam: float, rhs) -> np.ndarray:
    """Solve ``(lam*I + omega) X = rhs`` by Cholesky with escalating jitter."""
    return spd_factor(omega, lam).solve(rhs)


def svd(a):
    """Thin SVD ``a = U diag(S) V^T`` with ``r = min(p, q)`` columns.

    Returns ``(U, S, V)``; note ``V`` (not ``V^T``).
    """
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input contains non-finite values")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"svd did not converge: {exc}") from exc
    return u, s, vt.T


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def pinv_solve(h, y, lam: float) -> np.ndarray:
    """Ridge least squares ``argmin ||H b - Y||^2 + lam ||b||^2``.

    Uses ``H^T (lam I + H H^T)^{-1} Y`` when H has no more rows than columns,
    otherwise ``(lam I + H^T H)^{-1} H^T Y``; the two are algebraically equal
    and the smaller system is solved.
    """
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if h.shape[0] != y.shape[0]:
        raise ValueError(f"H has {h.shape[0]} rows but Y has {y.shape[0]}")
    n_rows, n_cols = h.shape
    if n_rows <= n_cols:
        return h.T @ spd_solve(_sym(h @ h.T), lam, y)
    return spd_solve(_sym(h.T @ h), lam, h.T @ y)
