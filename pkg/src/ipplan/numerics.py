"""Thin wrappers around SPD linear algebra with uniform error reporting."""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .errors import NumericalError


def cholesky_spd(mat: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    A nonzero jitter is added to the diagonal before factoring, which is how
    callers regularize nearly singular kernels.
    """
    m = np.asarray(mat, dtype=float)
    if jitter:
        m = m + jitter * np.eye(m.shape[0])
    try:
        return sla.cholesky(m, lower=True)
    except sla.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from exc


def spd_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    lower = cholesky_spd(mat)
    return sla.cho_solve((lower, True), np.asarray(rhs, dtype=float))


def spd_inverse(mat: np.ndarray) -> np.ndarray:
    lower = cholesky_spd(mat)
    inv = sla.cho_solve((lower, True), np.eye(mat.shape[0]))
    # symmetrize: cho_solve output drifts by rounding
    return 0.5 * (inv + inv.T)


def spd_logdet(mat: np.ndarray) -> float:
    lower = cholesky_spd(mat)
    return float(2.0 * np.sum(np.log(np.diag(lower))))


def symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)
