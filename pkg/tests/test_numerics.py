"""SPD linear-algebra wrappers against plain numpy references."""

import numpy as np
import pytest

from ipplan import NumericalError
from ipplan.numerics import (
    cholesky_spd,
    spd_inverse,
    spd_logdet,
    spd_solve,
    symmetrize,
)


def random_spd(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, m))
    return a @ a.T + m * np.eye(m)


@pytest.mark.parametrize("m", [1, 2, 5, 12])
def test_cholesky_reconstructs(m):
    mat = random_spd(m, m)
    lower = cholesky_spd(mat)
    assert np.allclose(lower @ lower.T, mat, atol=1e-10)
    assert np.allclose(np.triu(lower, 1), 0.0)


def test_cholesky_jitter_regularizes():
    mat = np.zeros((3, 3))  # singular without the jitter
    lower = cholesky_spd(mat, jitter=1e-6)
    assert np.allclose(lower @ lower.T, 1e-6 * np.eye(3), atol=1e-12)


def test_non_spd_raises():
    with pytest.raises(NumericalError):
        cholesky_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite


def test_solve_and_inverse_match_numpy():
    mat = random_spd(6, 0)
    rhs = np.arange(6.0)
    assert np.allclose(spd_solve(mat, rhs), np.linalg.solve(mat, rhs), atol=1e-10)
    inv = spd_inverse(mat)
    assert np.allclose(inv, np.linalg.inv(mat), atol=1e-10)
    assert np.allclose(inv, inv.T)  # exact symmetry by construction


def test_logdet_matches_slogdet():
    mat = random_spd(7, 3)
    sign, logdet = np.linalg.slogdet(mat)
    assert sign > 0
    assert spd_logdet(mat) == pytest.approx(logdet, abs=1e-10)


def test_symmetrize():
    a = np.array([[1.0, 2.0], [0.0, 3.0]])
    s = symmetrize(a)
    assert np.allclose(s, s.T)
    assert np.allclose(s, [[1.0, 1.0], [1.0, 3.0]])
