"""Gaussian belief over a latent field sampled at prediction points.

The latent state ``x`` collects the field values at the graph's prediction
points. Each node measurement is a scalar linear readout ``y = a^T x + nu``
with Gaussian noise, so the belief stays Gaussian and is carried in
information form: a precision matrix plus a centered information vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.spatial.distance import cdist

from .envgraph import EnvGraph
from .numerics import cholesky_spd, spd_inverse, spd_solve, symmetrize


@dataclass(frozen=True)
class KernelSpec:
    """Stationary covariance family: squared_exponential or matern32."""

    family: str = "squared_exponential"
    length_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("squared_exponential", "matern32"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.length_scale <= 0:
            raise ValueError("length_scale must be positive")


def kernel_matrix(spec: KernelSpec, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    xa = np.atleast_2d(np.asarray(xa, dtype=float))
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    d = cdist(xa, xb)
    if spec.family == "squared_exponential":
        return np.exp(-0.5 * (d / spec.length_scale) ** 2)
    r = np.sqrt(3.0) * d / spec.length_scale
    return (1.0 + r) * np.exp(-r)


def build_prior(points: np.ndarray, spec: KernelSpec, jitter: float = 1e-9) -> np.ndarray:
    """Kernel covariance over ``points`` with a diagonal jitter for stability."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cov = kernel_matrix(spec, pts, pts)
    return cov + jitter * np.eye(len(pts))


@dataclass(frozen=True)
class SensorModel:
    """Linear readout row per node plus per-node noise levels."""

    A: np.ndarray  # (n, m): row i maps the latent state to node i's reading
    sigma: np.ndarray  # (n,) measurement noise std dev per node
    sigma_min: float
    sigma_max: float

    def __post_init__(self) -> None:
        if self.A.shape[0] != self.sigma.shape[0]:
            raise ValueError("A and sigma disagree on node count")
        if np.any(self.sigma <= 0):
            raise ValueError("noise levels must be positive")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def a(self, node: int) -> np.ndarray:
        return self.A[node]


def default_characterization(
    g: EnvGraph,
    prior_cov: np.ndarray,
    spec: KernelSpec,
    sigma: float | np.ndarray = 1.0,
    sigma_min: float | None = None,
    sigma_max: float | None = None,
) -> SensorModel:
    """Readout rows that make a node measurement look like sampling the field.

    Row i is the kernel regression of the field at node i onto the prediction
    points: a_i solves prior_cov a_i = k(prediction_points, node_i). A node
    sitting on a prediction point gets (nearly) a coordinate selector; a node
    far from all of them reads almost nothing.
    """
    cross = kernel_matrix(spec, g.prediction_points, g.coords)  # (m, n)
    a_rows = spd_solve(prior_cov, cross).T  # (n, m)
    sig = np.full(g.n, float(sigma)) if np.isscalar(sigma) else np.asarray(sigma, float)
    lo = float(np.min(sig)) if sigma_min is None else float(sigma_min)
    hi = float(np.max(sig)) if sigma_max is None else float(sigma_max)
    return SensorModel(A=a_rows, sigma=sig, sigma_min=lo, sigma_max=hi)


@dataclass(frozen=True)
class Measurement:
    node: int
    value: float
    noise_std: float


@dataclass(frozen=True)
class Belief:
    """Information-form Gaussian over the latent state.

    posterior precision = prior precision + sum of sigma^-2 a a^T over the
    history; the info vector accumulates sigma^-2 (y - a^T prior_mean) a so
    the posterior mean is prior_mean + precision^-1 info.
    """

    prior_mean: np.ndarray
    prior_cov: np.ndarray
    prior_precision: np.ndarray
    precision: np.ndarray
    info: np.ndarray
    history: tuple[Measurement, ...]

    @classmethod
    def from_prior(cls, mean: np.ndarray, cov: np.ndarray) -> Belief:
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float)
        prec = spd_inverse(cov)
        return cls(
            prior_mean=mean,
            prior_cov=cov,
            prior_precision=prec,
            precision=prec.copy(),
            info=np.zeros_like(mean),
            history=(),
        )

    @property
    def m(self) -> int:
        return self.prior_mean.shape[0]


def update(b: Belief, node: int, y: float, model: SensorModel) -> Belief:
    """Fold one scalar measurement at ``node`` into the belief (rank-one)."""
    a = model.a(node)
    sig = float(model.sigma[node])
    w = 1.0 / (sig * sig)
    precision = b.precision + w * np.outer(a, a)
    info = b.info + w * (y - a @ b.prior_mean) * a
    return Belief(
        prior_mean=b.prior_mean,
        prior_cov=b.prior_cov,
        prior_precision=b.prior_precision,
        precision=symmetrize(precision),
        info=info,
        history=b.history + (Measurement(int(node), float(y), sig),),
    )


def posterior_mean(b: Belief) -> np.ndarray:
    if not b.history:
        return b.prior_mean.copy()
    return b.prior_mean + spd_solve(b.precision, b.info)


def posterior_cov(b: Belief) -> np.ndarray:
    if not b.history:
        return b.prior_cov.copy()
    return spd_inverse(b.precision)


def predictive_node_moments(b: Belief, model: SensorModel) -> tuple[np.ndarray, np.ndarray]:
    """Mean and std dev of the noiseless readout at every node."""
    mean = model.A @ posterior_mean(b)
    cov = posterior_cov(b)
    var = np.einsum("ij,jk,ik->i", model.A, cov, model.A)
    return mean, np.sqrt(np.maximum(var, 0.0))


def neg_log_posterior_gradient(b: Belief, model: SensorModel, x: np.ndarray) -> np.ndarray:
    """Gradient of the quadratic negative log posterior at ``x``.

    Vanishes exactly at the posterior mean; used as a stationarity check.
    """
    g = b.prior_precision @ (x - b.prior_mean)
    for meas in b.history:
        a = model.a(meas.node)
        g -= (meas.value - a @ x) / (meas.noise_std**2) * a
    return g


def kernel_form_posterior(
    g: EnvGraph,
    spec: KernelSpec,
    measured: list[tuple[int, float]],
    sigma: float = 1.0,
    jitter: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior via Gram-matrix conditioning instead of precision updates.

    Builds the zero-mean prior at the prediction points, forms the Gram matrix
    induced by the node readouts, and conditions in covariance form. Agrees
    with the recursive information-form update to numerical precision.
    """
    prior = build_prior(g.prediction_points, spec, jitter)
    model = default_characterization(g, prior, spec, sigma=sigma)
    if not measured:
        return np.zeros(len(prior)), prior.copy()
    nodes = [node for node, _ in measured]
    y = np.array([val for _, val in measured], dtype=float)
    a_sel = model.A[nodes]  # (k, m)
    cross = prior @ a_sel.T  # (m, k) covariance between state and readouts
    gram = a_sel @ cross + (sigma * sigma) * np.eye(len(nodes))
    lower = cholesky_spd(gram)
    gain = cho_solve((lower, True), cross.T)  # (k, m)
    mean = gain.T @ y
    cov = prior - cross @ gain
    return mean, symmetrize(cov)
