"""Uncertainty objectives over beliefs and over relaxed node-weight designs.

All objectives are minimized. Kind "A" is the posterior covariance trace,
"B" is the negated precision trace (affine in the design weights), "D" is
the posterior log determinant, and "EI" is expected improvement for adaptive
minimum seeking (scored per node or per prediction point, not per design).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .belief import (
    Belief,
    SensorModel,
    posterior_cov,
    posterior_mean,
    predictive_node_moments,
)
from .envgraph import EnvGraph, PathEncoding
from .numerics import spd_inverse, spd_logdet

_KINDS = ("A", "B", "D", "EI")


@dataclass(frozen=True)
class Objective:
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"objective kind must be one of {_KINDS}")

    @classmethod
    def parse(cls, text: str) -> Objective:
        return cls(text.strip().upper())

    @property
    def is_design(self) -> bool:
        return self.kind in ("A", "B", "D")

    def __str__(self) -> str:
        return self.kind


def _phi_from_precision(kind: str, precision: np.ndarray) -> float:
    if kind == "A":
        return float(np.trace(spd_inverse(precision)))
    if kind == "B":
        return float(-np.trace(precision))
    if kind == "D":
        return float(-spd_logdet(precision))
    raise ValueError(f"objective {kind} has no precision form")


def eval_belief(obj: Objective, b: Belief) -> float:
    """Scalar uncertainty of a belief under a design objective."""
    if not obj.is_design:
        raise ValueError("EI is scored per node, not as a belief scalar")
    return _phi_from_precision(obj.kind, b.precision)


@dataclass(frozen=True)
class DesignWeights:
    """Relaxed per-node measurement weights in [0, 1]."""

    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a flat vector")
        if np.any(w < -1e-9) or np.any(w > 1 + 1e-9):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "w", np.clip(w, 0.0, 1.0))

    @classmethod
    def from_path(cls, g: EnvGraph, p: PathEncoding) -> DesignWeights:
        # node weight = selected out-degree, so the goal contributes nothing
        return cls(np.asarray(p.z, dtype=float).sum(axis=1))


def design_precision(
    w: np.ndarray, model: SensorModel, prior_precision: np.ndarray
) -> np.ndarray:
    """Posterior precision induced by fractional measurement weights."""
    c = np.asarray(w, dtype=float) / (model.sigma**2)
    return prior_precision + model.A.T @ (c[:, None] * model.A)


def _unwrap(w: DesignWeights | np.ndarray) -> np.ndarray:
    return w.w if isinstance(w, DesignWeights) else np.asarray(w, dtype=float)


def eval_design(
    obj: Objective,
    w: DesignWeights | np.ndarray,
    model: SensorModel,
    prior_cov: np.ndarray,
    prior_precision: np.ndarray | None = None,
) -> float:
    """Objective value of a (possibly fractional) measurement design."""
    if not obj.is_design:
        raise ValueError("EI has no design form")
    prec0 = spd_inverse(prior_cov) if prior_precision is None else prior_precision
    return _phi_from_precision(obj.kind, design_precision(_unwrap(w), model, prec0))


def grad_design(
    obj: Objective,
    w: DesignWeights | np.ndarray,
    model: SensorModel,
    prior_cov: np.ndarray,
    prior_precision: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the design objective with respect to each node weight.

    Every component is nonpositive: adding measurement weight never hurts.
    """
    if not obj.is_design:
        raise ValueError("EI has no design form")
    inv_var = 1.0 / (model.sigma**2)
    if obj.kind == "B":
        return -inv_var * np.einsum("ij,ij->i", model.A, model.A)
    prec0 = spd_inverse(prior_cov) if prior_precision is None else prior_precision
    cov = spd_inverse(design_precision(_unwrap(w), model, prec0))
    s = model.A @ cov
    if obj.kind == "A":
        return -inv_var * np.einsum("ij,ij->i", s, s)
    return -inv_var * np.einsum("ij,ij->i", s, model.A)


def _expected_improvement(gap: np.ndarray, std: np.ndarray) -> np.ndarray:
    out = np.maximum(gap, 0.0)
    pos = std > 0
    if np.any(pos):
        u = gap[pos] / std[pos]
        pdf = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        out[pos] = gap[pos] * ndtr(u) + std[pos] * pdf
    return out


def eval_ei(b: Belief, model: SensorModel, y_min: float) -> np.ndarray:
    """Expected improvement over the incumbent minimum at every node readout."""
    mean, std = predictive_node_moments(b, model)
    return _expected_improvement(y_min - mean, std)


def eval_ei_prediction(b: Belief, y_min: float) -> np.ndarray:
    """Expected improvement at the prediction points themselves."""
    mean = posterior_mean(b)
    var = np.diag(posterior_cov(b))
    return _expected_improvement(y_min - mean, np.sqrt(np.maximum(var, 0.0)))


def mutual_information(b: Belief) -> float:
    """Information gained about the latent state by the measurement history."""
    return 0.5 * (spd_logdet(b.precision) - spd_logdet(b.prior_precision))
