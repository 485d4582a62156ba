"""Shared helpers for the test suite."""

import numpy as np

from ipplan import Belief, KernelSpec, build_grid, build_prior, default_characterization


def make_instance(
    side=4,
    mode="unit",
    family="squared_exponential",
    length_scale=1.0,
    prediction_count=20,
    sigma=1.0,
):
    """Grid, sensor model, prior covariance, and fresh belief in one call."""
    g = build_grid(side, mode, prediction_count=prediction_count)
    spec = KernelSpec(family, length_scale)
    pc = build_prior(g.prediction_points, spec)
    model = default_characterization(g, pc, spec, sigma=sigma)
    prior = Belief.from_prior(np.zeros(len(pc)), pc)
    return g, model, pc, prior
