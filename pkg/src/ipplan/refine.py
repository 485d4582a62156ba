"""Post-hoc improvements: same-cost node swaps and sensor-type selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import SensorModel
from .bounds import _DesignProblem, _frank_wolfe
from .envgraph import EnvGraph, PathEncoding
from .numerics import spd_inverse
from .objectives import Objective, _phi_from_precision


def _swap_candidates(g: EnvGraph, seq: list[int], t: int) -> list[int]:
    """Replacement nodes for position t that keep both hops and their cost."""
    pred, mid, succ = seq[t - 1], seq[t], seq[t + 1]
    old_cost = g.weight(pred, mid) + g.weight(mid, succ)
    on_path = set(seq)
    out = []
    for j in g.out_neighbors(pred):
        if j in on_path or not g.has_edge(j, succ):
            continue
        if abs(g.weight(pred, j) + g.weight(j, succ) - old_cost) <= 1e-9:
            out.append(j)
    return out


def polish(
    g: EnvGraph,
    model: SensorModel,
    prior_cov: np.ndarray,
    obj: Objective,
    p: PathEncoding,
    n_swaps: int = 100,
    rng_seed: int = 0,
    exhaustive: bool = False,
) -> PathEncoding:
    """Improve a path by same-cost one-node detour swaps.

    Each accepted swap replaces one interior node with an unused neighbor
    detour of identical cost and strictly lower objective, so the result is
    never worse than the input and always spends exactly the same budget.
    ``exhaustive`` sweeps every interior position repeatedly instead of
    sampling positions at random.
    """
    if not obj.is_design:
        raise ValueError("polish needs a design objective")
    seq = list(p.sequence)
    if len(seq) < 3:
        return p
    problem = _DesignProblem(
        obj.kind, spd_inverse(prior_cov), model.A, model.sigma
    )
    weights = np.asarray(p.z, dtype=float).sum(axis=1)
    prec = problem.precision(weights)
    value = problem.value(prec)
    inv_var = 1.0 / (model.sigma**2)

    def try_swap(t: int) -> bool:
        nonlocal prec, value
        mid = seq[t]
        best = None
        for j in _swap_candidates(g, seq, t):
            cand_prec = (
                prec
                - inv_var[mid] * np.outer(model.A[mid], model.A[mid])
                + inv_var[j] * np.outer(model.A[j], model.A[j])
            )
            cand_val = problem.value(cand_prec)
            if cand_val < value - 1e-12 and (best is None or cand_val < best[0]):
                best = (cand_val, j, cand_prec)
        if best is None:
            return False
        value, seq[t], prec = best[0], best[1], best[2]
        return True

    if exhaustive:
        improved = True
        sweeps = 0
        while improved and sweeps < n_swaps:
            improved = False
            sweeps += 1
            for t in range(1, len(seq) - 1):
                improved |= try_swap(t)
    else:
        rng = np.random.default_rng(rng_seed)
        for _ in range(n_swaps):
            try_swap(int(rng.integers(1, len(seq) - 1)))

    out = PathEncoding.from_sequence(g, seq)
    assert abs(out.total_cost - p.total_cost) <= 1e-9
    return out


@dataclass(frozen=True)
class SensorAssignment:
    """Which path nodes get which sensor grade, plus bound bookkeeping."""

    s: np.ndarray  # (n,) relaxed selection intensity, zero off the path
    chosen: dict[int, float]  # node -> assigned noise level
    k: int
    relaxed_value: float  # additive upgrade model at the final fractional s
    relaxed_lower: float  # certified lower bound on the relaxed optimum
    rounded_additive_value: float  # chosen set scored in the additive model
    rounded_value: float  # chosen set scored as realized (noise replaced)
    iterations: int
    fw_gap: float


def assignment_objective(
    g: EnvGraph,
    model: SensorModel,
    prior_cov: np.ndarray,
    obj: Objective,
    p: PathEncoding,
    chosen: dict[int, float],
    default_sigma: float,
) -> float:
    """Objective of a path whose nodes carry the assigned sensor grades.

    Unassigned path nodes fall back to ``default_sigma``; as everywhere, the
    goal node takes no measurement.
    """
    w = np.asarray(p.z, dtype=float).sum(axis=1)
    prec = spd_inverse(prior_cov)
    for i in np.flatnonzero(w > 0):
        sig = chosen.get(int(i), default_sigma)
        prec = prec + w[i] / (sig * sig) * np.outer(model.A[i], model.A[i])
    return _phi_from_precision(obj.kind, prec)


def select_sensors(
    g: EnvGraph,
    model: SensorModel,
    prior_cov: np.ndarray,
    obj: Objective,
    p: PathEncoding,
    k: int,
    ladder: list[float],
    max_iters: int = 200,
    tol: float = 1e-8,
) -> SensorAssignment:
    """Pick the k path nodes that deserve the best sensors.

    The relaxation starts from the pessimistic posterior (every path
    measurement at the worst ladder noise) and optimizes a fractional upgrade
    s on the path nodes, sum(s) = k, each upgrade adding best-noise
    information. Rounding keeps the k largest intensities and hands out the
    ladder noise levels in order, quietest first.
    """
    if not obj.is_design:
        raise ValueError("sensor selection needs a design objective")
    if not ladder or any(b < a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be ascending noise levels")
    if any(s <= 0 for s in ladder):
        raise ValueError("noise levels must be positive")
    support = list(p.sequence)
    if not 1 <= k <= len(support):
        raise ValueError("k must be between 1 and the path length")
    sigma_min, sigma_max = float(ladder[0]), float(ladder[-1])

    w_path = np.asarray(p.z, dtype=float).sum(axis=1)
    prior_prec = spd_inverse(prior_cov)
    pess_prec = prior_prec + model.A.T @ (
        (w_path / sigma_max**2)[:, None] * model.A
    )
    problem = _DesignProblem(
        obj.kind,
        pess_prec,
        model.A[support],
        np.full(len(support), sigma_min),
    )

    def lmo(grad):
        s = np.zeros(len(support))
        s[np.argsort(grad, kind="stable")[:k]] = 1.0
        return s, None

    out = _frank_wolfe(problem, lmo, max_iters, tol)

    order = sorted(
        range(len(support)), key=lambda pos: (-out.weights[pos], support[pos])
    )
    grades = list(ladder) + [sigma_max] * max(0, k - len(ladder))
    chosen = {int(support[pos]): float(grades[rank]) for rank, pos in enumerate(order[:k])}

    indicator = np.zeros(len(support))
    indicator[order[:k]] = 1.0
    rounded_additive = problem.value(problem.precision(indicator))

    rounded = assignment_objective(
        g, model, prior_cov, obj, p, chosen, sigma_max
    )
    s_full = np.zeros(g.n)
    for pos, node in enumerate(support):
        s_full[node] = max(s_full[node], out.weights[pos])
    return SensorAssignment(
        s=np.clip(s_full, 0.0, 1.0),
        chosen=chosen,
        k=k,
        relaxed_value=out.relaxed_value,
        relaxed_lower=out.lower,
        rounded_additive_value=rounded_additive,
        rounded_value=rounded,
        iterations=out.iterations,
        fw_gap=out.fw_gap,
    )
