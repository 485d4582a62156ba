"""Certified lower bounds, exact search for small instances, and rounding.

The relaxations minimize the design objective over a convex superset of all
budget-feasible path images, so every Frank-Wolfe iterate yields a valid
lower bound on the best achievable path: f(w_t) - <grad, w_t - s_t> with s_t
the linear-minimization vertex. Two supersets are supported: a budgeted box,
and the convex hull of budget-feasible walk visit counts (tighter; its
linear oracle is the reward-collecting DP).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .belief import SensorModel
from .envgraph import (
    BUDGET_TOL,
    EnvGraph,
    PathEncoding,
    feasible_moves,
    shortest_costs_from,
    shortest_costs_to_goal,
    shortest_path,
)
from .errors import BoundInconsistencyError, InfeasibleBudgetError
from .numerics import spd_inverse, spd_logdet
from .objectives import DesignWeights, Objective
from .planner import _make_buckets, dp_orienteering

RELAXATION_KINDS = ("box_budget", "walk_polytope")


# ---------------------------------------------------------------------------
# Frank-Wolfe core over design precisions


class _DesignProblem:
    """Design objective machinery shared by the relaxations and the pruner."""

    def __init__(self, kind: str, prior_prec: np.ndarray, a_rows: np.ndarray, sigma: np.ndarray):
        self.kind = kind
        self.prior_prec = prior_prec
        self.a_rows = a_rows
        self.inv_var = 1.0 / (sigma**2)

    def precision(self, w: np.ndarray) -> np.ndarray:
        c = w * self.inv_var
        return self.prior_prec + self.a_rows.T @ (c[:, None] * self.a_rows)

    def value(self, precision: np.ndarray) -> float:
        if self.kind == "A":
            return float(np.trace(spd_inverse(precision)))
        if self.kind == "B":
            return float(-np.trace(precision))
        return float(-spd_logdet(precision))

    def value_and_grad(self, precision: np.ndarray) -> tuple[float, np.ndarray]:
        if self.kind == "B":
            grad = -self.inv_var * np.einsum("ij,ij->i", self.a_rows, self.a_rows)
            return float(-np.trace(precision)), grad
        cov = spd_inverse(precision)
        s = self.a_rows @ cov
        if self.kind == "A":
            grad = -self.inv_var * np.einsum("ij,ij->i", s, s)
            return float(np.trace(cov)), grad
        grad = -self.inv_var * np.einsum("ij,ij->i", s, self.a_rows)
        return float(-spd_logdet(precision)), grad


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_gamma(score, iters: int = 40) -> float:
    """Minimize a unimodal function of gamma on [0, 1]."""
    a, b = 0.0, 1.0
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = score(c), score(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = score(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = score(d)
    return 0.5 * (a + b)


@dataclass
class _FwOutcome:
    weights: np.ndarray
    relaxed_value: float
    lower: float
    fw_gap: float
    iterations: int
    vertex_value: float
    vertex_weights: np.ndarray
    vertex_walk: list[int] | None


def _frank_wolfe(problem: _DesignProblem, lmo, max_iters: int, tol: float) -> _FwOutcome:
    _, g0 = problem.value_and_grad(problem.prior_prec)
    x, walk = lmo(g0)
    px = problem.precision(x)
    best_lower = -np.inf
    vertex_value = problem.value(px)
    vertex_weights, vertex_walk = x.copy(), walk
    fw_gap, iters = np.inf, 0
    val = vertex_value
    for t in range(1, max_iters + 1):
        val, grad = problem.value_and_grad(px)
        s, walk = lmo(grad)
        fw_gap = float(grad @ (x - s))
        best_lower = max(best_lower, val - fw_gap)
        iters = t
        ps = problem.precision(s)
        vs = problem.value(ps)
        if vs < vertex_value - 1e-15:
            vertex_value, vertex_weights, vertex_walk = vs, s.copy(), walk
        if fw_gap <= tol:
            break
        if problem.kind == "B":
            gamma = 1.0
        else:
            gamma = _golden_gamma(
                lambda t_: problem.value((1.0 - t_) * px + t_ * ps)
            )
        if gamma <= 0.0:
            break
        x = x + gamma * (s - x)
        px = (1.0 - gamma) * px + gamma * ps
        if t % 25 == 0:
            px = problem.precision(x)  # resync against affine-update drift
    return _FwOutcome(
        weights=x,
        relaxed_value=val,
        lower=best_lower,
        fw_gap=fw_gap,
        iterations=iters,
        vertex_value=vertex_value,
        vertex_weights=vertex_weights,
        vertex_walk=vertex_walk,
    )


def _box_lmo(grad: np.ndarray, cap: int, forbidden: int | None):
    """Vertex of {0 <= w <= 1, sum w <= cap}: the cap most negative slots."""
    s = np.zeros_like(grad)
    order = np.argsort(grad, kind="stable")
    taken = 0
    for idx in order:
        if taken >= cap:
            break
        if grad[idx] >= 0.0:
            break
        if forbidden is not None and idx == forbidden:
            continue
        s[idx] = 1.0
        taken += 1
    return s, None


def max_affordable_edges(g: EnvGraph, budget: float) -> int:
    return min(g.n - 1, int(math.floor(budget / g.min_edge_weight() + 1e-9)))


@dataclass(frozen=True)
class RelaxResult:
    """Relaxation outcome: box-projected weights plus bound certificates."""

    weights: DesignWeights
    lower: float
    fw_gap: float
    iterations: int
    kind: str
    relaxed_value: float
    vertex_value: float
    vertex_walk: tuple[int, ...] | None


def relax_lower_bound(
    g: EnvGraph,
    model: SensorModel,
    prior_cov: np.ndarray,
    obj: Objective,
    budget: float,
    kind: str = "walk_polytope",
    max_iters: int = 200,
    tol: float = 1e-6,
) -> RelaxResult:
    """Certified lower bound on the best budget-feasible path objective.

    Both relaxations contain every feasible simple path, so each certificate
    is a valid path bound on its own. They are incomparable sets, though: the
    walk vertices may count a node twice, which the box forbids. The
    walk_polytope result therefore takes the better of the two certificates,
    so asking for the tighter kind never returns a weaker number.
    """
    if not obj.is_design:
        raise ValueError("EI has no design relaxation")
    if kind not in RELAXATION_KINDS:
        raise ValueError(f"kind must be one of {RELAXATION_KINDS}")
    if shortest_costs_to_goal(g)[g.start] > budget + BUDGET_TOL:
        raise InfeasibleBudgetError("no start-to-goal path fits the budget")
    problem = _DesignProblem(
        obj.kind, spd_inverse(prior_cov), model.A, model.sigma
    )
    cap = max_affordable_edges(g, budget)

    def box_lmo(grad):
        return _box_lmo(grad, cap, g.goal)

    if kind == "box_budget":
        out = _frank_wolfe(problem, box_lmo, max_iters, tol)
        lower = out.lower
    else:
        buckets = _make_buckets(g, budget, None)
        if not buckets.exact:
            raise ValueError(
                "walk_polytope needs commensurable edge weights; "
                "use kind='box_budget' on this graph"
            )

        def lmo(grad):
            rewards = -grad
            rewards[g.goal] = 0.0
            _, walk = dp_orienteering(
                g, rewards, budget, buckets=buckets, require_exact=True
            )
            counts = np.bincount(walk[:-1], minlength=g.n).astype(float)
            return counts, walk

        out = _frank_wolfe(problem, lmo, max_iters, tol)
        box_out = _frank_wolfe(problem, box_lmo, max_iters, tol)
        lower = max(out.lower, box_out.lower)
    return RelaxResult(
        weights=DesignWeights(np.clip(out.weights, 0.0, 1.0)),
        lower=lower,
        fw_gap=out.fw_gap,
        iterations=out.iterations,
        kind=kind,
        relaxed_value=out.relaxed_value,
        vertex_value=out.vertex_value,
        vertex_walk=None if out.vertex_walk is None else tuple(out.vertex_walk),
    )


# ---------------------------------------------------------------------------
# exact search on small instances


@dataclass(frozen=True)
class ExactResult:
    path: PathEncoding
    value: float
    truncated: bool
    nodes_expanded: int


def exact_small(
    g: EnvGraph,
    model: SensorModel,
    prior_cov: np.ndarray,
    obj: Objective,
    budget: float,
    runtime_cap_s: float | None = None,
    prune: bool = True,
) -> ExactResult:
    """Depth-first branch and bound over simple paths; exact when not capped.

    Children expand in ascending node order, and the incumbent only moves on
    strict improvement, so the returned argmin is deterministic. Subtrees are
    discarded when an optimistic relaxed completion of the partial path
    cannot beat the incumbent.
    """
    if not obj.is_design:
        raise ValueError("exact search needs a design objective")
    n = g.n
    prior_prec = spd_inverse(prior_cov)
    problem = _DesignProblem(obj.kind, prior_prec, model.A, model.sigma)
    dist_goal = shortest_costs_to_goal(g)
    if dist_goal[g.start] > budget + BUDGET_TOL:
        raise InfeasibleBudgetError("no start-to-goal path fits the budget")
    dist_from = [shortest_costs_from(g, j) for j in range(n)]
    contrib = [
        np.outer(model.A[i], model.A[i]) / model.sigma[i] ** 2 for i in range(n)
    ]
    min_w = g.min_edge_weight()

    seed_seq = shortest_path(g, g.start)
    seed_path = PathEncoding.from_sequence(g, seed_seq)
    inc_prec = problem.precision(
        np.asarray(seed_path.z, dtype=float).sum(axis=1)
    )
    best_value = problem.value(inc_prec)
    best_seq = list(seed_seq)

    t0 = time.perf_counter()
    truncated = False
    expanded = 0

    def completion_bound(p_state: np.ndarray, at: int, visited: set[int], b_rem: float) -> float:
        reach = dist_from[at]
        cand = [
            u
            for u in range(n)
            if u not in visited
            and u != g.goal
            and reach[u] + dist_goal[u] <= b_rem + BUDGET_TOL
        ]
        cand.append(at)
        cap = min(len(cand), int(math.floor(b_rem / min_w + 1e-9)))
        sub = _DesignProblem(
            obj.kind, p_state, model.A[cand], model.sigma[cand]
        )
        out = _frank_wolfe(
            sub, lambda grad: _box_lmo(grad, cap, None), max_iters=40, tol=1e-9
        )
        return out.lower

    def dfs(cur: int, visited: set[int], cost: float, p_state: np.ndarray) -> None:
        nonlocal best_value, best_seq, truncated, expanded
        if truncated:
            return
        if runtime_cap_s is not None and time.perf_counter() - t0 > runtime_cap_s:
            truncated = True
            return
        expanded += 1
        p_next = p_state + contrib[cur]
        for j in g.out_neighbors(cur):
            if j in visited:
                continue
            c2 = cost + g.weight(cur, j)
            if c2 + dist_goal[j] > budget + BUDGET_TOL:
                continue
            seq.append(j)
            if j == g.goal:
                val = problem.value(p_next)
                if val < best_value - 1e-15:
                    best_value = val
                    best_seq = list(seq)
            else:
                keep = True
                if prune:
                    lb = completion_bound(p_next, j, visited | {j}, budget - c2)
                    keep = lb < best_value - 1e-12
                if keep:
                    visited.add(j)
                    dfs(j, visited, c2, p_next)
                    visited.remove(j)
            seq.pop()

    seq = [g.start]
    dfs(g.start, {g.start}, 0.0, prior_prec)
    return ExactResult(
        path=PathEncoding.from_sequence(g, best_seq),
        value=best_value,
        truncated=truncated,
        nodes_expanded=expanded,
    )


# ---------------------------------------------------------------------------
# rounding and gap reports


def round_weights_to_path(
    g: EnvGraph, weights: np.ndarray, budget: float
) -> PathEncoding:
    """Trace a feasible path visiting heavy nodes early.

    Nodes are ranked by descending weight (index breaks ties), the rank
    standing in for a visit order. From each node the walker takes the
    feasible hop with the best rank still ahead of its own; when no forward
    hop remains it finishes along a cheapest goal completion.
    """
    w = np.asarray(weights, dtype=float)
    order = sorted(range(g.n), key=lambda i: (-w[i], i))
    rank = np.empty(g.n, dtype=int)
    for pos, node in enumerate(order):
        rank[node] = pos
    rank[g.start] = -1
    seq = [g.start]
    visited = {g.start}
    remaining = budget
    cur = g.start
    while cur != g.goal:
        moves = feasible_moves(g, cur, visited, remaining)
        assert moves, "move filter keeps a goal completion affordable"
        ahead = [(rank[j], j, cost) for j, cost in moves if rank[j] > rank[cur]]
        if ahead:
            _, nxt, cost = min(ahead)
        else:
            tail = shortest_path(g, cur, frozenset(visited) - {cur})
            for node in tail[1:]:
                seq.append(node)
            break
        seq.append(nxt)
        visited.add(nxt)
        remaining -= cost
        cur = nxt
    return PathEncoding.from_sequence(g, seq)


def relax_and_round(
    g: EnvGraph,
    model: SensorModel,
    prior_cov: np.ndarray,
    obj: Objective,
    budget: float,
    kind: str = "walk_polytope",
    max_iters: int = 200,
    tol: float = 1e-6,
) -> PathEncoding:
    """Solve the relaxation, then recover a feasible path from its weights.

    If the relaxation already landed on a single simple walk (its best vertex
    matches the relaxed value), that walk is returned as-is.
    """
    res = relax_lower_bound(g, model, prior_cov, obj, budget, kind, max_iters, tol)
    walk = res.vertex_walk
    if (
        walk is not None
        and len(set(walk)) == len(walk)
        and res.vertex_value <= res.relaxed_value + 1e-9
    ):
        return PathEncoding.from_sequence(g, walk)
    return round_weights_to_path(g, res.weights.w, budget)


@dataclass(frozen=True)
class BoundReport:
    lower: float
    upper: float
    gap_delta: float  # per-prediction-point gap (upper - lower) / m
    gap_ratio_a: float  # m * delta / lower: multiplicative slack for traces
    gap_ratio_d: float  # exp(delta): volume-style slack for log determinants
    relaxation_kind: str
    iterations: int
    fw_gap: float


def gap(
    upper: float,
    lower: float,
    m: int,
    relaxation_kind: str = "",
    iterations: int = 0,
    fw_gap: float = float("nan"),
) -> BoundReport:
    """Optimality-gap summary; refuses bounds that cross."""
    if upper < lower - 1e-9:
        raise BoundInconsistencyError(
            f"lower bound {lower} exceeds feasible value {upper}"
        )
    delta = max(0.0, (upper - lower) / m)
    ratio_a = m * delta / lower if lower != 0 else float("inf")
    return BoundReport(
        lower=lower,
        upper=upper,
        gap_delta=delta,
        gap_ratio_a=ratio_a,
        gap_ratio_d=math.exp(delta),
        relaxation_kind=relaxation_kind,
        iterations=iterations,
        fw_gap=fw_gap,
    )
