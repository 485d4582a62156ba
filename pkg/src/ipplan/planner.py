"""Sequential informative planning: budgeted DP guidance plus safe execution.

The planner alternates two moves. A dynamic program scores budget-limited
walks to the goal under per-node rewards and proposes a candidate route; the
executor then advances along it one hop at a time, but only through hops that
keep a simple start-to-goal completion affordable, re-planning after every
``execute_steps`` moves with the updated belief.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .belief import (
    Belief,
    Measurement,
    SensorModel,
    posterior_cov,
    posterior_mean,
    update,
)
from .envgraph import (
    BUDGET_TOL,
    EnvGraph,
    PathEncoding,
    feasible_moves,
    shortest_costs_from,
    shortest_costs_to_goal,
    shortest_path,
)
from .errors import InfeasibleBudgetError
from .numerics import spd_logdet
from .objectives import (
    DesignWeights,
    Objective,
    _phi_from_precision,
    eval_belief,
    eval_design,
    eval_ei,
    eval_ei_prediction,
)


@dataclass(frozen=True)
class PlannerConfig:
    objective: Objective
    budget: float
    execute_steps: int = 1
    budget_resolution: float | None = None
    runtime_cap_s: float = 120.0
    rng_seed: int = 0
    track_ei: bool = False  # log the EI trace even for design objectives

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.execute_steps < 1:
            raise ValueError("execute_steps must be at least 1")


def node_rewards(
    b: Belief, model: SensorModel, obj: Objective, y_min: float | None = None
) -> np.ndarray:
    """Reward of measuring each node once, from the current belief.

    For design objectives the reward is the negated objective value after a
    hypothetical measurement there (rank-one updates, evaluated for all nodes
    at once). For EI it is the expected improvement of the node readout.
    """
    if obj.kind == "EI":
        if y_min is None:
            raise ValueError("EI rewards need the incumbent minimum")
        return eval_ei(b, model, y_min)
    cov = posterior_cov(b)
    s = model.A @ cov
    q = np.einsum("ij,ij->i", s, model.A)
    s2 = model.sigma**2
    if obj.kind == "A":
        reduction = np.einsum("ij,ij->i", s, s) / (s2 + q)
        return -(np.trace(cov) - reduction)
    if obj.kind == "B":
        return np.trace(b.precision) + np.einsum(
            "ij,ij->i", model.A, model.A
        ) / s2
    return spd_logdet(b.precision) + np.log1p(q / s2)


# ---------------------------------------------------------------------------
# budgeted walk DP


def _auto_resolution(g: EnvGraph, budget: float) -> tuple[float, bool]:
    """Bucket width for the DP and whether it models costs exactly."""
    lo = g.min_edge_weight()
    mult = g.weights / lo
    if np.allclose(mult, np.round(mult), rtol=0.0, atol=1e-9):
        return lo, True
    return budget / 1000.0, False


def _make_buckets(g: EnvGraph, budget: float, resolution: float | None) -> "_EdgeBuckets":
    if resolution is None:
        resolution, exact = _auto_resolution(g, budget)
    else:
        mult = g.weights / resolution
        exact = bool(np.allclose(mult, np.round(mult), rtol=0.0, atol=1e-9))
    return _EdgeBuckets(g, resolution, exact)


class _EdgeBuckets:
    """Edges grouped by integer step cost, laid out for segment maxima."""

    def __init__(self, g: EnvGraph, resolution: float, exact: bool) -> None:
        self.resolution = resolution
        self.exact = exact
        src = np.array([e[0] for e in g.edges], dtype=int)
        dst = np.array([e[1] for e in g.edges], dtype=int)
        steps = np.maximum(
            1, np.ceil(g.weights / resolution - 1e-9).astype(int)
        )
        self.step_of: dict[tuple[int, int], int] = {
            e: int(c) for e, c in zip(g.edges, steps)
        }
        self.groups: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = []
        for c in np.unique(steps):
            mask = steps == c
            order = np.argsort(src[mask], kind="stable")
            s_sorted = src[mask][order]
            d_sorted = dst[mask][order]
            uniq, starts = np.unique(s_sorted, return_index=True)
            self.groups.append((int(c), uniq, starts, d_sorted))


@dataclass(frozen=True)
class ValueTable:
    """DP values: table[i, k] is the best reward of a walk i -> goal using at
    most k budget buckets, counting every node visit (revisits included) and
    stopping on first goal arrival."""

    table: np.ndarray
    resolution: float
    budget: float

    def buckets(self, remaining: float) -> int:
        return max(0, int(math.floor(remaining / self.resolution + 1e-9)))


def dp_orienteering(
    g: EnvGraph,
    rewards: np.ndarray,
    budget: float,
    resolution: float | None = None,
    source: int | None = None,
    require_exact: bool = False,
    buckets: _EdgeBuckets | None = None,
) -> tuple[ValueTable, list[int]]:
    """Solve the reward-collecting walk recursion and extract one best walk.

    Edge costs are rounded up to whole buckets, so any walk the table deems
    affordable really is. ``require_exact`` refuses to run when rounding
    would change which walks are affordable (needed when the table backs a
    bound rather than a heuristic).
    """
    rewards = np.asarray(rewards, dtype=float)
    if buckets is None:
        buckets = _make_buckets(g, budget, resolution)
    if require_exact and not buckets.exact:
        raise ValueError(
            "edge weights are incommensurable with the bucket resolution; "
            "walk-based bounding needs exact bucket costs"
        )
    src = g.start if source is None else source
    kmax = max(0, int(math.floor(budget / buckets.resolution + 1e-9)))
    n = g.n
    table = np.full((n, kmax + 1), -np.inf)
    table[g.goal, :] = rewards[g.goal]
    for k in range(1, kmax + 1):
        acc = np.full(n, -np.inf)
        for c, uniq, starts, dst_sorted in buckets.groups:
            if c > k:
                continue
            vals = table[dst_sorted, k - c]
            acc[uniq] = np.maximum(acc[uniq], np.maximum.reduceat(vals, starts))
        col = rewards + acc
        col[g.goal] = rewards[g.goal]
        table[:, k] = col
    vt = ValueTable(table=table, resolution=buckets.resolution, budget=budget)
    if not np.isfinite(table[src, kmax]):
        raise InfeasibleBudgetError(
            f"no walk from node {src} reaches the goal within budget {budget}"
        )
    walk = [src]
    k = kmax
    cur = src
    while cur != g.goal:
        best_j, best_c, best_v = -1, 0, -np.inf
        for j in g.out_neighbors(cur):
            c = buckets.step_of[(cur, j)]
            if c <= k and table[j, k - c] > best_v:
                best_j, best_c, best_v = j, c, table[j, k - c]
        assert best_j >= 0, "finite table entries always have a successor"
        walk.append(best_j)
        cur = best_j
        k -= best_c
    return vt, walk


class _EdgeDpPlan:
    """Backtrack-free refinement of the walk DP, keyed by arrival edge.

    The node-state recursion happily plans i -> j -> i bounces to re-collect
    a reward, and those hops are exactly what the simple-path executor must
    refuse, so candidates built from it strand budget. Conditioning the state
    on the arrival edge forbids immediate backtracking while still covering
    every simple path, which keeps candidates realizable.
    """

    def __init__(self, g: EnvGraph, buckets: _EdgeBuckets) -> None:
        self.g = g
        self.buckets = buckets
        self.eid = {e: idx for idx, e in enumerate(g.edges)}
        self.dst = np.array([e[1] for e in g.edges], dtype=int)
        self.steps = np.array(
            [buckets.step_of[e] for e in g.edges], dtype=int
        )
        # successor edge lists honor ascending-destination tie order
        self.succ: list[list[int]] = []
        for i, j in g.edges:
            self.succ.append(
                [self.eid[(j, t)] for t in g.out_neighbors(j) if t != i]
            )
        pred_ids: list[int] = []
        succ_ids: list[int] = []
        for e, lst in enumerate(self.succ):
            pred_ids.extend([e] * len(lst))
            succ_ids.extend(lst)
        pred_arr = np.array(pred_ids, dtype=int)
        succ_arr = np.array(succ_ids, dtype=int)
        costs = self.steps[succ_arr]
        self.groups: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = []
        for c in np.unique(costs):
            mask = costs == c
            order = np.argsort(pred_arr[mask], kind="stable")
            p_sorted = pred_arr[mask][order]
            s_sorted = succ_arr[mask][order]
            uniq, starts = np.unique(p_sorted, return_index=True)
            self.groups.append((int(c), uniq, starts, s_sorted))

    def solve(
        self,
        rewards: np.ndarray,
        budget: float,
        forbidden: np.ndarray | None = None,
    ) -> tuple[np.ndarray, int]:
        """Value table over arrival edges with that many budget buckets left.

        Rows whose destination is forbidden stay at -inf, so every walk
        extracted from the table avoids those nodes (the goal is never
        maskable).
        """
        g = self.g
        kmax = max(0, int(math.floor(budget / self.buckets.resolution + 1e-9)))
        n_edges = len(g.edges)
        w = np.full((n_edges, kmax + 1), -np.inf)
        goal_rows = self.dst == g.goal
        blocked_rows = (
            None if forbidden is None else forbidden[self.dst] & ~goal_rows
        )
        w[goal_rows, :] = rewards[g.goal]
        for k in range(1, kmax + 1):
            cand = np.full(n_edges, -np.inf)
            for c, uniq, starts, succ_sorted in self.groups:
                if c > k:
                    continue
                vals = w[succ_sorted, k - c]
                cand[uniq] = np.maximum(
                    cand[uniq], np.maximum.reduceat(vals, starts)
                )
            col = rewards[self.dst] + cand
            col[goal_rows] = rewards[g.goal]
            if blocked_rows is not None:
                col[blocked_rows] = -np.inf
            w[:, k] = col
        return w, kmax

    def walk_from(self, w: np.ndarray, e_first: int, k_left: int) -> list[int]:
        """Follow table argmaxes from an entry edge down to the goal."""
        e_cur, k = e_first, k_left
        walk = [int(self.dst[e_cur])]
        while walk[-1] != self.g.goal:
            pick, pick_k, val = -1, 0, -np.inf
            for e in self.succ[e_cur]:
                c = self.steps[e]
                if c <= k and w[e, k - c] > val:
                    pick, pick_k, val = e, k - c, w[e, k - c]
            assert pick >= 0, "finite edge values always extend to the goal"
            e_cur, k = pick, pick_k
            walk.append(int(self.dst[e_cur]))
        return walk


# ---------------------------------------------------------------------------
# execution


@dataclass
class _Shared:
    """Belief state common to every agent planning on the same field."""

    belief: Belief
    y_min: float


@dataclass
class _Run:
    g: EnvGraph
    model: SensorModel
    cfg: PlannerConfig
    world: object  # callable node -> reading
    shared: _Shared
    buckets: _EdgeBuckets
    edge_plan: _EdgeDpPlan
    budget: float
    current: int = 0
    remaining: float = 0.0
    seq: list[int] = field(default_factory=list)
    visited: set[int] = field(default_factory=set)
    measured: list[Measurement] = field(default_factory=list)
    replans: int = 0
    truncated: bool = False
    done: bool = False
    ei_trace: list[float] = field(default_factory=list)
    plan_tail: list[int] | None = None


def _zero_world(_: int) -> float:
    return 0.0


def _new_shared(model: SensorModel, prior: Belief) -> _Shared:
    # incumbent minimum starts at the smallest prior readout mean
    y0 = float(np.min(model.A @ prior.prior_mean))
    return _Shared(belief=prior, y_min=y0)


def _start_run(
    g: EnvGraph,
    model: SensorModel,
    cfg: PlannerConfig,
    world,
    shared: _Shared,
    budget: float | None = None,
) -> _Run:
    budget = cfg.budget if budget is None else budget
    dist = shortest_costs_to_goal(g)
    if dist[g.start] > budget + BUDGET_TOL:
        raise InfeasibleBudgetError(
            f"budget {budget} below shortest start-to-goal cost {dist[g.start]}"
        )
    buckets = _make_buckets(g, budget, cfg.budget_resolution)
    run = _Run(
        g=g,
        model=model,
        cfg=cfg,
        world=world or _zero_world,
        shared=shared,
        buckets=buckets,
        edge_plan=_EdgeDpPlan(g, buckets),
        budget=budget,
        current=g.start,
        remaining=budget,
        seq=[g.start],
        visited={g.start},
    )
    _measure(run, g.start)
    return run


def _measure(run: _Run, node: int) -> None:
    y = float(run.world(node))
    run.shared.belief = update(run.shared.belief, node, y, run.model)
    run.shared.y_min = min(run.shared.y_min, y)
    run.measured.append(run.shared.belief.history[-1])
    if run.cfg.objective.kind == "EI" or run.cfg.track_ei:
        net = float(
            np.sum(eval_ei_prediction(run.shared.belief, run.shared.y_min))
        ) / run.g.n
        run.ei_trace.append(net)


def _advance(run: _Run, j: int) -> None:
    run.remaining -= run.g.weight(run.current, j)
    run.current = j
    run.seq.append(j)
    run.visited.add(j)
    _measure(run, j)
    if j == run.g.goal:
        run.done = True


def _gains(run: _Run) -> np.ndarray:
    obj = run.cfg.objective
    r = node_rewards(run.shared.belief, run.model, obj, run.shared.y_min)
    if obj.is_design:
        r = r + eval_belief(obj, run.shared.belief)
        r = np.maximum(r, 0.0)  # marginal gains; clamp float dust
    out = r.copy()
    out[list(run.visited)] = 0.0
    return out


def _fantasy_belief(b: Belief, nodes: list[int], model: SensorModel) -> Belief:
    """Belief after measuring nodes at exactly their predicted values.

    Mean-valued readings leave the posterior mean untouched while the
    precision still gains every rank-one term, so the result is order-free
    and needs no sampled observations. Only meaningful on beliefs that
    already carry history (the no-history accessors shortcut to the prior).
    """
    rows = model.A[nodes] / model.sigma[nodes, None]
    precision = b.precision + rows.T @ rows
    info = precision @ (posterior_mean(b) - b.prior_mean)
    return replace(b, precision=precision, info=info)


def _plan_score(run: _Run, plan: list[int]) -> float:
    """Rank a candidate continuation (higher is better).

    Design objectives admit an exact joint evaluation: the posterior after
    measuring a node set is order-free, so one batched precision update gives
    the true final value. The goal is left out to match how reported design
    values weight a path (the goal has no outgoing edge, hence weight zero).
    EI is forecast the same way under mean-valued readings, which keep the
    posterior means and the incumbent fixed while variances tighten.
    """
    if run.cfg.objective.is_design:
        fresh = [
            v
            for v in dict.fromkeys(plan)
            if v not in run.visited and v != run.g.goal
        ]
        if not fresh:
            return -eval_belief(run.cfg.objective, run.shared.belief)
        rows = run.model.A[fresh] / run.model.sigma[fresh, None]
        precision = run.shared.belief.precision + rows.T @ rows
        return -_phi_from_precision(run.cfg.objective.kind, precision)
    fresh = [v for v in dict.fromkeys(plan) if v not in run.visited]
    fb = run.shared.belief
    if fresh:
        fb = _fantasy_belief(fb, fresh, run.model)
    return -float(np.sum(eval_ei_prediction(fb, run.shared.y_min)))


def _realize(run: _Run, walk: list[int]) -> list[int] | None:
    """Clip a DP walk to a budget-feasible simple continuation.

    Follows the walk until it would revisit a node, then finishes along the
    cheapest clean route to the goal. Returns None when no such finish fits
    the remaining budget (the candidate is simply dropped).
    """
    g = run.g
    cur, rem = run.current, run.remaining
    seen = set(run.visited)
    out: list[int] = []
    for v in walk:
        if v in seen:
            try:
                tail = shortest_path(g, cur, frozenset(seen) - {cur})
            except InfeasibleBudgetError:
                return None
            cost = sum(g.weight(a, b) for a, b in zip(tail, tail[1:]))
            if cost > rem + BUDGET_TOL:
                return None
            return out + tail[1:]
        rem -= g.weight(cur, v)
        seen.add(v)
        out.append(v)
        cur = v
    assert rem >= -BUDGET_TOL, "bucketized costs never overshoot the budget"
    return out


def _virtual_greedy(run: _Run) -> list[int]:
    """Forecast the trajectory the one-step baseline would walk from here.

    Design rewards depend only on which nodes get measured, never on the
    readings, so the hop rule of _greedy_step replays exactly. EI rewards do
    depend on readings; substituting mean-valued fantasies makes this a
    plausible candidate rather than a faithful replay.
    """
    obj = run.cfg.objective
    cur, rem = run.current, run.remaining
    seen = set(run.visited)
    fb = run.shared.belief
    out: list[int] = []
    while cur != run.g.goal:
        r = node_rewards(fb, run.model, obj, run.shared.y_min)
        moves = feasible_moves(run.g, cur, seen, rem)
        assert moves, "move filter keeps a goal completion affordable"
        best_j, best_w, best_v = moves[0][0], moves[0][1], -np.inf
        for j, w in moves:
            if r[j] > best_v:
                best_j, best_w, best_v = j, w, r[j]
        fb = _fantasy_belief(fb, [best_j], run.model)
        seen.add(best_j)
        rem -= best_w
        out.append(best_j)
        cur = best_j
    return out


def _route_between(
    g: EnvGraph, source: int, target: int, blocked: frozenset[int]
) -> list[int] | None:
    """Cheapest source-to-target node sequence avoiding blocked, else None."""
    dist = shortest_costs_from(g, source, blocked)
    if not np.isfinite(dist[target]):
        return None
    seq = [target]
    cur = target
    while cur != source:
        best = None
        for w in g.in_neighbors(cur):
            if w != source and w in blocked:
                continue
            if not np.isfinite(dist[w]):
                continue
            if abs(dist[w] + g.weight(w, cur) - dist[cur]) > 1e-9:
                continue
            if best is None or dist[w] < best[0]:
                best = (dist[w], w)
        assert best is not None, "every shortest distance has a predecessor"
        cur = best[1]
        seq.append(cur)
    seq.reverse()
    return seq


def _tour_plan(run: _Run, gains: np.ndarray) -> list[int] | None:
    """String the dominant-reward nodes into one budget-feasible tour.

    The walk recursion recounts rewards when it laps a hot spot, so on fields
    where a few far-apart nodes carry most of the value it burns budget
    circling instead of covering. This candidate goes the other way: pick the
    near-top nodes, order them by cheapest insertion on clean shortest-path
    distances, then thread them self-avoidingly, keeping every prefix one
    clean route away from the goal so the result is always feasible.
    """
    g = run.g
    top = float(gains.max()) if gains.size else 0.0
    if top <= 0.0:
        return None
    cand = np.nonzero(gains >= 0.8 * top)[0]
    targets = [
        int(v)
        for v in cand
        if int(v) not in run.visited and int(v) != g.goal
    ]
    if not targets:
        return None
    if len(targets) > 40:
        order = np.argsort(gains[targets])[::-1]
        targets = [targets[i] for i in order[:40]]

    outside = frozenset(run.visited) - {run.current}
    anchors = [run.current, g.goal, *targets]
    dist = {a: shortest_costs_from(g, a, outside - {a}) for a in anchors}
    tour = [run.current, g.goal]
    cost = float(dist[run.current][g.goal])
    pool = set(targets)
    while pool:
        best = None  # (extra cost, node, insertion slot)
        for t in pool:
            for i in range(len(tour) - 1):
                a, b = tour[i], tour[i + 1]
                d = dist[a][t] + dist[t][b] - dist[a][b]
                if not np.isfinite(d):
                    continue
                if best is None or d < best[0] - 1e-12:
                    best = (float(d), t, i + 1)
        if best is None or cost + best[0] > run.remaining + BUDGET_TOL:
            break
        cost += best[0]
        tour.insert(best[2], best[1])
        pool.remove(best[1])
    if len(tour) == 2:
        return None

    # thread the stops in order, detouring around everything already walked;
    # a stop is committed only if a clean escape to the goal still fits
    seen = set(run.visited)
    out: list[int] = []
    cur, rem = run.current, run.remaining
    for t in tour[1:-1]:
        if t in seen:
            continue
        seg = _route_between(g, cur, t, frozenset(seen) - {cur})
        if seg is None:
            continue
        seg_cost = sum(g.weight(a, b) for a, b in zip(seg, seg[1:]))
        after = (seen | set(seg)) - {t}
        escape = shortest_costs_to_goal(g, frozenset(after))[t]
        if seg_cost + escape > rem + BUDGET_TOL:
            continue
        rem -= seg_cost
        seen.update(seg)
        out.extend(seg[1:])
        cur = t
    try:
        tail = shortest_path(g, cur, frozenset(seen) - {cur})
    except InfeasibleBudgetError:
        return None
    tail_cost = sum(g.weight(a, b) for a, b in zip(tail, tail[1:]))
    if tail_cost > rem + BUDGET_TOL:
        return None
    return out + tail[1:]


def _aspo_step(run: _Run) -> None:
    """One replanning round: refresh rewards, propose routes, walk the best.

    The budgeted recursion scores walks, and a walk can lap a cluster to
    recount rewards that a simple path collects once, so its table optimum is
    biased. Instead of trusting it, build a candidate pool of feasible simple
    continuations (one realized DP walk per opening hop, a tour threading the
    dominant rewards, the previously chosen plan, and the forecast greedy
    trajectory), score each exactly, and execute the first hops of the
    winner. Keeping the old plan in the pool
    makes the chosen score non-decreasing between rounds, and seeding the
    pool with the greedy forecast means the final design value never loses to
    the one-step baseline.
    """
    gains = _gains(run)
    taken = np.zeros(run.g.n, dtype=bool)
    taken[list(run.visited)] = True
    taken[run.current] = False
    run.replans += 1
    moves = feasible_moves(run.g, run.current, run.visited, run.remaining)
    assert moves, "move filter keeps a goal completion affordable"
    cands: list[list[int]] = []
    if run.plan_tail:
        cands.append(run.plan_tail)
    # two reward landscapes: the full one, and a sparsified one that keeps
    # only dominant nodes so routes beeline between far-apart targets instead
    # of wiggling through their halos
    reward_sets = [gains]
    if gains.max() > 0.0:
        sparse = np.where(gains >= 0.5 * gains.max(), gains, 0.0)
        if np.count_nonzero(sparse) < np.count_nonzero(gains):
            reward_sets.append(sparse)
    for rewards in reward_sets:
        w_table, kmax = run.edge_plan.solve(
            rewards, run.remaining, forbidden=taken
        )
        for j, _ in moves:
            e = run.edge_plan.eid[(run.current, j)]
            c = run.edge_plan.steps[e]
            if c > kmax or not np.isfinite(w_table[e, kmax - c]):
                continue
            realized = _realize(
                run, run.edge_plan.walk_from(w_table, e, kmax - c)
            )
            if realized is not None:
                cands.append(realized)
    tour = _tour_plan(run, gains)
    if tour is not None:
        cands.append(tour)
    cands.append(_virtual_greedy(run))
    best, best_score = None, -np.inf
    for plan in cands:
        score = _plan_score(run, plan)
        if score > best_score:
            best, best_score = plan, score
    for v in best[: run.cfg.execute_steps]:
        _advance(run, v)
        if run.done:
            break
    run.plan_tail = best[run.cfg.execute_steps :] or None


def _random_step(run: _Run, rng: np.random.Generator) -> None:
    moves = feasible_moves(run.g, run.current, run.visited, run.remaining)
    assert moves
    j, _ = moves[int(rng.integers(len(moves)))]
    _advance(run, j)


def _greedy_step(run: _Run) -> None:
    obj = run.cfg.objective
    r = node_rewards(run.shared.belief, run.model, obj, run.shared.y_min)
    moves = feasible_moves(run.g, run.current, run.visited, run.remaining)
    assert moves
    best_j, best_v = moves[0][0], -np.inf
    for j, _ in moves:
        if r[j] > best_v:
            best_j, best_v = j, r[j]
    _advance(run, best_j)


def _finish_shortest(run: _Run) -> None:
    """Budget-truncation fallback: head straight for the goal, still measuring."""
    blocked = frozenset(run.visited) - {run.current}
    tail = shortest_path(run.g, run.current, blocked)
    for j in tail[1:]:
        _advance(run, j)
    run.truncated = True


@dataclass(frozen=True)
class SolveReport:
    """Everything a single planning episode produced."""

    method: str
    objective: Objective
    path: PathEncoding
    objective_value: float
    budget: float
    budget_spent: float
    runtime_s: float
    truncated: bool
    seed: int
    replans: int
    measurements: tuple[Measurement, ...]
    ei_trace: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "objective": self.objective.kind,
            "sequence": list(self.path.sequence),
            "objective_value": self.objective_value,
            "budget": self.budget,
            "budget_spent": self.budget_spent,
            "runtime_s": self.runtime_s,
            "truncated": self.truncated,
            "seed": self.seed,
            "replans": self.replans,
            "measurements": [
                {"node": m.node, "value": m.value, "noise_std": m.noise_std}
                for m in self.measurements
            ],
            "ei_trace": list(self.ei_trace),
        }


def _final_report(run: _Run, method: str, t0: float) -> SolveReport:
    g, model, cfg = run.g, run.model, run.cfg
    p = PathEncoding.from_sequence(g, run.seq)
    if cfg.objective.is_design:
        value = eval_design(
            cfg.objective,
            DesignWeights.from_path(g, p),
            model,
            run.shared.belief.prior_cov,
            prior_precision=run.shared.belief.prior_precision,
        )
    else:
        value = float(
            np.sum(eval_ei_prediction(run.shared.belief, run.shared.y_min))
        ) / g.n
    return SolveReport(
        method=method,
        objective=cfg.objective,
        path=p,
        objective_value=value,
        budget=run.budget,
        budget_spent=run.budget - run.remaining,
        runtime_s=time.perf_counter() - t0,
        truncated=run.truncated,
        seed=cfg.rng_seed,
        replans=run.replans,
        measurements=tuple(run.measured),
        ei_trace=tuple(run.ei_trace),
    )


def _episode(g, model, prior, cfg, world, method: str, stepper) -> SolveReport:
    t0 = time.perf_counter()
    shared = _new_shared(model, prior)
    run = _start_run(g, model, cfg, world, shared)
    while not run.done:
        if time.perf_counter() - t0 > cfg.runtime_cap_s:
            _finish_shortest(run)
            break
        stepper(run)
    return _final_report(run, method, t0)


def aspo_plan(
    g: EnvGraph,
    model: SensorModel,
    prior: Belief,
    cfg: PlannerConfig,
    world=None,
) -> SolveReport:
    """Receding-horizon informative planner (DP candidate, safe execution)."""
    return _episode(g, model, prior, cfg, world, "aspo", _aspo_step)


def random_baseline(
    g: EnvGraph,
    model: SensorModel,
    prior: Belief,
    cfg: PlannerConfig,
    world=None,
) -> SolveReport:
    """Uniform random feasible walker; the weakest sensible baseline."""
    rng = np.random.default_rng(cfg.rng_seed)
    return _episode(
        g, model, prior, cfg, world, "random", lambda run: _random_step(run, rng)
    )


def greedy_baseline(
    g: EnvGraph,
    model: SensorModel,
    prior: Belief,
    cfg: PlannerConfig,
    world=None,
) -> SolveReport:
    """One-step lookahead: always hop to the most rewarding feasible neighbor."""
    return _episode(g, model, prior, cfg, world, "greedy", _greedy_step)
