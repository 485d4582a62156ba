"""Directed environment graphs, Boolean path encodings, and path validation.

A path is stored three ways at once: the visit sequence, a Boolean edge
matrix ``z`` (z[i, j] = 1 iff the path traverses edge i->j), and a vector of
visit-order variables ``u`` used by the cycle check. ``validate_path`` is the
single gatekeeper every planner output must pass.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBudgetError

# slack applied to every budget comparison so float accumulation never flips
# a feasible path to infeasible
BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class EnvGraph:
    """Directed graph over planar nodes with positive edge weights.

    Treated as immutable after construction; the arrays are never written to.
    """

    coords: np.ndarray  # (n, 2) node positions
    edges: tuple[tuple[int, int], ...]  # directed edge list
    weights: np.ndarray  # (len(edges),) positive weights
    start: int
    goal: int
    prediction_points: np.ndarray  # (m, 2) locations scored by the belief

    def __post_init__(self) -> None:
        n = self.coords.shape[0]
        if not (0 <= self.start < n and 0 <= self.goal < n):
            raise ValueError("start/goal must be node indices")
        if self.start == self.goal:
            raise ValueError("start and goal must differ")
        if np.any(self.weights <= 0):
            raise ValueError("edge weights must be positive")
        if len(self.edges) != len(self.weights):
            raise ValueError("edge/weight length mismatch")
        out: list[list[int]] = [[] for _ in range(n)]
        inc: list[list[int]] = [[] for _ in range(n)]
        wmap: dict[tuple[int, int], float] = {}
        for (i, j), w in zip(self.edges, self.weights):
            if i == j:
                raise ValueError("self-loops are not allowed")
            if (i, j) in wmap:
                raise ValueError(f"duplicate edge {(i, j)}")
            out[i].append(j)
            inc[j].append(i)
            wmap[(i, j)] = float(w)
        object.__setattr__(self, "_out", tuple(tuple(sorted(o)) for o in out))
        object.__setattr__(self, "_in", tuple(tuple(sorted(i)) for i in inc))
        object.__setattr__(self, "_wmap", wmap)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def out_neighbors(self, i: int) -> tuple[int, ...]:
        return self._out[i]  # type: ignore[attr-defined]

    def in_neighbors(self, j: int) -> tuple[int, ...]:
        return self._in[j]  # type: ignore[attr-defined]

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self._wmap  # type: ignore[attr-defined]

    def weight(self, i: int, j: int) -> float:
        try:
            return self._wmap[(i, j)]  # type: ignore[attr-defined]
        except KeyError:
            raise KeyError(f"no edge {i}->{j}") from None

    def min_edge_weight(self) -> float:
        return float(np.min(self.weights))


def _grid_prediction_points(side: int, spacing: float, count: int) -> np.ndarray:
    """Scoring locations snapped onto grid nodes, roughly covering the square."""
    n = side * side
    if count >= n:
        cols, rows = np.meshgrid(np.arange(side), np.arange(side))
        pts = np.column_stack([cols.ravel(), rows.ravel()]).astype(float)
        return pts * spacing
    ncols = math.ceil(math.sqrt(count))
    nrows = math.ceil(count / ncols)
    xs = np.unique(np.round(np.linspace(0, side - 1, ncols)).astype(int))
    ys = np.unique(np.round(np.linspace(0, side - 1, nrows)).astype(int))
    pts = [(x, y) for y in ys for x in xs]
    # rounding collisions on tiny grids can leave fewer lattice columns than
    # requested; backfill with unused nodes row-major
    if len(pts) < count:
        have = set(pts)
        for y in range(side):
            for x in range(side):
                if (x, y) not in have:
                    pts.append((x, y))
                    have.add((x, y))
                if len(pts) >= count:
                    break
            if len(pts) >= count:
                break
    arr = np.array(pts[:count], dtype=float)
    return arr * spacing


def build_grid(
    side: int,
    edge_weight_mode: str = "unit",
    *,
    prediction_count: int = 20,
    extent: float | None = None,
) -> EnvGraph:
    """4-connected side x side lattice, start at one corner, goal at the other.

    ``extent`` rescales the lattice to span [0, extent] per axis; by default
    neighboring nodes are unit distance apart. ``edge_weight_mode`` is
    ``"unit"`` (every hop costs 1) or ``"euclidean"`` (hop cost = distance).
    """
    if side < 2:
        raise ValueError("side must be at least 2")
    if edge_weight_mode not in ("unit", "euclidean"):
        raise ValueError(f"unknown edge_weight_mode {edge_weight_mode!r}")
    spacing = 1.0 if extent is None else extent / (side - 1)
    n = side * side
    coords = np.zeros((n, 2))
    for idx in range(n):
        coords[idx] = ((idx % side) * spacing, (idx // side) * spacing)
    edges: list[tuple[int, int]] = []
    for idx in range(n):
        x, y = idx % side, idx // side
        if x + 1 < side:
            edges.append((idx, idx + 1))
            edges.append((idx + 1, idx))
        if y + 1 < side:
            edges.append((idx, idx + side))
            edges.append((idx + side, idx))
    if edge_weight_mode == "unit":
        weights = np.ones(len(edges))
    else:
        weights = np.array(
            [np.linalg.norm(coords[i] - coords[j]) for i, j in edges]
        )
    m = min(prediction_count, n)
    pred = _grid_prediction_points(side, spacing, m)
    return EnvGraph(
        coords=coords,
        edges=tuple(edges),
        weights=weights,
        start=0,
        goal=n - 1,
        prediction_points=pred,
    )


def build_graph(
    coords: np.ndarray,
    edges: list[tuple[int, int]],
    weights: np.ndarray | list[float],
    start: int,
    goal: int,
    prediction_points: np.ndarray | None = None,
) -> EnvGraph:
    """General constructor for non-lattice graphs (chains, imported maps)."""
    coords = np.asarray(coords, dtype=float)
    pred = coords.copy() if prediction_points is None else np.asarray(
        prediction_points, dtype=float
    )
    return EnvGraph(
        coords=coords,
        edges=tuple((int(i), int(j)) for i, j in edges),
        weights=np.asarray(weights, dtype=float),
        start=int(start),
        goal=int(goal),
        prediction_points=pred,
    )


def remove_edges(g: EnvGraph, removed: set[tuple[int, int]]) -> EnvGraph:
    """Copy of ``g`` without the listed directed edges (obstacle carving)."""
    keep = [k for k, e in enumerate(g.edges) if e not in removed]
    return EnvGraph(
        coords=g.coords,
        edges=tuple(g.edges[k] for k in keep),
        weights=g.weights[keep],
        start=g.start,
        goal=g.goal,
        prediction_points=g.prediction_points,
    )


def graph_to_json(g: EnvGraph) -> str:
    payload = {
        "nodes": [
            {"id": i, "x": float(x), "y": float(y)}
            for i, (x, y) in enumerate(g.coords)
        ],
        "edges": [
            {"i": i, "j": j, "w": float(w)}
            for (i, j), w in zip(g.edges, g.weights)
        ],
        "start": g.start,
        "goal": g.goal,
        "prediction_points": [[float(x), float(y)] for x, y in g.prediction_points],
    }
    return json.dumps(payload, indent=2)


def graph_from_json(text: str) -> EnvGraph:
    payload = json.loads(text)
    nodes = sorted(payload["nodes"], key=lambda d: d["id"])
    if [d["id"] for d in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be 0..n-1")
    coords = np.array([[d["x"], d["y"]] for d in nodes], dtype=float)
    edges = [(d["i"], d["j"]) for d in payload["edges"]]
    weights = [d["w"] for d in payload["edges"]]
    pred = np.array(payload["prediction_points"], dtype=float)
    return build_graph(coords, edges, weights, payload["start"], payload["goal"], pred)


@dataclass(frozen=True)
class PathEncoding:
    """A start-to-goal path in sequence, edge-matrix, and visit-order form."""

    sequence: tuple[int, ...]
    z: np.ndarray  # (n, n) 0/1 edge indicators
    u: np.ndarray  # (n,) visit order, start at 1, off-path nodes parked at n
    total_cost: float

    @classmethod
    def from_sequence(cls, g: EnvGraph, sequence: list[int] | tuple[int, ...]) -> PathEncoding:
        seq = tuple(int(v) for v in sequence)
        if len(seq) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(set(seq)) != len(seq):
            raise ValueError("sequence revisits a node; only simple paths encode")
        n = g.n
        z = np.zeros((n, n), dtype=np.int8)
        u = np.full(n, n, dtype=int)
        cost = 0.0
        for t, (i, j) in enumerate(zip(seq, seq[1:])):
            if not g.has_edge(i, j):
                raise ValueError(f"sequence uses missing edge {i}->{j}")
            z[i, j] = 1
            cost += g.weight(i, j)
        for t, v in enumerate(seq):
            u[v] = t + 1
        return cls(sequence=seq, z=z, u=u, total_cost=cost)


def decode_sequence(g: EnvGraph, z: np.ndarray) -> tuple[int, ...]:
    """Recover the visit sequence of a valid path encoding by walking ``z``."""
    seq = [g.start]
    cur = g.start
    for _ in range(g.n):
        nxt = np.flatnonzero(z[cur])
        if nxt.size == 0:
            break
        if nxt.size > 1:
            raise ValueError(f"node {cur} has multiple outgoing selections")
        cur = int(nxt[0])
        seq.append(cur)
        if cur == g.goal:
            return tuple(seq)
    if seq[-1] != g.goal:
        raise ValueError("encoding does not terminate at the goal")
    return tuple(seq)


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    violations: tuple[str, ...]


def validate_path(g: EnvGraph, p: PathEncoding, budget: float) -> ValidationResult:
    """Check a path encoding against every feasibility rule at once.

    Violation labels: ``integrality``, ``budget``, ``start-degree``,
    ``goal-degree``, ``termination``, ``connectivity``, ``subtour``.
    """
    n = g.n
    z = np.asarray(p.z)
    bad: list[str] = []

    onehot = np.isin(z, (0, 1)).all()
    support_ok = True
    for i, j in zip(*np.nonzero(z)):
        if not g.has_edge(int(i), int(j)):
            support_ok = False
            break
    if not (onehot and support_ok and z.shape == (n, n)):
        bad.append("integrality")
        return ValidationResult(False, tuple(bad))

    cost = sum(g.weight(int(i), int(j)) for i, j in zip(*np.nonzero(z)))
    if cost > budget + BUDGET_TOL:
        bad.append("budget")

    out_deg = z.sum(axis=1)
    in_deg = z.sum(axis=0)
    if out_deg[g.start] != 1:
        bad.append("start-degree")
    if in_deg[g.goal] != 1:
        bad.append("goal-degree")
    if in_deg[g.start] != 0 or out_deg[g.goal] != 0:
        bad.append("termination")

    # every intermediate node is either skipped or passed through exactly once
    inner = np.ones(n, dtype=bool)
    inner[[g.start, g.goal]] = False
    flow_out = (z[:, np.arange(n) != g.start]).sum(axis=1)
    flow_in = (z[np.arange(n) != g.goal, :]).sum(axis=0)
    if np.any((flow_out[inner] != flow_in[inner]) | (flow_out[inner] > 1)):
        bad.append("connectivity")

    u = np.asarray(p.u)
    sub_ok = u[g.start] == 1
    others = np.arange(n) != g.start
    sub_ok &= bool(np.all((u[others] >= 2) & (u[others] <= n)))
    if sub_ok:
        for i, j in zip(*np.nonzero(z)):
            if int(i) == g.start or int(j) == g.start:
                continue
            if u[i] + 1 > u[j]:
                sub_ok = False
                break
    if not sub_ok:
        bad.append("subtour")

    return ValidationResult(len(bad) == 0, tuple(bad))


def _dijkstra(
    g: EnvGraph,
    source: int,
    neighbors,
    blocked: frozenset[int] = frozenset(),
) -> np.ndarray:
    dist = np.full(g.n, np.inf)
    if source in blocked:
        return dist
    dist[source] = 0.0
    heap: list[tuple[float, int]] = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, edge_cost in neighbors(v):
            if w in blocked:
                continue
            nd = d + edge_cost
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def shortest_costs_to_goal(
    g: EnvGraph, blocked: frozenset[int] = frozenset()
) -> np.ndarray:
    """Cheapest remaining cost from every node to the goal, +inf if cut off.

    ``blocked`` nodes are treated as removed (used to respect already-visited
    nodes during execution); the goal itself is never blocked.
    """
    eff = frozenset(blocked) - {g.goal}

    def rev_neighbors(v: int):
        for w in g.in_neighbors(v):
            yield w, g.weight(w, v)

    return _dijkstra(g, g.goal, rev_neighbors, eff)


def shortest_costs_from(
    g: EnvGraph, source: int, blocked: frozenset[int] = frozenset()
) -> np.ndarray:
    """Cheapest cost from ``source`` to every node, +inf if unreachable."""

    def fwd_neighbors(v: int):
        for w in g.out_neighbors(v):
            yield w, g.weight(v, w)

    return _dijkstra(g, source, fwd_neighbors, frozenset(blocked) - {source})


def shortest_path(g: EnvGraph, source: int, blocked: frozenset[int] = frozenset()) -> list[int]:
    """One cheapest source-to-goal node sequence avoiding ``blocked``."""
    dist = shortest_costs_to_goal(g, blocked)
    if not np.isfinite(dist[source]):
        raise InfeasibleBudgetError(f"goal unreachable from node {source}")
    seq = [source]
    cur = source
    while cur != g.goal:
        best = None
        for w in g.out_neighbors(cur):
            if w != g.goal and w in blocked:
                continue
            c = g.weight(cur, w) + dist[w]
            if best is None or c < best[0] - 1e-12:
                best = (c, w)
        assert best is not None
        cur = best[1]
        seq.append(cur)
    return seq


@dataclass(frozen=True)
class EnumerationResult:
    paths: tuple[PathEncoding, ...]
    truncated: bool


def enumerate_feasible_paths(
    g: EnvGraph, budget: float, cap: int = 100000
) -> EnumerationResult:
    """All budget-feasible simple start-to-goal paths, lexicographic order.

    Exponential by nature; only sane on small instances. Stops early after
    ``cap`` paths and reports truncation.
    """
    dist_goal = shortest_costs_to_goal(g)
    found: list[PathEncoding] = []
    truncated = False
    seq = [g.start]
    visited = {g.start}

    def extend(cur: int, cost: float) -> bool:
        nonlocal truncated
        if cur == g.goal:
            found.append(PathEncoding.from_sequence(g, seq))
            if len(found) >= cap:
                truncated = True
                return False
            return True
        for j in g.out_neighbors(cur):
            if j in visited:
                continue
            c2 = cost + g.weight(cur, j)
            if c2 + dist_goal[j] > budget + BUDGET_TOL:
                continue
            visited.add(j)
            seq.append(j)
            keep_going = extend(j, c2)
            seq.pop()
            visited.remove(j)
            if not keep_going:
                return False
        return True

    if np.isfinite(dist_goal[g.start]) and dist_goal[g.start] <= budget + BUDGET_TOL:
        extend(g.start, 0.0)
    return EnumerationResult(tuple(found), truncated)


def feasible_moves(
    g: EnvGraph, current: int, visited: set[int], remaining: float
) -> list[tuple[int, float]]:
    """Unvisited next hops that still leave a budget-feasible way to the goal.

    The continuation check routes around every visited node (including the
    current one), so accepting any returned move keeps the partial path
    extendable to a simple start-to-goal path within budget.
    """
    blocked = frozenset(visited | {current})
    dist = shortest_costs_to_goal(g, blocked)
    moves = []
    for j in g.out_neighbors(current):
        if j in visited or j == current:
            continue
        w = g.weight(current, j)
        if w + dist[j] <= remaining + BUDGET_TOL:
            moves.append((j, w))
    return moves


def random_feasible_path(
    g: EnvGraph, budget: float, rng: np.random.Generator
) -> PathEncoding:
    """Uniform-step random walk over feasible moves; always reaches the goal."""
    dist = shortest_costs_to_goal(g)
    if dist[g.start] > budget + BUDGET_TOL:
        raise InfeasibleBudgetError(
            f"budget {budget} below shortest start-to-goal cost {dist[g.start]}"
        )
    seq = [g.start]
    visited = {g.start}
    remaining = budget
    cur = g.start
    while cur != g.goal:
        moves = feasible_moves(g, cur, visited, remaining)
        assert moves, "feasible-move filter must not dead-end"
        j, w = moves[int(rng.integers(len(moves)))]
        seq.append(j)
        visited.add(j)
        remaining -= w
        cur = j
    return PathEncoding.from_sequence(g, seq)
