"""Several agents planning on one shared belief, round-robin interleaved.

Coordination is implicit: every measurement any agent takes lands in the
common belief before the next agent replans, so diminishing returns steer
agents away from each other's coverage without explicit partitioning.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .belief import Belief, SensorModel
from .envgraph import EnvGraph
from .objectives import Objective, design_precision, eval_ei_prediction, _phi_from_precision
from .planner import (
    PlannerConfig,
    SolveReport,
    _aspo_step,
    _final_report,
    _finish_shortest,
    _new_shared,
    _start_run,
)


@dataclass(frozen=True)
class FleetReport:
    """Per-agent episodes plus the jointly achieved uncertainty."""

    agent_reports: tuple[SolveReport, ...]
    joint_value: float
    objective: Objective
    truncated: bool

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.kind,
            "joint_value": self.joint_value,
            "truncated": self.truncated,
            "agents": [r.to_dict() for r in self.agent_reports],
        }


def plan_fleet(
    g: EnvGraph,
    model: SensorModel,
    prior: Belief,
    cfg: PlannerConfig,
    n_agents: int,
    world=None,
    budgets: list[float] | None = None,
) -> FleetReport:
    """Run ``n_agents`` receding-horizon planners against one belief.

    Agents all start at the graph start and step in round-robin order, each
    executing ``cfg.execute_steps`` hops per turn. With one agent this is
    exactly the single-agent planner. ``budgets`` overrides the common
    budget per agent.
    """
    if n_agents < 1:
        raise ValueError("need at least one agent")
    if budgets is not None and len(budgets) != n_agents:
        raise ValueError("one budget per agent")
    t0 = time.perf_counter()
    shared = _new_shared(model, prior)
    runs = [
        _start_run(
            g,
            model,
            cfg,
            world,
            shared,
            budget=None if budgets is None else budgets[i],
        )
        for i in range(n_agents)
    ]
    while not all(run.done for run in runs):
        if time.perf_counter() - t0 > cfg.runtime_cap_s:
            for run in runs:
                if not run.done:
                    _finish_shortest(run)
            break
        for run in runs:
            if not run.done:
                _aspo_step(run)
    reports = tuple(_final_report(run, "aspo", t0) for run in runs)

    if cfg.objective.is_design:
        joint_w = np.zeros(g.n)
        for rep in reports:
            joint_w += np.asarray(rep.path.z, dtype=float).sum(axis=1)
        prec = design_precision(joint_w, model, prior.prior_precision)
        joint = _phi_from_precision(cfg.objective.kind, prec)
    else:
        joint = float(
            np.sum(eval_ei_prediction(shared.belief, shared.y_min))
        ) / g.n
    return FleetReport(
        agent_reports=reports,
        joint_value=joint,
        objective=cfg.objective,
        truncated=any(r.truncated for r in reports),
    )
