"""Cost-preserving path polish and multimodal sensor selection."""

import itertools

import numpy as np
import pytest

from conftest import make_instance
from ipplan import (
    DesignWeights,
    Objective,
    PathEncoding,
    assignment_objective,
    eval_design,
    polish,
    random_feasible_path,
    select_sensors,
    shortest_costs_to_goal,
    validate_path,
)


def design_value(g, model, pc, obj, p):
    return eval_design(obj, DesignWeights.from_path(g, p), model, pc)


def test_polish_never_worsens_and_keeps_cost():
    g, model, pc, _ = make_instance(side=5)
    obj = Objective("A")
    budget = 2.0 * float(shortest_costs_to_goal(g)[g.start])
    rng = np.random.default_rng(0)
    for seed in range(10):
        p = random_feasible_path(g, budget, rng)
        before = design_value(g, model, pc, obj, p)
        q = polish(g, model, pc, obj, p, n_swaps=100, rng_seed=seed)
        after = design_value(g, model, pc, obj, q)
        assert after <= before + 1e-12
        assert q.total_cost == pytest.approx(p.total_cost, abs=1e-9)
        assert validate_path(g, q, budget).valid


def test_polish_trajectory_is_monotone():
    # growing the swap budget replays the same accepted prefix, so the
    # value trace over budgets is the per-step acceptance history
    g, model, pc, _ = make_instance(side=5)
    obj = Objective("D")
    budget = 2.0 * float(shortest_costs_to_goal(g)[g.start])
    p = random_feasible_path(g, budget, np.random.default_rng(3))
    values = [
        design_value(g, model, pc, obj, polish(g, model, pc, obj, p, n_swaps=k, rng_seed=11))
        for k in range(0, 40, 4)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_polish_exhaustive_at_least_as_good_as_sampled():
    g, model, pc, _ = make_instance(side=5)
    obj = Objective("A")
    budget = 2.0 * float(shortest_costs_to_goal(g)[g.start])
    p = random_feasible_path(g, budget, np.random.default_rng(8))
    sampled = design_value(g, model, pc, obj, polish(g, model, pc, obj, p, n_swaps=60))
    swept = design_value(
        g, model, pc, obj, polish(g, model, pc, obj, p, n_swaps=60, exhaustive=True)
    )
    assert swept <= sampled + 1e-9


def test_polish_short_path_is_identity():
    g, model, pc, _ = make_instance(side=2)
    p = PathEncoding.from_sequence(g, [0, 1, 3])
    q = polish(g, model, pc, Objective("A"), p)
    assert q.sequence == p.sequence


def test_polish_rejects_ei():
    g, model, pc, _ = make_instance(side=3)
    p = PathEncoding.from_sequence(g, [0, 1, 2, 5, 8])
    with pytest.raises(ValueError):
        polish(g, model, pc, Objective("EI"), p)


def test_select_sensors_validation():
    g, model, pc, _ = make_instance(side=3)
    p = PathEncoding.from_sequence(g, [0, 1, 2, 5, 8])
    with pytest.raises(ValueError):
        select_sensors(g, model, pc, Objective("EI"), p, 2, [0.5, 1.0])
    with pytest.raises(ValueError):
        select_sensors(g, model, pc, Objective("A"), p, 0, [0.5, 1.0])
    with pytest.raises(ValueError):
        select_sensors(g, model, pc, Objective("A"), p, 99, [0.5, 1.0])
    with pytest.raises(ValueError):
        select_sensors(g, model, pc, Objective("A"), p, 2, [1.0, 0.5])  # not ascending
    with pytest.raises(ValueError):
        select_sensors(g, model, pc, Objective("A"), p, 2, [])


def test_select_sensors_certificate_chain():
    g, model, pc, _ = make_instance(side=4)
    p = PathEncoding.from_sequence(g, [0, 1, 2, 3, 7, 11, 15])
    obj = Objective("A")
    ladder = [0.4, 1.0, 2.5]
    for k in (1, 2, 3):
        sa = select_sensors(g, model, pc, obj, p, k, ladder)
        assert sa.k == k and len(sa.chosen) == k
        assert set(sa.chosen).issubset(p.sequence)
        assert set(sa.chosen.values()).issubset(set(ladder))
        # additive certificate sits below both integral scores
        assert sa.relaxed_lower <= sa.rounded_additive_value + 1e-8
        assert sa.rounded_additive_value <= sa.rounded_value + 1e-8
        assert np.all(sa.s >= 0.0) and np.all(sa.s <= 1.0)
        assert sa.s.sum() == pytest.approx(k, abs=1e-6)


def test_select_sensors_bounds_every_assignment():
    g, model, pc, _ = make_instance(side=3)
    p = PathEncoding.from_sequence(g, [0, 1, 4, 5, 8])
    obj = Objective("D")
    ladder = [0.5, 1.5]
    k = 2
    sa = select_sensors(g, model, pc, obj, p, k, ladder)
    for nodes in itertools.combinations(p.sequence, k):
        for grades in itertools.permutations(ladder, k):
            val = assignment_objective(
                g, model, pc, obj, p, dict(zip(nodes, grades)), ladder[-1]
            )
            assert sa.relaxed_lower <= val + 1e-8


def test_assignment_objective_upgrades_help():
    g, model, pc, _ = make_instance(side=3)
    p = PathEncoding.from_sequence(g, [0, 1, 4, 5, 8])
    obj = Objective("A")
    base = assignment_objective(g, model, pc, obj, p, {}, default_sigma=1.0)
    upgraded = assignment_objective(g, model, pc, obj, p, {1: 0.2}, default_sigma=1.0)
    assert upgraded < base
