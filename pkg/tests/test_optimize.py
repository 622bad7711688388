import itertools
import math

import numpy as np
import pytest

from celltx.network import (
    PowerAssignment,
    PowerDomain,
    evaluate,
    initial_assignment,
)
from celltx.optimize import (
    GaConfig,
    count_changed,
    global_reconfigure,
    local_reconfigure,
    objective,
    sga_optimize,
)

from conftest import cell, honeycomb_with_ues, make_scenario, ue


def toy_scenario(n_cells=2, n_ues=6, n_levels=4, seed=0):
    """Small random instance with a narrow power grid for exhaustive search."""
    rng = np.random.default_rng(seed)
    domain = PowerDomain(46.0 - 2.0 * (n_levels - 1), 46.0, 2.0)
    cells = [
        cell(
            i,
            rng.uniform(500, 9500),
            rng.uniform(500, 9500),
            az=float(rng.integers(0, 12) * 30),
            power=float(rng.choice(domain.levels())),
        )
        for i in range(n_cells)
    ]
    ues = [ue(j, rng.uniform(500, 9500), rng.uniform(500, 9500)) for j in range(n_ues)]
    return make_scenario(cells, ues=ues, area=(10000.0, 10000.0), domain=domain)


def exhaustive_optimum(s):
    """Brute-force best objective over every grid assignment."""
    levels = s.power_domain.levels()
    best = -math.inf
    for combo in itertools.product(levels, repeat=len(s.cells)):
        a = PowerAssignment(dict(zip(s.cell_ids, map(float, combo))))
        best = max(best, objective(s, a))
    return best


def test_objective_delegates_to_evaluate():
    s = toy_scenario()
    a = initial_assignment(s)
    assert objective(s, a) == evaluate(s, a).total_throughput_bps


def test_objective_empty_ue_set_is_zero():
    s = make_scenario([cell(0, 100.0, 100.0, power=44.0)])
    assert objective(s, initial_assignment(s)) == 0.0


def test_objective_two_cell_two_level_bruteforce():
    s = toy_scenario(n_cells=2, n_levels=2, seed=3)
    levels = s.power_domain.levels()
    for combo in itertools.product(levels, repeat=2):
        a = PowerAssignment({0: float(combo[0]), 1: float(combo[1])})
        res = evaluate(s, a)
        assert objective(s, a) == res.total_throughput_bps
        assert res.total_throughput_bps == pytest.approx(
            sum(r.throughput_bps for r in res.ue_records), rel=1e-12
        )


def test_sga_empty_free_set_returns_init():
    s = toy_scenario(seed=1)
    init = initial_assignment(s)
    out = sga_optimize(s, frozenset(), init, GaConfig(seed=5))
    assert out.best_assignment == init
    assert out.objective_trace == (out.best_objective_bps,)
    assert out.evaluations == 1
    assert out.best_objective_bps == pytest.approx(objective(s, init), rel=1e-9)


def test_sga_deterministic_given_seed():
    s = toy_scenario(n_cells=3, seed=2)
    init = initial_assignment(s)
    cfg = GaConfig(population_size=8, generations=12, seed=77)
    a = sga_optimize(s, s.cell_ids, init, cfg)
    b = sga_optimize(s, s.cell_ids, init, cfg)
    assert a.best_assignment == b.best_assignment
    assert a.objective_trace == b.objective_trace
    assert a.evaluations == b.evaluations


def test_sga_finds_exhaustive_optimum_on_small_grid():
    s = toy_scenario(n_cells=2, n_levels=4, seed=4)
    opt = exhaustive_optimum(s)
    out = sga_optimize(
        s, s.cell_ids, initial_assignment(s), GaConfig(population_size=16, generations=50, seed=0)
    )
    assert out.best_objective_bps == pytest.approx(opt, rel=1e-9)


def test_sga_trace_nondecreasing_and_above_init():
    for seed in range(5):
        s = toy_scenario(n_cells=4, n_ues=8, seed=seed)
        init = initial_assignment(s)
        out = sga_optimize(s, s.cell_ids, init, GaConfig(population_size=8, generations=15, seed=seed))
        assert all(b >= a for a, b in zip(out.objective_trace, out.objective_trace[1:]))
        assert out.best_objective_bps == out.objective_trace[-1]
        assert out.best_objective_bps >= objective(s, init) * (1 - 1e-9)


def test_sga_frozen_cells_never_move():
    s = toy_scenario(n_cells=4, n_ues=8, seed=9)
    baseline = initial_assignment(s)
    free = frozenset({1, 3})
    seen = []
    out = local_reconfigure(
        s, free, baseline, GaConfig(population_size=6, generations=8, seed=1),
        candidate_observer=seen.append,
    )
    assert len(seen) == out.evaluations
    for candidate in seen:
        for cid in s.cell_ids:
            if cid not in free:
                assert candidate[cid] == baseline[cid]
    for cid in s.cell_ids:
        if cid not in free:
            assert out.best_assignment[cid] == baseline[cid]


def test_sga_rejects_unknown_free_cells():
    s = toy_scenario()
    with pytest.raises(ValueError):
        sga_optimize(s, {99}, initial_assignment(s), GaConfig())


def test_sga_genome_levels_stay_on_grid():
    s = toy_scenario(n_cells=3, seed=6)
    out = sga_optimize(
        s, s.cell_ids, initial_assignment(s), GaConfig(population_size=6, generations=10, seed=3)
    )
    for cid, power in out.best_assignment.items():
        s.power_domain.level_of(power)  # raises if off-grid


def test_global_reconfigure_single_cell_matches_level_sweep():
    s = make_scenario(
        [cell(0, 5000.0, 5000.0, az=0.0, power=44.0)],
        ues=[ue(i, 5000.0 + 400 * (i + 1), 5000.0) for i in range(4)],
    )
    sweep_best = max(
        objective(s, PowerAssignment({0: float(p)})) for p in s.power_domain.levels()
    )
    out = global_reconfigure(s, GaConfig(population_size=8, generations=20, seed=0))
    assert out.best_objective_bps == pytest.approx(sweep_best, rel=1e-9)


def test_global_reconfigure_three_cells_near_bruteforce():
    s = toy_scenario(n_cells=3, n_ues=9, n_levels=19, seed=8)
    # full 10..46 dBm grid for the sweep
    opt = exhaustive_optimum(s)
    out = global_reconfigure(s, GaConfig(seed=0))
    assert out.best_objective_bps >= 0.99 * opt


def test_local_reconfigure_full_subset_matches_sga():
    s = toy_scenario(n_cells=3, seed=10)
    baseline = initial_assignment(s)
    cfg = GaConfig(population_size=8, generations=10, seed=4)
    a = local_reconfigure(s, s.cell_ids, baseline, cfg)
    b = sga_optimize(s, s.cell_ids, baseline, cfg)
    assert a.best_assignment == b.best_assignment
    assert a.objective_trace == b.objective_trace


def test_count_changed():
    before = PowerAssignment({1: 40.0, 2: 42.0, 3: 44.0})
    assert count_changed(before, before) == 0
    assert count_changed(before, before.replace({2: 44.0})) == 1
    assert count_changed(before, before.replace({1: 38.0, 3: 40.0})) == 2
    with pytest.raises(ValueError):
        count_changed(before, PowerAssignment({1: 40.0, 2: 42.0}))


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population_size=1)
    with pytest.raises(ValueError):
        GaConfig(generations=0)
    with pytest.raises(ValueError):
        GaConfig(crossover_rate=1.5)
    with pytest.raises(ValueError):
        GaConfig(mutation_rate=-0.1)
    with pytest.raises(ValueError):
        GaConfig(elitism_count=0)
    with pytest.raises(ValueError):
        GaConfig(elitism_count=32, population_size=32)
    with pytest.raises(ValueError):
        GaConfig(seed=-1)
