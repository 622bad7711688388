"""Total-throughput objective and the genetic TX-power optimizer.

The genome is the vector of discrete power-level indices of the cells
being optimized; every other cell keeps its initial power in every
candidate ever evaluated.  A single seeded generator drives all random
draws in a fixed order, so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .network import (
    PowerAssignment,
    Scenario,
    check_assignment,
    compile_scenario,
    evaluate,
    initial_assignment,
)

CandidateObserver = Callable[[PowerAssignment], None]


@dataclass(frozen=True)
class GaConfig:
    """Genetic-algorithm settings.

    mutation_rate is the per-gene probability; None means 1/genome-length.
    """

    population_size: int = 32
    generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    tournament_size: int = 2
    elitism_count: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be at least 1")
        if not 1 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must be in [1, population_size)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")


@dataclass(frozen=True)
class OptimizeOutcome:
    """Best assignment found plus the per-generation best-objective trace."""

    best_assignment: PowerAssignment
    best_objective_bps: float
    objective_trace: tuple[float, ...]
    evaluations: int


def objective(s: Scenario, a: Mapping[int, float]) -> float:
    """Total network throughput (bit/s) of an assignment."""
    return evaluate(s, a).total_throughput_bps


def count_changed(before: Mapping[int, float], after: Mapping[int, float]) -> int:
    """Number of cells whose power differs between two assignments."""
    if set(before) != set(after):
        raise ValueError("assignments cover different cell id sets")
    return sum(1 for cid in before if before[cid] != after[cid])


def _tournament(rng: np.random.Generator, fits: np.ndarray, size: int) -> int:
    idx = rng.integers(0, len(fits), size=size)
    return int(idx[np.argmax(fits[idx])])


def _mutate(rng: np.random.Generator, genome: np.ndarray, n_levels: int, rate: float) -> None:
    if n_levels < 2:
        return
    mask = rng.random(len(genome)) < rate
    n = int(mask.sum())
    if n == 0:
        return
    draws = rng.integers(0, n_levels - 1, size=n)
    current = genome[mask]
    genome[mask] = draws + (draws >= current)  # uniform over the other levels


def sga_optimize(
    s: Scenario,
    free_cells: Iterable[int],
    init: PowerAssignment,
    cfg: GaConfig,
    candidate_observer: CandidateObserver | None = None,
) -> OptimizeOutcome:
    """Optimize the powers of free_cells, starting from init.

    Cells outside free_cells carry their init power in every candidate
    and in the result.  Tournament selection, single-point crossover,
    per-gene mutation to a different level, and elitism; the initial
    population is init plus random assignments.  Deterministic given
    cfg.seed.
    """
    check_assignment(s, init)
    free = frozenset(int(c) for c in free_cells)
    unknown = free - set(s.cell_ids)
    if unknown:
        raise ValueError(f"free cells not in the scenario: {sorted(unknown)}")
    comp = compile_scenario(s)
    base = comp.power_vector(init)
    evaluations = 0

    def fitness(tx_dbm: np.ndarray) -> float:
        nonlocal evaluations
        if candidate_observer is not None:
            candidate_observer(PowerAssignment(zip(comp.cell_ids, tx_dbm.tolist())))
        evaluations += 1
        return comp.throughput_of_vector(tx_dbm)

    if not free:
        obj = fitness(base)
        return OptimizeOutcome(init, obj, (obj,), evaluations)

    levels = s.power_domain.levels()
    n_levels = len(levels)
    free_idx = np.array([i for i, cid in enumerate(comp.cell_ids) if cid in free])
    glen = len(free_idx)
    mutation = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / glen
    rng = np.random.default_rng(int(cfg.seed))

    def genome_fitness(genome: np.ndarray) -> float:
        tx = base.copy()
        tx[free_idx] = levels[genome]
        return fitness(tx)

    init_genome = np.array([s.power_domain.level_of(base[i]) for i in free_idx], dtype=np.int64)
    population = [init_genome.copy()]
    for _ in range(cfg.population_size - 1):
        population.append(rng.integers(0, n_levels, size=glen, dtype=np.int64))
    fits = np.array([genome_fitness(g) for g in population])
    trace = [float(fits.max())]

    for _generation in range(cfg.generations):
        order = np.argsort(-fits, kind="stable")
        next_population = [population[i].copy() for i in order[: cfg.elitism_count]]
        next_fits = [float(fits[i]) for i in order[: cfg.elitism_count]]
        while len(next_population) < cfg.population_size:
            pa = population[_tournament(rng, fits, cfg.tournament_size)]
            pb = population[_tournament(rng, fits, cfg.tournament_size)]
            child_a, child_b = pa.copy(), pb.copy()
            if glen >= 2 and rng.random() < cfg.crossover_rate:
                cut = int(rng.integers(1, glen))
                child_a[cut:] = pb[cut:]
                child_b[cut:] = pa[cut:]
            for child in (child_a, child_b):
                if len(next_population) >= cfg.population_size:
                    break
                _mutate(rng, child, n_levels, mutation)
                next_population.append(child)
                next_fits.append(genome_fitness(child))
        population = next_population
        fits = np.array(next_fits)
        trace.append(float(fits.max()))

    best_i = int(np.argmax(fits))
    best_tx = base.copy()
    best_tx[free_idx] = levels[population[best_i]]
    best = PowerAssignment(zip(comp.cell_ids, best_tx.tolist()))
    return OptimizeOutcome(best, float(fits[best_i]), tuple(trace), evaluations)


def global_reconfigure(s: Scenario, cfg: GaConfig) -> OptimizeOutcome:
    """Optimize every cell starting from the default (snapped) powers."""
    return sga_optimize(s, s.cell_ids, initial_assignment(s), cfg)


def local_reconfigure(
    s: Scenario,
    subset: Iterable[int],
    baseline: PowerAssignment,
    cfg: GaConfig,
    candidate_observer: CandidateObserver | None = None,
) -> OptimizeOutcome:
    """Optimize only `subset`; every other cell keeps its baseline power."""
    return sga_optimize(s, subset, baseline, cfg, candidate_observer)
