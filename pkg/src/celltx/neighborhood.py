"""Selecting which cells to reconfigure after a nomadic site is added.

Two selection strategies around the new site:

- iterative range: optimize the cells inside a growing circle until the
  result stops improving;
- sampling: probe each existing cell's service area at random points and
  flag the cells whose mean SINR degrades beyond a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import radio
from .network import (
    Position,
    PowerAssignment,
    Scenario,
    check_assignment,
    server_sinr_at_points,
)
from .optimize import GaConfig, OptimizeOutcome, local_reconfigure, objective


@dataclass(frozen=True)
class CircleSchedule:
    """Growing search circles: initial_radius_m * growth_factor**k, capped."""

    initial_radius_m: float
    growth_factor: float = 1.5
    max_radius_m: float = float("inf")

    def __post_init__(self) -> None:
        if self.initial_radius_m <= 0:
            raise ValueError("initial_radius_m must be positive")
        if self.growth_factor <= 1:
            raise ValueError("growth_factor must be greater than 1")
        if self.max_radius_m <= 0:
            raise ValueError("max_radius_m must be positive")


@dataclass(frozen=True)
class SamplingConfig:
    """Per-cell probing: number of sample points and the SINR-drop trigger."""

    samples_per_cell: int = 50
    sinr_drop_threshold_db: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples_per_cell < 1:
            raise ValueError("samples_per_cell must be at least 1")
        if self.sinr_drop_threshold_db < 0:
            raise ValueError("sinr_drop_threshold_db must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")


@dataclass(frozen=True)
class ReconfigStep:
    radius_m: float
    n_selected: int
    objective_bps: float


@dataclass(frozen=True)
class ReconfigReport:
    """Outcome of one reconfiguration: what was selected, what changed."""

    method: str
    selected: frozenset[int]
    changed: frozenset[int]
    changed_count: int
    throughput_before_bps: float
    throughput_after_bps: float
    final_assignment: PowerAssignment
    steps: tuple[ReconfigStep, ...] = ()


def noise_reach_radius(
    tx_power_dbm: float, cfg: radio.RadioConfig, max_radius_m: float | None = None
) -> float:
    """Distance at which free-space reception falls to the noise floor.

    Inverts tx - FSPL(d) = N: d = (lambda / 4 pi) * 10**((tx - N) / 20),
    optionally capped at max_radius_m.
    """
    budget_db = tx_power_dbm - radio.noise_floor(cfg)
    if budget_db <= 0:
        raise ValueError("tx power does not exceed the noise floor")
    d = cfg.wavelength_m / (4.0 * math.pi) * 10.0 ** (budget_db / 20.0)
    if max_radius_m is not None:
        d = min(d, max_radius_m)
    return d


def cells_within(center: Position, radius_m: float, s: Scenario) -> frozenset[int]:
    """Ids of the cells whose site is within radius_m of center."""
    if radius_m < 0:
        raise ValueError("radius must be non-negative")
    return frozenset(c.id for c in s.cells if c.site.distance_to(center) <= radius_m)


def reference_isd(s: Scenario) -> float:
    """Smallest distance between two distinct sites; the diagonal if none."""
    sites = sorted({(c.site.x, c.site.y) for c in s.cells})
    best = None
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            d = math.hypot(sites[i][0] - sites[j][0], sites[i][1] - sites[j][1])
            if best is None or d < best:
                best = d
    return best if best is not None else s.diagonal_m


def default_circle_schedule(s: Scenario, tx_power_dbm: float) -> CircleSchedule:
    """First circle at min(noise reach, 2 ISD), growing 1.5x up to the diagonal.

    The free-space noise-reach radius exceeds typical network sizes, so
    the inter-site distance keeps the first circle meaningfully local.
    """
    initial = min(
        noise_reach_radius(tx_power_dbm, s.radio, max_radius_m=s.diagonal_m),
        2.0 * reference_isd(s),
    )
    return CircleSchedule(initial_radius_m=initial, max_radius_m=s.diagonal_m)


def iterative_range_reconfigure(
    s: Scenario,
    center: Position,
    sched: CircleSchedule,
    ga: GaConfig,
    baseline: PowerAssignment,
) -> ReconfigReport:
    """Optimize growing circles around center until the result settles.

    Each step runs a local reconfiguration of the cells inside the
    current circle, starting from the baseline.  Iteration stops when two
    consecutive steps return the same assignment, when the objective
    moves by less than 0.1%, or when the radius cap is reached.
    """
    if not (0 <= center.x <= s.area_x_m and 0 <= center.y <= s.area_y_m):
        raise ValueError("center lies outside the area")
    check_assignment(s, baseline)
    before = objective(s, baseline)
    radius = min(sched.initial_radius_m, sched.max_radius_m)
    steps: list[ReconfigStep] = []
    previous: OptimizeOutcome | None = None
    outcome: OptimizeOutcome | None = None
    selected: frozenset[int] = frozenset()
    while True:
        selected = cells_within(center, radius, s)
        outcome = local_reconfigure(s, selected, baseline, ga)
        steps.append(ReconfigStep(radius, len(selected), outcome.best_objective_bps))
        if previous is not None:
            delta = abs(outcome.best_objective_bps - previous.best_objective_bps)
            settled = outcome.best_assignment == previous.best_assignment or delta < 1e-3 * max(
                abs(previous.best_objective_bps), 1e-12
            )
            if settled:
                break
        if radius >= sched.max_radius_m:
            break
        previous = outcome
        radius = min(radius * sched.growth_factor, sched.max_radius_m)
    changed = frozenset(
        cid for cid in baseline if baseline[cid] != outcome.best_assignment[cid]
    )
    return ReconfigReport(
        method="iterative",
        selected=selected,
        changed=changed,
        changed_count=len(changed),
        throughput_before_bps=before,
        throughput_after_bps=outcome.best_objective_bps,
        final_assignment=outcome.best_assignment,
        steps=tuple(steps),
    )


def _sample_points(
    rng: np.random.Generator, site: Position, azimuth_deg: float, radius_m: float,
    beamwidth_deg: float, n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """n points drawn uniformly over the sector wedge of radius radius_m."""
    r = radius_m * np.sqrt(rng.random(n))
    theta = np.radians(azimuth_deg - beamwidth_deg / 2.0 + beamwidth_deg * rng.random(n))
    return site.x + r * np.cos(theta), site.y + r * np.sin(theta)


def sampling_select(
    s_before: Scenario,
    s_after: Scenario,
    a_before: PowerAssignment,
    a_after: PowerAssignment,
    cfg: SamplingConfig,
) -> frozenset[int]:
    """Cells whose mean sampled SINR drops by more than the threshold.

    For every pre-existing cell, the same seeded points (uniform over the
    sector wedge, radius min(noise reach, ISD)) are probed before and
    after the change; the mean is taken over dB values.  The per-cell
    point set depends only on (seed, cell id).
    """
    before_ids = set(c.id for c in s_before.cells)
    after_ids = set(c.id for c in s_after.cells)
    if not before_ids <= after_ids:
        raise ValueError("s_after must contain every cell of s_before")
    check_assignment(s_before, a_before)
    check_assignment(s_after, a_after)
    isd = reference_isd(s_before)
    flagged = []
    for cell in sorted(s_before.cells, key=lambda c: c.id):
        radius = min(
            noise_reach_radius(a_before[cell.id], s_before.radio),
            isd,
        )
        rng = np.random.default_rng((int(cfg.seed), cell.id))
        xs, ys = _sample_points(
            rng, cell.site, cell.azimuth_deg, radius,
            s_before.radio.beamwidth_deg, cfg.samples_per_cell,
        )
        sinr_before = server_sinr_at_points(
            s_before.cells, a_before, xs, ys, s_before.radio, cell.id
        )
        sinr_after = server_sinr_at_points(
            s_after.cells, a_after, xs, ys, s_after.radio, cell.id
        )
        mean_before = float(np.mean(10.0 * np.log10(sinr_before)))
        mean_after = float(np.mean(10.0 * np.log10(sinr_after)))
        if mean_before - mean_after > cfg.sinr_drop_threshold_db:
            flagged.append(cell.id)
    return frozenset(flagged)


def sampling_reconfigure(
    s_after: Scenario,
    selected: Iterable[int],
    baseline: PowerAssignment,
    ga: GaConfig,
) -> ReconfigReport:
    """Local reconfiguration over the sampled selection (plus the new cells).

    `selected` is expected to already include the newly added cells,
    which are always free to change.
    """
    selected_set = frozenset(int(c) for c in selected)
    before = objective(s_after, baseline)
    outcome = local_reconfigure(s_after, selected_set, baseline, ga)
    changed = frozenset(
        cid for cid in baseline if baseline[cid] != outcome.best_assignment[cid]
    )
    return ReconfigReport(
        method="sampling",
        selected=selected_set,
        changed=changed,
        changed_count=len(changed),
        throughput_before_bps=before,
        throughput_after_bps=outcome.best_objective_bps,
        final_assignment=outcome.best_assignment,
    )
