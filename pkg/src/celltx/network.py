"""Scenario construction, UE placement, cell association and throughput.

A Scenario is an immutable network snapshot; a PowerAssignment maps each
cell id to a TX power on the scenario's discrete grid.  evaluate() is
the single source of truth for network performance: best-SINR
association, per-UE SINR/CQI/throughput under round-robin sharing, and
the total network throughput used as the optimization objective.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from types import ModuleType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernel, radio
from .kernel import pyref
from .radio import RadioConfig

DEFAULT_TX_POWER_DBM = 43.0
SECTOR_AZIMUTHS_DEG = (0.0, 120.0, 240.0)


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Cell:
    """One 120-degree sector: site position, boresight azimuth, default power."""

    id: int
    site: Position
    azimuth_deg: float
    default_tx_power_dbm: float = DEFAULT_TX_POWER_DBM

    def __post_init__(self) -> None:
        if not 0 <= self.azimuth_deg < 360:
            raise ValueError(f"cell {self.id}: azimuth_deg must be in [0, 360)")
        if not math.isfinite(self.default_tx_power_dbm):
            raise ValueError(f"cell {self.id}: default_tx_power_dbm must be finite")


@dataclass(frozen=True)
class UE:
    id: int
    pos: Position


@dataclass(frozen=True)
class PowerDomain:
    """Discrete TX power grid: min_dbm + k * step_db up to max_dbm."""

    min_dbm: float = 10.0
    max_dbm: float = 46.0
    step_db: float = 2.0

    def __post_init__(self) -> None:
        if not self.min_dbm < self.max_dbm:
            raise ValueError("power domain requires min_dbm < max_dbm")
        if self.step_db <= 0:
            raise ValueError("power domain requires step_db > 0")

    @property
    def n_levels(self) -> int:
        return int(math.floor((self.max_dbm - self.min_dbm) / self.step_db + 1e-9)) + 1

    def levels(self) -> np.ndarray:
        return self.min_dbm + self.step_db * np.arange(self.n_levels, dtype=np.float64)

    def snap(self, power_dbm: float) -> float:
        """Nearest grid level; half-way values round up."""
        k = math.floor((power_dbm - self.min_dbm) / self.step_db + 0.5)
        k = min(max(k, 0), self.n_levels - 1)
        return self.min_dbm + k * self.step_db

    def level_of(self, power_dbm: float) -> int:
        """Index of an on-grid power; raises if the value is off the grid."""
        x = (power_dbm - self.min_dbm) / self.step_db
        k = round(x)
        if not 0 <= k <= self.n_levels - 1 or abs(x - k) > 1e-9:
            raise ValueError(f"power {power_dbm} dBm is not on the domain grid")
        return int(k)


class PowerAssignment(Mapping[int, float]):
    """Immutable map from cell id to TX power (dBm); the optimization variable."""

    __slots__ = ("_powers",)

    def __init__(self, powers: Mapping[int, float] | Iterable[tuple[int, float]]):
        items = dict(powers).items()
        self._powers = {int(k): float(v) for k, v in sorted(items)}

    def __getitem__(self, cell_id: int) -> float:
        return self._powers[cell_id]

    def __iter__(self) -> Iterator[int]:
        return iter(self._powers)

    def __len__(self) -> int:
        return len(self._powers)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PowerAssignment):
            return self._powers == other._powers
        if isinstance(other, Mapping):
            return self._powers == dict(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._powers.items()))

    def __repr__(self) -> str:
        return f"PowerAssignment({self._powers!r})"

    def replace(self, updates: Mapping[int, float]) -> "PowerAssignment":
        merged = dict(self._powers)
        merged.update({int(k): float(v) for k, v in updates.items()})
        return PowerAssignment(merged)

    def as_dict(self) -> dict[int, float]:
        return dict(self._powers)


@dataclass(frozen=True)
class Scenario:
    """Immutable network snapshot: area, cells, UEs and radio configuration."""

    area_x_m: float
    area_y_m: float
    cells: tuple[Cell, ...]
    ues: tuple[UE, ...] = ()
    radio: RadioConfig = RadioConfig()
    power_domain: PowerDomain = PowerDomain()

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "ues", tuple(self.ues))
        if self.area_x_m <= 0 or self.area_y_m <= 0:
            raise ValueError("area dimensions must be positive")
        if not self.cells:
            raise ValueError("a scenario needs at least one cell")
        cell_ids = [c.id for c in self.cells]
        if len(set(cell_ids)) != len(cell_ids):
            raise ValueError("duplicate cell id")
        ue_ids = [u.id for u in self.ues]
        if len(set(ue_ids)) != len(ue_ids):
            raise ValueError("duplicate UE id")
        for c in self.cells:
            if not (0 <= c.site.x <= self.area_x_m and 0 <= c.site.y <= self.area_y_m):
                raise ValueError(f"cell {c.id} site lies outside the area")
            if not self.power_domain.min_dbm <= c.default_tx_power_dbm <= self.power_domain.max_dbm:
                raise ValueError(f"cell {c.id} default power outside the power domain")
        for u in self.ues:
            if not (0 <= u.pos.x <= self.area_x_m and 0 <= u.pos.y <= self.area_y_m):
                raise ValueError(f"UE {u.id} lies outside the area")

    @property
    def cell_ids(self) -> tuple[int, ...]:
        return tuple(sorted(c.id for c in self.cells))

    @property
    def center(self) -> Position:
        return Position(self.area_x_m / 2.0, self.area_y_m / 2.0)

    @property
    def diagonal_m(self) -> float:
        return math.hypot(self.area_x_m, self.area_y_m)

    def cell_by_id(self, cell_id: int) -> Cell:
        for c in self.cells:
            if c.id == cell_id:
                return c
        raise KeyError(cell_id)


def initial_assignment(s: Scenario) -> PowerAssignment:
    """Default powers snapped to the scenario's discrete grid."""
    return PowerAssignment(
        {c.id: s.power_domain.snap(c.default_tx_power_dbm) for c in s.cells}
    )


def check_assignment(s: Scenario, a: Mapping[int, float]) -> None:
    """Raise unless `a` covers exactly the scenario's cells with on-grid powers."""
    ids = set(s.cell_ids)
    got = set(a)
    if got != ids:
        missing = sorted(ids - got)
        extra = sorted(got - ids)
        raise ValueError(f"assignment does not cover the scenario (missing={missing}, extra={extra})")
    for cid in ids:
        s.power_domain.level_of(a[cid])  # raises if off-grid


def generate_honeycomb(
    n_sites: int,
    isd_m: float,
    *,
    radio_cfg: RadioConfig | None = None,
    power_domain: PowerDomain | None = None,
    default_tx_power_dbm: float = DEFAULT_TX_POWER_DBM,
) -> Scenario:
    """Hexagonal lattice of three-sector sites, no UEs.

    Rows alternate between w and w+1 sites (w ~ sqrt(n_sites)), odd rows
    shifted by half the inter-site distance; the area bounds the lattice
    with an isd/2 margin on every side.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be at least 1")
    if isd_m <= 0:
        raise ValueError("isd_m must be positive")
    w = max(1, math.isqrt(n_sites))
    raw: list[tuple[float, float]] = []
    row = 0
    remaining = n_sites
    while remaining > 0:
        cap = w if row % 2 == 0 else w + 1
        take = min(cap, remaining)
        x_off = 0.0 if row % 2 == 0 else -isd_m / 2.0
        y = row * isd_m * math.sqrt(3.0) / 2.0
        for col in range(take):
            raw.append((x_off + col * isd_m, y))
        remaining -= take
        row += 1
    margin = isd_m / 2.0
    min_x = min(x for x, _ in raw)
    min_y = min(y for _, y in raw)
    sites = [(x - min_x + margin, y - min_y + margin) for x, y in raw]
    area_x = max(x for x, _ in sites) + margin
    area_y = max(y for _, y in sites) + margin
    cells = []
    for k, (sx, sy) in enumerate(sites):
        for j, az in enumerate(SECTOR_AZIMUTHS_DEG):
            cells.append(Cell(3 * k + j, Position(sx, sy), az, default_tx_power_dbm))
    return Scenario(
        area_x_m=area_x,
        area_y_m=area_y,
        cells=tuple(cells),
        radio=radio_cfg if radio_cfg is not None else RadioConfig(),
        power_domain=power_domain if power_domain is not None else PowerDomain(),
    )


def generate_ue_grid(nx: int, ny: int, area: tuple[float, float]) -> tuple[UE, ...]:
    """nx*ny UEs at the centers of a regular partition of the area."""
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be at least 1")
    area_x, area_y = area
    dx = area_x / nx
    dy = area_y / ny
    ues = []
    for iy in range(ny):
        for ix in range(nx):
            ues.append(UE(iy * nx + ix, Position((ix + 0.5) * dx, (iy + 0.5) * dy)))
    return tuple(ues)


def add_nomadic_site(s: Scenario, site: Position, tx_power_dbm: float | None = None) -> Scenario:
    """New scenario with one extra three-sector site; the input is unchanged."""
    if not (0 <= site.x <= s.area_x_m and 0 <= site.y <= s.area_y_m):
        raise ValueError("nomadic site lies outside the area")
    power = DEFAULT_TX_POWER_DBM if tx_power_dbm is None else tx_power_dbm
    next_id = max(s.cell_ids) + 1
    new_cells = tuple(
        Cell(next_id + j, site, az, power) for j, az in enumerate(SECTOR_AZIMUTHS_DEG)
    )
    return replace(s, cells=s.cells + new_cells)


# ---------------------------------------------------------------------------
# Topology document (JSON)


def _check_fields(obj: object, ctx: str, required: Sequence[str], optional: Sequence[str] = ()) -> dict:
    if not isinstance(obj, dict):
        raise ValueError(f"{ctx}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ValueError(f"{ctx}: unknown field '{unknown[0]}'")
    for key in required:
        if key not in obj:
            raise ValueError(f"{ctx}: missing field '{key}'")
    return obj


def _num(obj: dict, ctx: str, key: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{ctx}: field '{key}' must be a number")
    return float(v)


def _int(obj: dict, ctx: str, key: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"{ctx}: field '{key}' must be an integer")
    return v


_RADIO_FIELDS = (
    "frequency_hz",
    "bandwidth_hz",
    "noise_figure_db",
    "reference_distance_m",
    "bs_height_m",
    "ue_height_m",
    "terrain",
    "beamwidth_deg",
    "backlobe_db",
    "ber",
)


def _position_from(obj: object, ctx: str) -> Position:
    d = _check_fields(obj, ctx, ("x", "y"))
    return Position(_num(d, ctx, "x"), _num(d, ctx, "y"))


def load_topology(data: bytes | str) -> Scenario:
    """Parse a topology document; schema violations name the offending field."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValueError(f"topology: invalid JSON ({exc})") from exc
    _check_fields(doc, "topology", ("area", "power_domain", "radio", "cells", "ues"))
    area = _check_fields(doc["area"], "area", ("x", "y"))
    domain = _check_fields(doc["power_domain"], "power_domain", ("min", "max", "step"))
    rdoc = _check_fields(doc["radio"], "radio", _RADIO_FIELDS)
    terrain = rdoc["terrain"]
    if not isinstance(terrain, str) or terrain not in ("A", "B", "C"):
        raise ValueError("radio: field 'terrain' must be one of 'A', 'B', 'C'")
    cfg = RadioConfig(
        frequency_hz=_num(rdoc, "radio", "frequency_hz"),
        bandwidth_hz=_num(rdoc, "radio", "bandwidth_hz"),
        noise_figure_db=_num(rdoc, "radio", "noise_figure_db"),
        reference_distance_m=_num(rdoc, "radio", "reference_distance_m"),
        bs_height_m=_num(rdoc, "radio", "bs_height_m"),
        ue_height_m=_num(rdoc, "radio", "ue_height_m"),
        terrain=radio.SuiTerrain(terrain),
        beamwidth_deg=_num(rdoc, "radio", "beamwidth_deg"),
        backlobe_db=_num(rdoc, "radio", "backlobe_db"),
        ber=_num(rdoc, "radio", "ber"),
    )
    if not isinstance(doc["cells"], list):
        raise ValueError("topology: field 'cells' must be an array")
    if not isinstance(doc["ues"], list):
        raise ValueError("topology: field 'ues' must be an array")
    cells = []
    for i, cdoc in enumerate(doc["cells"]):
        ctx = f"cells[{i}]"
        d = _check_fields(cdoc, ctx, ("id", "site", "azimuth_deg", "tx_power_dbm"))
        cells.append(
            Cell(
                id=_int(d, ctx, "id"),
                site=_position_from(d["site"], f"{ctx}.site"),
                azimuth_deg=_num(d, ctx, "azimuth_deg"),
                default_tx_power_dbm=_num(d, ctx, "tx_power_dbm"),
            )
        )
    ues = []
    for i, udoc in enumerate(doc["ues"]):
        ctx = f"ues[{i}]"
        d = _check_fields(udoc, ctx, ("id", "pos"))
        ues.append(UE(id=_int(d, ctx, "id"), pos=_position_from(d["pos"], f"{ctx}.pos")))
    return Scenario(
        area_x_m=_num(area, "area", "x"),
        area_y_m=_num(area, "area", "y"),
        cells=tuple(cells),
        ues=tuple(ues),
        radio=cfg,
        power_domain=PowerDomain(
            min_dbm=_num(domain, "power_domain", "min"),
            max_dbm=_num(domain, "power_domain", "max"),
            step_db=_num(domain, "power_domain", "step"),
        ),
    )


def save_topology(s: Scenario) -> bytes:
    """Serialize a scenario; load_topology(save_topology(s)) == s."""
    doc = {
        "area": {"x": s.area_x_m, "y": s.area_y_m},
        "power_domain": {
            "min": s.power_domain.min_dbm,
            "max": s.power_domain.max_dbm,
            "step": s.power_domain.step_db,
        },
        "radio": {
            "frequency_hz": s.radio.frequency_hz,
            "bandwidth_hz": s.radio.bandwidth_hz,
            "noise_figure_db": s.radio.noise_figure_db,
            "reference_distance_m": s.radio.reference_distance_m,
            "bs_height_m": s.radio.bs_height_m,
            "ue_height_m": s.radio.ue_height_m,
            "terrain": s.radio.terrain.value,
            "beamwidth_deg": s.radio.beamwidth_deg,
            "backlobe_db": s.radio.backlobe_db,
            "ber": s.radio.ber,
        },
        "cells": [
            {
                "id": c.id,
                "site": {"x": c.site.x, "y": c.site.y},
                "azimuth_deg": c.azimuth_deg,
                "tx_power_dbm": c.default_tx_power_dbm,
            }
            for c in s.cells
        ],
        "ues": [{"id": u.id, "pos": {"x": u.pos.x, "y": u.pos.y}} for u in s.ues],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Compiled scenario and evaluation


def gain_matrix_db(cells: Sequence[Cell], xs: Sequence[float], ys: Sequence[float], cfg: RadioConfig) -> np.ndarray:
    """(n_points, n_cells) matrix of -(path loss + antenna attenuation), dB.

    Distances below the SUI reference distance clamp to it, which also
    makes a point coincident with a site well defined.
    """
    cx = np.array([c.site.x for c in cells], dtype=np.float64)
    cy = np.array([c.site.y for c in cells], dtype=np.float64)
    az = np.array([c.azimuth_deg for c in cells], dtype=np.float64)
    px = np.asarray(xs, dtype=np.float64)[:, None]
    py = np.asarray(ys, dtype=np.float64)[:, None]
    dx = px - cx[None, :]
    dy = py - cy[None, :]
    d = np.hypot(dx, dy)
    d0 = cfg.reference_distance_m
    pl = radio.sui_fixed_terms(cfg) + 10.0 * radio.sui_exponent(cfg) * np.log10(
        np.maximum(d, d0) / d0
    )
    bearing = np.degrees(np.arctan2(dy, dx))
    offset = (bearing - az[None, :] + 180.0) % 360.0 - 180.0
    att = np.where(np.abs(offset) <= cfg.beamwidth_deg / 2.0, 0.0, cfg.backlobe_db)
    return -(pl + att)


@dataclass(frozen=True)
class CompiledScenario:
    """Scenario geometry folded into arrays for the evaluation kernel."""

    cell_ids: tuple[int, ...]
    ue_ids: tuple[int, ...]
    gain_lin: np.ndarray
    noise_mw: float
    snr_gap: float
    eff_cap: float
    sinr_floor_lin: float
    bandwidth_hz: float
    backend: ModuleType

    def power_vector(self, assignment: Mapping[int, float]) -> np.ndarray:
        """TX powers (dBm) in ascending cell-id order."""
        return np.array([assignment[cid] for cid in self.cell_ids], dtype=np.float64)

    def throughput_of_vector(self, tx_dbm: np.ndarray) -> float:
        tx_mw = np.ascontiguousarray(10.0 ** (np.asarray(tx_dbm, dtype=np.float64) / 10.0))
        return self.backend.assignment_throughput(
            self.gain_lin,
            tx_mw,
            self.noise_mw,
            self.snr_gap,
            self.eff_cap,
            self.sinr_floor_lin,
            self.bandwidth_hz,
        )

    def throughput_of(self, assignment: Mapping[int, float]) -> float:
        return self.throughput_of_vector(self.power_vector(assignment))

    def server_sinr(self, tx_dbm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-UE serving-cell index and linear SINR."""
        tx_mw = np.ascontiguousarray(10.0 ** (np.asarray(tx_dbm, dtype=np.float64) / 10.0))
        return self.backend.best_server_sinr(self.gain_lin, tx_mw, self.noise_mw)


def compile_scenario(s: Scenario, backend: ModuleType | None = None) -> CompiledScenario:
    """Precompute the link-gain matrix and radio constants for fast evaluation."""
    cells = sorted(s.cells, key=lambda c: c.id)
    xs = [u.pos.x for u in s.ues]
    ys = [u.pos.y for u in s.ues]
    g_db = gain_matrix_db(cells, xs, ys, s.radio)
    return CompiledScenario(
        cell_ids=tuple(c.id for c in cells),
        ue_ids=tuple(u.id for u in s.ues),
        gain_lin=np.ascontiguousarray(10.0 ** (g_db / 10.0)),
        noise_mw=10.0 ** (radio.noise_floor(s.radio) / 10.0),
        snr_gap=radio.snr_gap_from_ber(s.radio.ber),
        eff_cap=radio.MAX_EFFICIENCY_BPS_HZ,
        sinr_floor_lin=10.0 ** (radio.MIN_SINR_THRESHOLD_DB / 10.0),
        bandwidth_hz=s.radio.bandwidth_hz,
        backend=backend if backend is not None else kernel.active,
    )


def server_sinr_at_points(
    cells: Sequence[Cell],
    assignment: Mapping[int, float],
    xs: Sequence[float],
    ys: Sequence[float],
    cfg: RadioConfig,
    serving: int,
) -> np.ndarray:
    """Linear SINR at arbitrary points when served by one fixed cell."""
    ordered = sorted(cells, key=lambda c: c.id)
    ids = [c.id for c in ordered]
    if serving not in ids:
        raise ValueError(f"serving cell {serving} is not part of the scenario")
    g_db = gain_matrix_db(ordered, xs, ys, cfg)
    tx = np.array([assignment[cid] for cid in ids], dtype=np.float64)
    rx = 10.0 ** ((g_db + tx[None, :]) / 10.0)
    total = rx.sum(axis=1)
    s_col = rx[:, ids.index(serving)]
    noise_mw = 10.0 ** (radio.noise_floor(cfg) / 10.0)
    return s_col / (total - s_col + noise_mw)


@dataclass(frozen=True)
class UERecord:
    ue_id: int
    cell_id: int
    sinr_db: float
    cqi: int
    throughput_bps: float


@dataclass(frozen=True)
class EvaluationResult:
    """Per-UE link quality, per-cell load and the total network throughput."""

    ue_records: tuple[UERecord, ...]
    cell_load: dict[int, int]
    total_throughput_bps: float

    def as_dict(self) -> dict:
        return {
            "total_throughput_bps": self.total_throughput_bps,
            "cell_load": {str(cid): n for cid, n in sorted(self.cell_load.items())},
            "ues": [
                {
                    "ue_id": r.ue_id,
                    "cell_id": r.cell_id,
                    "sinr_db": r.sinr_db,
                    "cqi": r.cqi,
                    "throughput_bps": r.throughput_bps,
                }
                for r in self.ue_records
            ],
        }


_CQI_THRESHOLDS = np.array(radio.cqi_thresholds_db())


def evaluate(s: Scenario, a: Mapping[int, float]) -> EvaluationResult:
    """Best-SINR association plus round-robin throughput accounting."""
    check_assignment(s, a)
    comp = compile_scenario(s)
    n_ue = len(comp.ue_ids)
    if n_ue == 0:
        return EvaluationResult((), {cid: 0 for cid in comp.cell_ids}, 0.0)
    serving, sinr_lin = comp.server_sinr(comp.power_vector(a))
    sinr_db = 10.0 * np.log10(sinr_lin)
    eff = pyref.efficiency(sinr_lin, comp.snr_gap, comp.eff_cap, comp.sinr_floor_lin)
    cqi = np.searchsorted(_CQI_THRESHOLDS, sinr_db, side="right")
    counts = np.bincount(serving, minlength=len(comp.cell_ids))
    thr = eff * (comp.bandwidth_hz / counts[serving])
    records = tuple(
        UERecord(
            ue_id=comp.ue_ids[i],
            cell_id=comp.cell_ids[serving[i]],
            sinr_db=float(sinr_db[i]),
            cqi=int(cqi[i]),
            throughput_bps=float(thr[i]),
        )
        for i in range(n_ue)
    )
    cell_load = {cid: int(counts[j]) for j, cid in enumerate(comp.cell_ids)}
    return EvaluationResult(records, cell_load, float(thr.sum()))


def associate_best_sinr(s: Scenario, a: Mapping[int, float]) -> dict[int, int]:
    """UE id -> id of the cell with the highest SINR (ties: lowest cell id)."""
    check_assignment(s, a)
    comp = compile_scenario(s)
    if not comp.ue_ids:
        return {}
    serving, _ = comp.server_sinr(comp.power_vector(a))
    return {uid: comp.cell_ids[serving[i]] for i, uid in enumerate(comp.ue_ids)}


def associate_nearest(s: Scenario) -> dict[int, int]:
    """UE id -> id of the geometrically nearest cell site (ties: lowest cell id)."""
    cells = sorted(s.cells, key=lambda c: c.id)
    if not s.ues:
        return {}
    cx = np.array([c.site.x for c in cells])
    cy = np.array([c.site.y for c in cells])
    px = np.array([u.pos.x for u in s.ues])[:, None]
    py = np.array([u.pos.y for u in s.ues])[:, None]
    d = np.hypot(px - cx[None, :], py - cy[None, :])
    nearest = d.argmin(axis=1)
    return {u.id: cells[nearest[i]].id for i, u in enumerate(s.ues)}
