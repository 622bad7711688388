"""Link-budget arithmetic for a sectorized LTE-like downlink.

Path loss (free space and SUI), flat sector antenna pattern, received
power, SINR, and the CQI/spectral-efficiency mapping used for link
adaptation.  Every function here is a pure function of immutable inputs.

Powers are dBm and losses dB unless a name says otherwise; powers are
combined only in the linear (milliwatt) domain, inside :func:`sinr`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Mapping, Sequence

if TYPE_CHECKING:  # pragma: no cover - import cycle avoidance, typing only
    from .network import Cell, Position

SPEED_OF_LIGHT_M_S = 299_792_458.0

# Thermal noise density at 290 K, dBm/Hz.
NOISE_DENSITY_DBM_HZ = -174.0


class SuiTerrain(str, Enum):
    """SUI terrain category: A hilly/heavy foliage, B intermediate, C flat/light."""

    A = "A"
    B = "B"
    C = "C"


# Terrain constants (a, b [1/m], c [m]) of the SUI median path-loss exponent
# gamma = a - b*hb + c/hb.
_SUI_TERRAIN_ABC = {
    SuiTerrain.A: (4.6, 0.0075, 12.6),
    SuiTerrain.B: (4.0, 0.0065, 17.1),
    SuiTerrain.C: (3.6, 0.0050, 20.0),
}


@dataclass(frozen=True)
class RadioConfig:
    """Radio constants shared by every cell of a scenario.

    The defaults are a deterministic 2 GHz / 10 MHz suburban macro setup:
    SUI terrain B, 30 m masts, 1.5 m terminals, ideal 120-degree sectors
    with a 20 dB backlobe, and no shadowing randomness.
    """

    frequency_hz: float = 2.0e9
    bandwidth_hz: float = 10.0e6
    noise_figure_db: float = 9.0
    reference_distance_m: float = 100.0
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5
    terrain: SuiTerrain = SuiTerrain.B
    beamwidth_deg: float = 120.0
    backlobe_db: float = 20.0
    ber: float = 5e-5

    def __post_init__(self) -> None:
        object.__setattr__(self, "terrain", SuiTerrain(self.terrain))
        if self.frequency_hz <= 0:
            raise ValueError("frequency_hz must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.reference_distance_m <= 0:
            raise ValueError("reference_distance_m must be positive")
        if not self.bs_height_m > self.ue_height_m > 0:
            raise ValueError("heights must satisfy bs_height_m > ue_height_m > 0")
        if not 0 < self.beamwidth_deg <= 360:
            raise ValueError("beamwidth_deg must be in (0, 360]")
        if self.backlobe_db < 0:
            raise ValueError("backlobe_db must be non-negative")
        if not 0 < self.ber <= 0.2:
            raise ValueError("ber must be in (0, 0.2]")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.frequency_hz


def noise_floor(cfg: RadioConfig) -> float:
    """Receiver noise power over the full bandwidth, dBm.

    N = -174 + 10 log10(B) + NF
    """
    return NOISE_DENSITY_DBM_HZ + 10.0 * math.log10(cfg.bandwidth_hz) + cfg.noise_figure_db


def free_space_path_loss(distance_m: float, cfg: RadioConfig) -> float:
    """Free-space path loss 20 log10(4 pi d / lambda), dB."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m / cfg.wavelength_m)


def sui_exponent(cfg: RadioConfig) -> float:
    """SUI path-loss exponent gamma = a - b*hb + c/hb for the configured terrain."""
    a, b, c = _SUI_TERRAIN_ABC[cfg.terrain]
    return a - b * cfg.bs_height_m + c / cfg.bs_height_m


def sui_fixed_terms(cfg: RadioConfig) -> float:
    """Distance-independent part of the SUI loss: intercept plus corrections.

    A = FSPL(d0); Xf = 6 log10(f / 2 GHz); Xh = -10.8 log10(hr / 2) for
    terrain A/B and -20 log10(hr / 2) for terrain C.
    """
    a_intercept = free_space_path_loss(cfg.reference_distance_m, cfg)
    xf = 6.0 * math.log10(cfg.frequency_hz / 2.0e9)
    if cfg.terrain is SuiTerrain.C:
        xh = -20.0 * math.log10(cfg.ue_height_m / 2.0)
    else:
        xh = -10.8 * math.log10(cfg.ue_height_m / 2.0)
    return a_intercept + xf + xh


def sui_path_loss(distance_m: float, cfg: RadioConfig) -> float:
    """SUI (Erceg) median path loss, dB, with zero shadowing.

    PL = A + 10 gamma log10(d/d0) + Xf + Xh; distances below the
    reference distance d0 clamp to d0, where the model is anchored.
    """
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    d = max(distance_m, cfg.reference_distance_m)
    return sui_fixed_terms(cfg) + 10.0 * sui_exponent(cfg) * math.log10(
        d / cfg.reference_distance_m
    )


def antenna_attenuation(bearing_offset_deg: float, cfg: RadioConfig) -> float:
    """Ideal flat sector pattern: 0 dB inside the beam, backlobe_db outside.

    The offset is normalized to [-180, 180) first, so any bearing
    difference may be passed in.
    """
    offset = (bearing_offset_deg + 180.0) % 360.0 - 180.0
    if abs(offset) <= cfg.beamwidth_deg / 2.0:
        return 0.0
    return cfg.backlobe_db


def rx_power(cell: "Cell", tx_power_dbm: float, ue_pos: "Position", cfg: RadioConfig) -> float:
    """Received power at ue_pos from one cell transmitting at tx_power_dbm."""
    dx = ue_pos.x - cell.site.x
    dy = ue_pos.y - cell.site.y
    distance = math.hypot(dx, dy)
    if distance == 0.0:
        raise ValueError(f"position coincides with the site of cell {cell.id}")
    bearing = math.degrees(math.atan2(dy, dx))
    return (
        tx_power_dbm
        - sui_path_loss(distance, cfg)
        - antenna_attenuation(bearing - cell.azimuth_deg, cfg)
    )


def _db_to_lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


def sinr(
    ue_pos: "Position",
    serving: int,
    assignment: Mapping[int, float],
    cells: Sequence["Cell"],
    cfg: RadioConfig,
) -> float:
    """SINR in dB at ue_pos when served by cell `serving`.

    Every other cell interferes.  Powers are converted to milliwatts and
    combined linearly: S / (sum of interferers + N).
    """
    signal_mw = None
    interference_mw = 0.0
    for cell in cells:
        p = _db_to_lin(rx_power(cell, assignment[cell.id], ue_pos, cfg))
        if cell.id == serving:
            signal_mw = p
        else:
            interference_mw += p
    if signal_mw is None:
        raise ValueError(f"serving cell {serving} is not part of the scenario")
    noise_mw = _db_to_lin(noise_floor(cfg))
    return 10.0 * math.log10(signal_mw / (interference_mw + noise_mw))


def snr_gap_from_ber(ber: float) -> float:
    """SNR gap of uncoded QAM at the target bit error rate: -(2/3) ln(5 BER)."""
    if not 0 < ber <= 0.2:
        raise ValueError("ber must be in (0, 0.2]")
    return -2.0 / 3.0 * math.log(5.0 * ber)


# 3GPP LTE CQI table rows: (cqi, modulation, code-rate numerator / 1024,
# modulation size, AWGN SINR switching threshold in dB).
_CQI_ROWS = (
    (1, "QPSK", 78, 4, -2.1054),
    (2, "QPSK", 120, 4, -0.1083),
    (3, "QPSK", 193, 4, 2.1776),
    (4, "QPSK", 308, 4, 4.5647),
    (5, "QPSK", 449, 4, 6.6514),
    (6, "QPSK", 602, 4, 8.4275),
    (7, "16QAM", 378, 16, 9.9379),
    (8, "16QAM", 490, 16, 11.8495),
    (9, "16QAM", 616, 16, 13.7624),
    (10, "64QAM", 466, 64, 14.9370),
    (11, "64QAM", 567, 64, 16.9703),
    (12, "64QAM", 666, 64, 18.8734),
    (13, "64QAM", 772, 64, 20.8506),
    (14, "64QAM", 873, 64, 22.6980),
    (15, "64QAM", 948, 64, 24.0546),
)

# Efficiency of the top CQI, bits/s/Hz; the link-adaptation ceiling.
MAX_EFFICIENCY_BPS_HZ = float(Fraction(948, 1024)) * math.log2(64)

# Below the lowest CQI threshold a terminal is in outage.
MIN_SINR_THRESHOLD_DB = _CQI_ROWS[0][4]

# Tolerated disagreement between a threshold recomputed from the SNR-gap
# model and the tabulated value.
_THRESHOLD_TOLERANCE_DB = 0.02


@dataclass(frozen=True)
class McsEntry:
    """One CQI row: modulation, code rate, efficiency and switching threshold."""

    cqi: int
    modulation: str
    code_rate: Fraction
    modulation_size: int
    efficiency: float
    sinr_threshold_db: float


@dataclass(frozen=True)
class LinkBudgetSample:
    """Received power and SINR of one probed link."""

    rx_power_dbm: float
    sinr_db: float
    serving_cell: int


@lru_cache(maxsize=32)
def build_mcs_table(cfg: RadioConfig) -> tuple[McsEntry, ...]:
    """The 15-row CQI/MCS table, integrity-checked against the gap model.

    Each efficiency is r * log2(M); the switching threshold recomputed as
    gap * (2**efficiency - 1) in dB must agree with the tabulated value
    within 0.02 dB, otherwise the configuration is inconsistent and a
    ValueError is raised.
    """
    gap = snr_gap_from_ber(cfg.ber)
    entries = []
    for cqi, modulation, numerator, msize, threshold_db in _CQI_ROWS:
        rate = Fraction(numerator, 1024)
        eta = float(rate) * math.log2(msize)
        recomputed_db = 10.0 * math.log10(gap * (2.0**eta - 1.0))
        if abs(recomputed_db - threshold_db) > _THRESHOLD_TOLERANCE_DB:
            raise ValueError(
                f"CQI {cqi} threshold {threshold_db} dB disagrees with the "
                f"gap model value {recomputed_db:.4f} dB"
            )
        entries.append(McsEntry(cqi, modulation, rate, msize, eta, threshold_db))
    return tuple(entries)


def cqi_thresholds_db() -> tuple[float, ...]:
    """Ascending AWGN SINR switching thresholds of CQI 1..15."""
    return tuple(row[4] for row in _CQI_ROWS)


def efficiency_from_sinr(sinr_db: float, cfg: RadioConfig) -> float:
    """Spectral efficiency log2(1 + SINR/gap), bits/s/Hz.

    Zero below the lowest CQI threshold (outage), capped at the top CQI
    efficiency.
    """
    if sinr_db < MIN_SINR_THRESHOLD_DB:
        return 0.0
    gap = snr_gap_from_ber(cfg.ber)
    eta = math.log2(1.0 + _db_to_lin(sinr_db) / gap)
    return min(eta, MAX_EFFICIENCY_BPS_HZ)


def cqi_from_sinr(sinr_db: float, table: Sequence[McsEntry]) -> int:
    """Largest CQI whose threshold is <= sinr_db; 0 when below all of them."""
    cqi = 0
    for entry in table:
        if sinr_db >= entry.sinr_threshold_db:
            cqi = entry.cqi
        else:
            break
    return cqi


def link_budget(
    ue_pos: "Position",
    serving: int,
    assignment: Mapping[int, float],
    cells: Sequence["Cell"],
    cfg: RadioConfig,
) -> LinkBudgetSample:
    """Probe one location: received power from the serving cell plus SINR."""
    serving_cell = next((c for c in cells if c.id == serving), None)
    if serving_cell is None:
        raise ValueError(f"serving cell {serving} is not part of the scenario")
    rx = rx_power(serving_cell, assignment[serving], ue_pos, cfg)
    return LinkBudgetSample(rx, sinr(ue_pos, serving, assignment, cells, cfg), serving)
