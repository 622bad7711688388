"""NumPy reference implementation of the evaluation kernel.

Contract shared by both backends:

- ``gain_lin[u, c] * tx_mw[c]`` is the received power (mW) of cell c at
  point u; the gain matrix folds path loss and antenna pattern.
- The server of a point is the cell with the highest received power,
  which is also the cell with the highest SINR when every other cell
  interferes; ties go to the first (lowest) index.
- ``sinr_lin = S / (total - S + noise_mw)``.
- Spectral efficiency ``log2(1 + sinr/gap)`` is zeroed below the outage
  threshold and capped at ``eff_cap``; a cell serving n points gives
  each of them ``bandwidth / n`` of its own achievable rate.
"""

import numpy as np


def best_server_sinr(gain_lin, tx_mw, noise_mw):
    """Per-point serving cell index and linear SINR."""
    rx = gain_lin * tx_mw
    if rx.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    total = rx.sum(axis=1)
    serving = rx.argmax(axis=1)
    s = rx[np.arange(rx.shape[0]), serving]
    return serving.astype(np.int64), s / (total - s + noise_mw)


def efficiency(sinr_lin, snr_gap, eff_cap, sinr_floor_lin):
    """Vectorized capped/floored spectral efficiency, bits/s/Hz."""
    eff = np.minimum(np.log2(1.0 + np.asarray(sinr_lin) / snr_gap), eff_cap)
    return np.where(sinr_lin < sinr_floor_lin, 0.0, eff)


def assignment_throughput(gain_lin, tx_mw, noise_mw, snr_gap, eff_cap, sinr_floor_lin, bandwidth_hz):
    """Total round-robin throughput (bit/s) of one TX-power assignment."""
    serving, sinr_lin = best_server_sinr(gain_lin, tx_mw, noise_mw)
    if serving.shape[0] == 0:
        return 0.0
    eff = efficiency(sinr_lin, snr_gap, eff_cap, sinr_floor_lin)
    counts = np.bincount(serving, minlength=gain_lin.shape[1])
    return float((eff * (bandwidth_hz / counts[serving])).sum())
