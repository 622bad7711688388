# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled build of the evaluation kernel; pyref documents the contract."""

from libc.math cimport log2

import numpy as np


def best_server_sinr(double[:, ::1] gain_lin, double[::1] tx_mw, double noise_mw):
    cdef Py_ssize_t n_ue = gain_lin.shape[0]
    cdef Py_ssize_t n_cell = gain_lin.shape[1]
    serving_arr = np.empty(n_ue, dtype=np.int64)
    sinr_arr = np.empty(n_ue, dtype=np.float64)
    cdef long long[::1] serving = serving_arr
    cdef double[::1] sinr = sinr_arr
    cdef Py_ssize_t u, c, best_c
    cdef double total, best, p
    for u in range(n_ue):
        total = 0.0
        best = -1.0
        best_c = 0
        for c in range(n_cell):
            p = gain_lin[u, c] * tx_mw[c]
            total += p
            if p > best:
                best = p
                best_c = c
        serving[u] = best_c
        sinr[u] = best / (total - best + noise_mw)
    return serving_arr, sinr_arr


def assignment_throughput(double[:, ::1] gain_lin, double[::1] tx_mw, double noise_mw,
                          double snr_gap, double eff_cap, double sinr_floor_lin,
                          double bandwidth_hz):
    cdef Py_ssize_t n_ue = gain_lin.shape[0]
    cdef Py_ssize_t n_cell = gain_lin.shape[1]
    if n_ue == 0:
        return 0.0
    eff_arr = np.empty(n_ue, dtype=np.float64)
    srv_arr = np.empty(n_ue, dtype=np.intp)
    cnt_arr = np.zeros(n_cell, dtype=np.intp)
    cdef double[::1] eff = eff_arr
    cdef Py_ssize_t[::1] srv = srv_arr
    cdef Py_ssize_t[::1] cnt = cnt_arr
    cdef Py_ssize_t u, c, best_c
    cdef double total, best, p, s, e
    cdef double out = 0.0
    for u in range(n_ue):
        total = 0.0
        best = -1.0
        best_c = 0
        for c in range(n_cell):
            p = gain_lin[u, c] * tx_mw[c]
            total += p
            if p > best:
                best = p
                best_c = c
        s = best / (total - best + noise_mw)
        if s < sinr_floor_lin:
            e = 0.0
        else:
            e = log2(1.0 + s / snr_gap)
            if e > eff_cap:
                e = eff_cap
        eff[u] = e
        srv[u] = best_c
        cnt[best_c] += 1
    for u in range(n_ue):
        out += eff[u] * (bandwidth_hz / cnt[srv[u]])
    return out
