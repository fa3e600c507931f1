# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-loop kernel for the spin-flip simulator.

Mirrors _glauber_fallback.run_block exactly: sequential rate accumulation,
one uniform pair per event attempt, first-index-exceeding-target site
selection.  The two implementations produce bit-identical paths.
"""

from libc.math cimport log

import numpy as np

COMPILED = True


def run_block(signed char[::1] spins, long long[::1] codes, double[::1] rates,
              double[::1] table, int[:, ::1] affect_idx, double t, double T,
              double[::1] u, double[::1] times_out, long long[::1] sites_out,
              bint record):
    cdef Py_ssize_t n = rates.shape[0]
    cdef Py_ssize_t w = affect_idx.shape[1]
    cdef Py_ssize_t n_pairs = u.shape[0] // 2
    cdef Py_ssize_t used = 0, n_events = 0
    cdef Py_ssize_t i, j, k, idx
    cdef double total, acc, u1, u2, dt, target
    cdef bint done = False

    while used < n_pairs:
        total = 0.0
        for idx in range(n):
            total = total + rates[idx]
        u1 = u[2 * used]
        u2 = u[2 * used + 1]
        used += 1
        dt = -log(u1) / total
        if t + dt > T:
            t = T
            done = True
            break
        t = t + dt
        target = u2 * total
        acc = 0.0
        i = n - 1
        for idx in range(n):
            acc = acc + rates[idx]
            if acc > target:
                i = idx
                break
        spins[i] = -spins[i]
        for k in range(w):
            j = affect_idx[i, k]
            codes[j] = codes[j] ^ (<long long>1 << k)
            rates[j] = table[codes[j]]
        if record:
            times_out[n_events] = t
            sites_out[n_events] = i
        n_events += 1
    return t, used, n_events, done
