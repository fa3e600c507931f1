"""Pure NumPy implementation of the event-loop kernel.

Bit-compatible with the compiled extension: both consume the same uniform
pairs in the same order and accumulate rate sums sequentially (np.cumsum is
a sequential recurrence), so site selection and waiting times agree to the
last bit and a fixed seed yields the identical path either way.
"""

import math

import numpy as np

COMPILED = False


def run_block(spins, codes, rates, table, affect_idx, t, T, u, times_out, sites_out, record):
    """Consume uniform pairs from u, advancing the event loop.

    Returns (t, pairs_used, events_written, done).  spins, codes, rates are
    updated in place.  Each event consumes exactly two uniforms: waiting
    time and site selection.
    """
    n_pairs = len(u) // 2
    w = affect_idx.shape[1]
    n_events = 0
    used = 0
    done = False
    while used < n_pairs:
        cum = np.cumsum(rates)
        total = cum[-1]
        u1 = u[2 * used]
        u2 = u[2 * used + 1]
        used += 1
        dt = -math.log(u1) / total
        if t + dt > T:
            t = T
            done = True
            break
        t = t + dt
        target = u2 * total
        i = int(np.searchsorted(cum, target, side="right"))
        if i >= len(rates):
            i = len(rates) - 1
        spins[i] = -spins[i]
        for k in range(w):
            j = affect_idx[i, k]
            codes[j] ^= 1 << k
            rates[j] = table[codes[j]]
        if record:
            times_out[n_events] = t
            sites_out[n_events] = i
        n_events += 1
    return t, used, n_events, done
