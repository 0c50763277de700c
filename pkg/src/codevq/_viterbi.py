"""Compiled add-compare-select kernel shared by quantization and NSM estimation."""

import numpy as np
from numba import njit


@njit(cache=True)
def viterbi_blocks(cost, bounds, next_state, out1, out2):
    """Minimum-cost paths through independent zero-start, free-end trellis blocks.

    ``cost[2t + i, c]`` is the cost of emitting symbol ``c`` at position ``i`` of
    step ``t``; ``bounds`` holds block boundaries in steps.  Returns the input
    symbols of every step and the total path metric of every block.  Ties keep
    the lowest predecessor state and the lowest final state.
    """
    num_states, q = next_state.shape
    nblocks = bounds.shape[0] - 1
    u_out = np.empty(bounds[-1], np.int64)
    totals = np.empty(nblocks)
    longest = 0
    for blk in range(nblocks):
        longest = max(longest, bounds[blk + 1] - bounds[blk])
    prev = np.empty((longest, num_states), np.int32)
    pm = np.empty(num_states)
    new = np.empty(num_states)
    for blk in range(nblocks):
        t0 = bounds[blk]
        k = bounds[blk + 1] - t0
        pm[:] = np.inf
        pm[0] = 0.0
        offset = 0.0
        for t in range(k):
            new[:] = np.inf
            r0 = 2 * (t0 + t)
            for s in range(num_states):
                m = pm[s]
                if m == np.inf:
                    continue
                for u in range(q):
                    ns = next_state[s, u]
                    c = m + cost[r0, out1[s, u]] + cost[r0 + 1, out2[s, u]]
                    if c < new[ns]:
                        new[ns] = c
                        prev[t, ns] = s
            lo = np.inf
            for s in range(num_states):
                if new[s] < lo:
                    lo = new[s]
            for s in range(num_states):
                pm[s] = new[s] - lo
            offset += lo
        best = 0
        for s in range(1, num_states):
            if pm[s] < pm[best]:
                best = s
        totals[blk] = pm[best] + offset
        s = best
        for t in range(k - 1, -1, -1):
            u_out[t0 + t] = s % q
            s = prev[t, s]
    return u_out, totals
