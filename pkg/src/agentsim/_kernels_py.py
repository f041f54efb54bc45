"""Pure-Python reference implementation of the planner hot kernels.

The compiled module (agentsim._speedups) mirrors these functions
statement-for-statement; both must produce bit-identical results so that
simulations are reproducible regardless of which implementation is
selected at import. Keep arithmetic expression order in sync with the
.pyx file when editing.

Ledger profiles are step functions given as disjoint ascending segments
(seg_start[i], seg_end[i]) carrying seg_occ[i] occupied tokens; occupancy
is zero outside the segments. Per-instance profiles are concatenated into
flat arrays with seg_off[d]..seg_off[d+1] delimiting instance d.
"""

from __future__ import annotations

INF = float("inf")

IMPL = "python"


def earliest_feasible_start(
    seg_start, seg_end, seg_occ, lo, hi, cap, demand, ready, duration
):
    """Smallest t >= ready where demand fits under cap for [t, t+duration).

    Scans segment boundaries: whenever a segment inside the candidate
    window exceeds cap - demand, the candidate jumps to that segment's
    end. Requires duration > 0.
    """
    limit = cap - demand
    if limit < 0:
        return INF
    t = ready
    j0 = lo
    while j0 < hi and seg_end[j0] <= t:
        j0 += 1
    while True:
        end = t + duration
        j = j0
        moved = False
        while j < hi and seg_start[j] < end:
            if seg_occ[j] > limit:
                t = seg_end[j]
                j0 = j + 1
                moved = True
                break
            j += 1
        if not moved:
            return t


def best_pairs(
    now,
    kv_bytes,
    demand,
    pf_avail,
    pf_cost,
    inv_bw,
    setup,
    dec_cost,
    caps,
    seg_start,
    seg_end,
    seg_occ,
    seg_off,
    out_delta,
    out_p,
    out_d,
):
    """Per call: min over (prefill, decode) pairs of projected finish - now.

    pf_cost is row-major [n_calls, n_prefill]; dec_cost and inv_bw follow
    the same convention. Ties resolve to the lowest prefill index, then
    the lowest decode index. Infeasible calls get delta = inf, indices -1.
    """
    n_calls = len(out_delta)
    n_p = len(pf_avail)
    n_d = len(caps)
    kv_bytes = _aslist(kv_bytes)
    demand = _aslist(demand)
    pf_avail = _aslist(pf_avail)
    pf_cost = _aslist(pf_cost)
    inv_bw = _aslist(inv_bw)
    dec_cost = _aslist(dec_cost)
    caps = _aslist(caps)
    seg_start = _aslist(seg_start)
    seg_end = _aslist(seg_end)
    seg_occ = _aslist(seg_occ)
    seg_off = _aslist(seg_off)
    for c in range(n_calls):
        best = INF
        bp = -1
        bd = -1
        kv = kv_bytes[c]
        m = demand[c]
        for p in range(n_p):
            avail = pf_avail[p]
            start_p = avail if avail > now else now
            t_pf = start_p + pf_cost[c * n_p + p]
            for d in range(n_d):
                if m > caps[d]:
                    continue
                dur = dec_cost[c * n_d + d]
                r = t_pf + setup + kv * inv_bw[p * n_d + d]
                s = earliest_feasible_start(
                    seg_start, seg_end, seg_occ,
                    seg_off[d], seg_off[d + 1],
                    caps[d], m, r, dur,
                )
                delta = (s + dur) - now
                if delta < best:
                    best = delta
                    bp = p
                    bd = d
        out_delta[c] = best
        out_p[c] = bp
        out_d[c] = bd


def best_decode_starts(
    now,
    demand,
    ready,
    dec_cost,
    caps,
    lock_idx,
    seg_start,
    seg_end,
    seg_occ,
    seg_off,
    out_delta,
    out_d,
):
    """Per call: min over decode instances of projected decode finish - now.

    lock_idx[c] >= 0 restricts call c to that instance; -1 means any
    capacity-feasible instance. dec_cost is row-major [n_calls, n_decode].
    """
    n_calls = len(out_delta)
    n_d = len(caps)
    demand = _aslist(demand)
    ready = _aslist(ready)
    dec_cost = _aslist(dec_cost)
    caps = _aslist(caps)
    lock_idx = _aslist(lock_idx)
    seg_start = _aslist(seg_start)
    seg_end = _aslist(seg_end)
    seg_occ = _aslist(seg_occ)
    seg_off = _aslist(seg_off)
    for c in range(n_calls):
        best = INF
        bd = -1
        m = demand[c]
        lock = lock_idx[c]
        d_first = 0
        d_last = n_d
        if lock >= 0:
            d_first = lock
            d_last = lock + 1
        for d in range(d_first, d_last):
            if m > caps[d]:
                continue
            dur = dec_cost[c * n_d + d]
            s = earliest_feasible_start(
                seg_start, seg_end, seg_occ,
                seg_off[d], seg_off[d + 1],
                caps[d], m, ready[c], dur,
            )
            delta = (s + dur) - now
            if delta < best:
                best = delta
                bd = d
        out_delta[c] = best
        out_d[c] = bd


def _aslist(x):
    # Plain lists index much faster than numpy scalars in the interpreter;
    # float(np.float64) round-trips exactly, so results are unchanged.
    return x.tolist() if hasattr(x, "tolist") else x
