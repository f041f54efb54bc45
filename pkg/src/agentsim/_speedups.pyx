# Compiled mirror of agentsim._kernels_py. Expression order is kept
# identical to the pure-Python module so both produce bit-equal doubles;
# edit the two files together.

from libc.math cimport INFINITY

IMPL = "cython"


cdef double _efs(
    const double[::1] seg_start,
    const double[::1] seg_end,
    const double[::1] seg_occ,
    Py_ssize_t lo,
    Py_ssize_t hi,
    double cap,
    double demand,
    double ready,
    double duration,
) noexcept nogil:
    cdef double limit = cap - demand
    cdef double t, end
    cdef Py_ssize_t j0, j
    cdef bint moved
    if limit < 0:
        return INFINITY
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


def earliest_feasible_start(
    const double[::1] seg_start,
    const double[::1] seg_end,
    const double[::1] seg_occ,
    Py_ssize_t lo,
    Py_ssize_t hi,
    double cap,
    double demand,
    double ready,
    double duration,
):
    return _efs(seg_start, seg_end, seg_occ, lo, hi, cap, demand, ready, duration)


def best_pairs(
    double now,
    const double[::1] kv_bytes,
    const double[::1] demand,
    const double[::1] pf_avail,
    const double[::1] pf_cost,
    const double[::1] inv_bw,
    double setup,
    const double[::1] dec_cost,
    const double[::1] caps,
    const double[::1] seg_start,
    const double[::1] seg_end,
    const double[::1] seg_occ,
    const long long[::1] seg_off,
    double[::1] out_delta,
    long long[::1] out_p,
    long long[::1] out_d,
):
    cdef Py_ssize_t n_calls = out_delta.shape[0]
    cdef Py_ssize_t n_p = pf_avail.shape[0]
    cdef Py_ssize_t n_d = caps.shape[0]
    cdef Py_ssize_t c, p, d
    cdef long long bp, bd
    cdef double best, kv, m, avail, start_p, t_pf, dur, r, s, delta
    with nogil:
        for c in range(n_calls):
            best = INFINITY
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
                    s = _efs(
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
    double now,
    const double[::1] demand,
    const double[::1] ready,
    const double[::1] dec_cost,
    const double[::1] caps,
    const long long[::1] lock_idx,
    const double[::1] seg_start,
    const double[::1] seg_end,
    const double[::1] seg_occ,
    const long long[::1] seg_off,
    double[::1] out_delta,
    long long[::1] out_d,
):
    cdef Py_ssize_t n_calls = out_delta.shape[0]
    cdef Py_ssize_t n_d = caps.shape[0]
    cdef Py_ssize_t c, d, d_first, d_last
    cdef long long bd, lock
    cdef double best, m, dur, s, delta
    with nogil:
        for c in range(n_calls):
            best = INFINITY
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
                s = _efs(
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
