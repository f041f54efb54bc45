"""Decode KV-capacity ledgers: token occupancy intervals per instance.

A ledger holds half-open intervals [start, end) each occupying a token
count; the invariant is that at every instant the sum of overlapping
occupancies stays within the instance capacity. Token counts are integers
stored as floats, so occupancy sums are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


class CapacityViolation(AssertionError):
    pass


@dataclass
class DecodeCapacityLedger:
    cap: float
    intervals: list[tuple[float, float, float]] = field(default_factory=list)

    def occupancy_at(self, t: float) -> float:
        return sum(m for s, e, m in self.intervals if s <= t < e)

    def add(self, start: float, end: float, tokens: float) -> None:
        """Insert an interval, asserting the capacity invariant holds."""
        peak = _peak_occupancy(self.intervals, start, end)
        if peak + tokens > self.cap:
            raise CapacityViolation(
                f"occupancy {peak}+{tokens} exceeds cap {self.cap} in [{start},{end})"
            )
        self.intervals.append((start, end, tokens))

    def prune(self, now: float) -> None:
        self.intervals = [iv for iv in self.intervals if iv[1] > now]


def _peak_occupancy(intervals, start: float, end: float) -> float:
    peak = 0.0
    bounds = {start}
    for s, e, _ in intervals:
        if s < end and e > start:
            bounds.add(max(s, start))
    for b in bounds:
        occ = sum(m for s, e, m in intervals if s <= b < e)
        if occ > peak:
            peak = occ
    return peak


def build_profile(intervals) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse intervals into disjoint step segments with summed occupancy.

    Returns (seg_start, seg_end, seg_occ) float64 arrays holding only
    segments with positive occupancy, ascending and non-overlapping.
    """
    if not intervals:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), empty.copy()
    events: list[tuple[float, float]] = []
    for s, e, m in intervals:
        if e > s and m > 0:
            events.append((s, m))
            events.append((e, -m))
    if not events:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), empty.copy()
    events.sort()
    starts: list[float] = []
    ends: list[float] = []
    occs: list[float] = []
    occ = 0.0
    prev = events[0][0]
    i = 0
    n = len(events)
    while i < n:
        t = events[i][0]
        if t > prev and occ > 0:
            # merge with previous segment when occupancy is unchanged
            if starts and ends[-1] == prev and occs[-1] == occ:
                ends[-1] = t
            else:
                starts.append(prev)
                ends.append(t)
                occs.append(occ)
        while i < n and events[i][0] == t:
            occ += events[i][1]
            i += 1
        prev = t
    return (
        np.asarray(starts, dtype=np.float64),
        np.asarray(ends, dtype=np.float64),
        np.asarray(occs, dtype=np.float64),
    )


def flatten_profiles(per_instance_intervals):
    """Concatenate per-instance profiles for the batched kernels.

    Returns (seg_start, seg_end, seg_occ, seg_off) where instance d owns
    segments seg_off[d]:seg_off[d+1].
    """
    starts: list[np.ndarray] = []
    ends: list[np.ndarray] = []
    occs: list[np.ndarray] = []
    off = [0]
    for intervals in per_instance_intervals:
        s, e, o = build_profile(intervals)
        starts.append(s)
        ends.append(e)
        occs.append(o)
        off.append(off[-1] + len(s))
    cat = lambda parts: (
        np.concatenate(parts) if parts else np.empty(0, dtype=np.float64)
    )
    return (
        cat(starts),
        cat(ends),
        cat(occs),
        np.asarray(off, dtype=np.int64),
    )


def earliest_feasible_start(
    ledger: DecodeCapacityLedger, demand: float, ready: float, duration: float
) -> float:
    """Earliest t >= ready where ``demand`` fits for [t, t+duration)."""
    s, e, o = build_profile(ledger.intervals)
    return kernels.earliest_feasible_start(
        s, e, o, 0, len(s), ledger.cap, demand, ready, duration
    )
