"""Shared projection machinery: per-pair finish-time estimates.

Planners, the fallback assigner, and the horizon computation all project
the same quantity for a call: wait + prefill + transfer + decode-capacity
wait + decode, minimized over (prefill, decode) instance pairs. This
module precomputes the cluster-shaped arrays the kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .capacity import build_profile, flatten_profiles
from .latency import ErrorConfig, LatencyModel, decode_time, prefill_time, scheduler_estimate
from .model import CallNode, ClusterSpec

_EMPTY_I64 = np.empty(0, dtype=np.int64)


@dataclass
class ClusterArrays:
    """Cluster constants flattened for the kernels (built once per run)."""

    cluster: ClusterSpec
    prefill_ids: list[int]
    decode_ids: list[int]
    caps: np.ndarray          # [D] tokens
    inv_bw: np.ndarray        # [P*D] seconds per byte
    setup: float

    @classmethod
    def build(cls, cluster: ClusterSpec) -> "ClusterArrays":
        prefill = cluster.prefill
        decode = cluster.decode
        n_p, n_d = len(prefill), len(decode)
        inv_bw = np.empty(n_p * n_d, dtype=np.float64)
        for i, p in enumerate(prefill):
            for j, d in enumerate(decode):
                bw = cluster.bandwidth_bytes_per_s[(p.gpu_class, d.gpu_class)]
                inv_bw[i * n_d + j] = 1.0 / bw
        caps = np.asarray(
            [float(d.kv_capacity_tokens) for d in decode], dtype=np.float64
        )
        return cls(
            cluster=cluster,
            prefill_ids=[p.instance_id for p in prefill],
            decode_ids=[d.instance_id for d in decode],
            caps=caps,
            inv_bw=inv_bw,
            setup=cluster.transfer_setup_s,
        )

    @property
    def n_prefill(self) -> int:
        return len(self.prefill_ids)

    @property
    def n_decode(self) -> int:
        return len(self.decode_ids)

    def prefill_index(self, instance_id: int) -> int:
        return self.prefill_ids.index(instance_id)

    def decode_index(self, instance_id: int) -> int:
        return self.decode_ids.index(instance_id)


def prefill_cost_row(
    call: CallNode, arrays: ClusterArrays, model: LatencyModel, err: ErrorConfig
) -> np.ndarray:
    """Scheduler-visible prefill seconds for one call on every prefill instance."""
    row = np.empty(arrays.n_prefill, dtype=np.float64)
    for i, inst in enumerate(arrays.cluster.prefill):
        row[i] = scheduler_estimate(prefill_time(call, inst, model), call.call_id, err)
    return row


def decode_cost_row(
    call: CallNode,
    arrays: ClusterArrays,
    model: LatencyModel,
    err: ErrorConfig,
    use_predicted: bool = True,
) -> np.ndarray:
    """Scheduler-visible decode seconds for one call on every decode instance."""
    row = np.empty(arrays.n_decode, dtype=np.float64)
    for i, inst in enumerate(arrays.cluster.decode):
        row[i] = scheduler_estimate(
            decode_time(call, inst, model, use_predicted), call.call_id, err
        )
    return row


@dataclass
class PairChoice:
    delta: float
    prefill_idx: int
    decode_idx: int

    @property
    def feasible(self) -> bool:
        return self.decode_idx >= 0


def best_pair_for_call(
    now: float,
    kv_bytes: float,
    demand: float,
    pf_cost: np.ndarray,
    dec_cost: np.ndarray,
    pf_avail: np.ndarray,
    arrays: ClusterArrays,
    decode_intervals,
) -> PairChoice:
    """Minimum projected finish over all feasible (prefill, decode) pairs."""
    seg_s, seg_e, seg_o, seg_off = flatten_profiles(decode_intervals)
    out_delta = np.empty(1, dtype=np.float64)
    out_p = np.empty(1, dtype=np.int64)
    out_d = np.empty(1, dtype=np.int64)
    kernels.best_pairs(
        now,
        np.asarray([kv_bytes]),
        np.asarray([demand]),
        pf_avail,
        pf_cost,
        arrays.inv_bw,
        arrays.setup,
        dec_cost,
        arrays.caps,
        seg_s,
        seg_e,
        seg_o,
        seg_off,
        out_delta,
        out_p,
        out_d,
    )
    return PairChoice(float(out_delta[0]), int(out_p[0]), int(out_d[0]))


def best_pairs_batch(
    now: float,
    kv_bytes: np.ndarray,
    demand: np.ndarray,
    pf_cost: np.ndarray,
    dec_cost: np.ndarray,
    pf_avail: np.ndarray,
    arrays: ClusterArrays,
    decode_intervals,
):
    """Vector of best-pair projections for many calls at once."""
    n = len(kv_bytes)
    seg_s, seg_e, seg_o, seg_off = flatten_profiles(decode_intervals)
    out_delta = np.empty(n, dtype=np.float64)
    out_p = np.empty(n, dtype=np.int64)
    out_d = np.empty(n, dtype=np.int64)
    kernels.best_pairs(
        now,
        kv_bytes,
        demand,
        pf_avail,
        pf_cost.reshape(-1),
        arrays.inv_bw,
        arrays.setup,
        dec_cost.reshape(-1),
        arrays.caps,
        seg_s,
        seg_e,
        seg_o,
        seg_off,
        out_delta,
        out_p,
        out_d,
    )
    return out_delta, out_p, out_d


def best_decode_batch(
    now: float,
    demand: np.ndarray,
    ready: np.ndarray,
    dec_cost: np.ndarray,
    lock_idx: np.ndarray,
    arrays: ClusterArrays,
    decode_intervals,
):
    """Vector of best decode-instance projections (ready times per call)."""
    n = len(demand)
    seg_s, seg_e, seg_o, seg_off = flatten_profiles(decode_intervals)
    out_delta = np.empty(n, dtype=np.float64)
    out_d = np.empty(n, dtype=np.int64)
    kernels.best_decode_starts(
        now,
        demand,
        ready,
        dec_cost.reshape(-1),
        arrays.caps,
        lock_idx,
        seg_s,
        seg_e,
        seg_o,
        seg_off,
        out_delta,
        out_d,
    )
    return out_delta, out_d


def decode_start_on(
    demand: float,
    ready: float,
    duration: float,
    d_idx: int,
    arrays: ClusterArrays,
    decode_intervals,
) -> float:
    """Earliest feasible start for one call on one decode instance."""
    seg_s, seg_e, seg_o = build_profile(decode_intervals[d_idx])
    return kernels.earliest_feasible_start(
        seg_s, seg_e, seg_o, 0, len(seg_s),
        float(arrays.caps[d_idx]), demand, ready, duration,
    )
