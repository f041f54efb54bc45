"""Scheduling policies: projected-risk planning plus four baselines.

Every policy is a pure function from an immutable stage snapshot to a
SchedulePlan. The projected-risk scheduler ranks calls by how close their
workflow is projected to land to its horizon and jointly picks the
prefill/decode pair with the earliest projected finish; baselines order
by reveal time, workflow arrival, laxity, or attained service.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .latency import ErrorConfig, LatencyModel, scheduler_estimate, service_time
from .model import Stage
from .projection import (
    ClusterArrays,
    best_decode_batch,
    best_pair_for_call,
    best_pairs_batch,
    decode_start_on,
)


class NonPositiveHorizon(ValueError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    greedy_threshold: int = 64     # queue size above which planning is one-pass
    llf_kappa: float = 1.0         # deadline scale for least-laxity-first

    def __post_init__(self) -> None:
        if self.greedy_threshold < 1:
            raise ValueError("greedy_threshold must be >= 1")


@dataclass(frozen=True)
class CallView:
    """Immutable per-call slice of runtime state handed to planners."""

    call_id: int
    workflow_id: int
    a_w: float
    input_len: int
    predicted_output_len: int
    reveal_time: float
    topo_depth: int
    revision: int
    prefill_instance: int | None
    decode_instance: int | None
    decode_locked: bool
    horizon: float
    remaining_path: float   # workflow's remaining critical-path estimate
    attained: float         # workflow's consumed execution seconds

    @property
    def demand(self) -> float:
        return float(self.input_len + self.predicted_output_len)


@dataclass(frozen=True)
class StageSnapshot:
    """Runtime state frozen at planner invocation time."""

    time: float
    stage: Stage
    waiting: tuple[CallView, ...]             # sorted by (a_w, wf, call)
    pf_avail: tuple[float, ...]               # estimated availability per prefill
    decode_intervals: tuple[tuple[tuple[float, float, float], ...], ...]


@dataclass(frozen=True)
class PlanEntry:
    call_id: int
    prefill_instance: int | None
    decode_instance: int
    rank: int
    revision: int
    lock_decode: bool


@dataclass
class SchedulePlan:
    plan_id: int
    stage: Stage
    created_at: float
    entries: list[PlanEntry]
    sim_latency: float = 0.0
    infeasible: list[int] = field(default_factory=list)  # flagged, remain waiting
    outcomes: dict[int, str] = field(default_factory=dict)  # call_id -> Applied|StaleIgnored


def projected_ratio(now: float, a_w: float, delta: float, horizon: float) -> float:
    """Urgency of a call: projected elapsed workflow time over its horizon."""
    if horizon <= 0:
        raise NonPositiveHorizon(f"horizon must be positive, got {horizon}")
    return ((now - a_w) + delta) / horizon


class Policy:
    """Base planner: shared cost-row construction and plan assembly."""

    name = "base"
    locks_decode = False

    def __init__(
        self,
        arrays: ClusterArrays,
        model: LatencyModel,
        err: ErrorConfig,
        cfg: PolicyConfig | None = None,
    ):
        self.arrays = arrays
        self.model = model
        self.err = err
        self.cfg = cfg or PolicyConfig()
        self._next_plan_id = 0

    def plan(self, snap: StageSnapshot) -> SchedulePlan:
        plan_id = self._next_plan_id
        self._next_plan_id += 1
        if snap.stage is Stage.PREFILL:
            committed, infeasible = self._plan_prefill(snap)
        else:
            committed, infeasible = self._plan_decode(snap)
        entries = self._rank_entries(snap.stage, committed)
        return SchedulePlan(
            plan_id=plan_id,
            stage=snap.stage,
            created_at=snap.time,
            entries=entries,
            infeasible=infeasible,
        )

    # Subclasses produce [(view, prefill_idx, decode_idx)] in priority order.
    def _plan_prefill(self, snap):
        raise NotImplementedError

    def _plan_decode(self, snap):
        raise NotImplementedError

    def _rank_entries(self, stage: Stage, committed) -> list[PlanEntry]:
        per_instance: dict[int, int] = {}
        entries: list[PlanEntry] = []
        for view, p_idx, d_idx in committed:
            key = p_idx if stage is Stage.PREFILL else d_idx
            rank = per_instance.get(key, 0) + 1
            per_instance[key] = rank
            entries.append(
                PlanEntry(
                    call_id=view.call_id,
                    prefill_instance=(
                        self.arrays.prefill_ids[p_idx] if stage is Stage.PREFILL else None
                    ),
                    decode_instance=self.arrays.decode_ids[d_idx],
                    rank=rank,
                    revision=view.revision,
                    lock_decode=self.locks_decode and stage is Stage.PREFILL,
                )
            )
        return entries

    # ---- shared helpers -------------------------------------------------

    def _cost_rows(self, views):
        n = len(views)
        arrays = self.arrays
        pf = np.empty((n, arrays.n_prefill), dtype=np.float64)
        dec = np.empty((n, arrays.n_decode), dtype=np.float64)
        for i, v in enumerate(views):
            for j, inst in enumerate(arrays.cluster.prefill):
                pf[i, j] = scheduler_estimate(
                    service_time(v.input_len, inst.gpu_class, self.model, Stage.PREFILL),
                    v.call_id,
                    self.err,
                )
            for j, inst in enumerate(arrays.cluster.decode):
                dec[i, j] = scheduler_estimate(
                    service_time(
                        v.predicted_output_len, inst.gpu_class, self.model, Stage.DECODE
                    ),
                    v.call_id,
                    self.err,
                )
        return pf, dec

    def _kv_demand(self, views):
        kv = np.asarray(
            [v.input_len * self.model.kv_bytes_per_token for v in views],
            dtype=np.float64,
        )
        demand = np.asarray([v.demand for v in views], dtype=np.float64)
        return kv, demand

    def _split_feasible(self, views):
        cap_max = float(self.arrays.caps.max())
        feasible = [v for v in views if v.demand <= cap_max]
        infeasible = [v.call_id for v in views if v.demand > cap_max]
        return feasible, infeasible

    def _commit_pair(self, now, view, p, d, pf_row, dec_row, pf_avail, ledgers):
        """Book a call onto (p, d) in the simulated availability state."""
        arrays = self.arrays
        kv = view.input_len * self.model.kv_bytes_per_token
        avail = pf_avail[p]
        start_p = avail if avail > now else now
        t_pf = start_p + pf_row[p]
        r = t_pf + arrays.setup + kv * arrays.inv_bw[p * arrays.n_decode + d]
        s = decode_start_on(view.demand, r, dec_row[d], d, arrays, ledgers)
        pf_avail[p] = t_pf
        ledgers[d].append((s, s + dec_row[d], view.demand))

    def _commit_decode(self, now, view, d, dec_row, ledgers):
        s = decode_start_on(view.demand, now, dec_row[d], d, self.arrays, ledgers)
        ledgers[d].append((s, s + dec_row[d], view.demand))


class ProjectedRiskPolicy(Policy):
    """Joint prefill-decode planner ranking calls by projected horizon risk.

    Small queues run a recomputing greedy: pick the most urgent call,
    book its best pair into the simulated state, recompute the remaining
    projections. Larger queues are ordered once by the same risk score.
    Prefill plan entries lock the chosen decode instance.
    """

    name = "hexagent"
    locks_decode = True

    def _plan_prefill(self, snap: StageSnapshot):
        views, infeasible = self._split_feasible(list(snap.waiting))
        if not views:
            return [], infeasible
        now = snap.time
        pf_cost, dec_cost = self._cost_rows(views)
        kv, demand = self._kv_demand(views)
        pf_avail = np.asarray(snap.pf_avail, dtype=np.float64)
        ledgers = [list(iv) for iv in snap.decode_intervals]
        committed = []
        if len(views) <= self.cfg.greedy_threshold:
            remaining = list(range(len(views)))
            while remaining:
                idx = np.asarray(remaining, dtype=np.intp)
                deltas, ps, ds = best_pairs_batch(
                    now, kv[idx], demand[idx],
                    pf_cost[idx], dec_cost[idx],
                    pf_avail, self.arrays, ledgers,
                )
                best_i = self._argmax_risk(now, views, remaining, deltas)
                pos = remaining.index(best_i)
                p, d = int(ps[pos]), int(ds[pos])
                v = views[best_i]
                self._commit_pair(
                    now, v, p, d, pf_cost[best_i], dec_cost[best_i], pf_avail, ledgers
                )
                committed.append((v, p, d))
                remaining.remove(best_i)
        else:
            deltas, ps, ds = best_pairs_batch(
                now, kv, demand, pf_cost, dec_cost, pf_avail, self.arrays, ledgers
            )
            order = self._risk_order(now, views, deltas)
            for i in order:
                v = views[i]
                choice = best_pair_for_call(
                    now, kv[i], demand[i], pf_cost[i], dec_cost[i],
                    pf_avail, self.arrays, ledgers,
                )
                p, d = choice.prefill_idx, choice.decode_idx
                self._commit_pair(
                    now, v, p, d, pf_cost[i], dec_cost[i], pf_avail, ledgers
                )
                committed.append((v, p, d))
        return committed, infeasible

    def _plan_decode(self, snap: StageSnapshot):
        views, infeasible = self._split_feasible(list(snap.waiting))
        if not views:
            return [], infeasible
        now = snap.time
        _, dec_cost = self._cost_rows(views)
        _, demand = self._kv_demand(views)
        ready = np.full(len(views), now, dtype=np.float64)
        lock_idx = np.asarray(
            [
                self.arrays.decode_index(v.decode_instance) if v.decode_locked else -1
                for v in views
            ],
            dtype=np.int64,
        )
        ledgers = [list(iv) for iv in snap.decode_intervals]
        committed = []
        if len(views) <= self.cfg.greedy_threshold:
            remaining = list(range(len(views)))
            while remaining:
                idx = np.asarray(remaining, dtype=np.intp)
                deltas, ds = best_decode_batch(
                    now, demand[idx], ready[idx], dec_cost[idx],
                    lock_idx[idx], self.arrays, ledgers,
                )
                best_i = self._argmax_risk(now, views, remaining, deltas)
                pos = remaining.index(best_i)
                d = int(ds[pos])
                v = views[best_i]
                self._commit_decode(now, v, d, dec_cost[best_i], ledgers)
                committed.append((v, -1, d))
                remaining.remove(best_i)
        else:
            deltas, ds = best_decode_batch(
                now, demand, ready, dec_cost, lock_idx, self.arrays, ledgers
            )
            order = self._risk_order(now, views, deltas)
            for i in order:
                v = views[i]
                one_delta, one_d = best_decode_batch(
                    now, demand[i : i + 1], ready[i : i + 1],
                    dec_cost[i : i + 1], lock_idx[i : i + 1],
                    self.arrays, ledgers,
                )
                d = int(one_d[0])
                self._commit_decode(now, v, d, dec_cost[i], ledgers)
                committed.append((v, -1, d))
        return committed, infeasible

    def _argmax_risk(self, now, views, remaining, deltas):
        best_key = None
        best_i = -1
        for pos, i in enumerate(remaining):
            v = views[i]
            risk = projected_ratio(now, v.a_w, float(deltas[pos]), v.horizon)
            key = (-risk, v.a_w, v.workflow_id, v.call_id)
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
        return best_i

    def _risk_order(self, now, views, deltas):
        keyed = [
            (
                -projected_ratio(now, v.a_w, float(deltas[i]), v.horizon),
                v.a_w,
                v.workflow_id,
                v.call_id,
                i,
            )
            for i, v in enumerate(views)
        ]
        keyed.sort()
        return [k[-1] for k in keyed]


def project_prefill_delta(
    snap: StageSnapshot,
    view: CallView,
    arrays: ClusterArrays,
    model: LatencyModel,
    err: ErrorConfig,
):
    """Best-pair projection for a single waiting-prefill call.

    Returns (delta_seconds, prefill_instance_id, decode_instance_id);
    raises NoFeasibleDecode when no decode instance can ever hold it.
    """
    helper = Policy(arrays, model, err)
    pf_cost, dec_cost = helper._cost_rows([view])
    kv, demand = helper._kv_demand([view])
    choice = best_pair_for_call(
        snap.time, float(kv[0]), float(demand[0]), pf_cost[0], dec_cost[0],
        np.asarray(snap.pf_avail, dtype=np.float64),
        arrays,
        [list(iv) for iv in snap.decode_intervals],
    )
    if not choice.feasible:
        from .horizon import NoFeasibleDecode

        raise NoFeasibleDecode(f"call {view.call_id} fits no decode instance")
    return (
        choice.delta,
        arrays.prefill_ids[choice.prefill_idx],
        arrays.decode_ids[choice.decode_idx],
    )


class _OrderedPolicy(Policy):
    """Baselines: a one-dimensional priority order plus simple placement."""

    joint_placement = False  # least projected finish pair vs load balance

    def _priority_key(self, snap: StageSnapshot, view: CallView):
        raise NotImplementedError

    def _ordered(self, snap):
        views, infeasible = self._split_feasible(list(snap.waiting))
        views.sort(key=lambda v: self._priority_key(snap, v))
        return views, infeasible

    def _plan_prefill(self, snap: StageSnapshot):
        views, infeasible = self._ordered(snap)
        now = snap.time
        pf_cost, dec_cost = self._cost_rows(views)
        kv, demand = self._kv_demand(views)
        pf_avail = np.asarray(snap.pf_avail, dtype=np.float64)
        ledgers = [list(iv) for iv in snap.decode_intervals]
        committed = []
        if self.joint_placement:
            for i, v in enumerate(views):
                choice = best_pair_for_call(
                    now, kv[i], demand[i], pf_cost[i], dec_cost[i],
                    pf_avail, self.arrays, ledgers,
                )
                p, d = choice.prefill_idx, choice.decode_idx
                self._commit_pair(now, v, p, d, pf_cost[i], dec_cost[i], pf_avail, ledgers)
                committed.append((v, p, d))
        else:
            pf_out = np.asarray(
                [max(0.0, a - now) for a in pf_avail], dtype=np.float64
            )
            dec_out = np.asarray(
                [
                    sum(max(0.0, e - now) for _, e, _ in iv)
                    for iv in snap.decode_intervals
                ],
                dtype=np.float64,
            )
            caps = self.arrays.caps
            for i, v in enumerate(views):
                p = int(np.argmin(pf_out))
                feas = [j for j in range(len(caps)) if v.demand <= caps[j]]
                d = min(feas, key=lambda j: (dec_out[j], j))
                pf_out[p] += pf_cost[i, p]
                dec_out[d] += dec_cost[i, d]
                committed.append((v, p, d))
        return committed, infeasible

    def _plan_decode(self, snap: StageSnapshot):
        views, infeasible = self._ordered(snap)
        now = snap.time
        _, dec_cost = self._cost_rows(views)
        ledgers = [list(iv) for iv in snap.decode_intervals]
        committed = []
        if self.joint_placement:
            for i, v in enumerate(views):
                lock = (
                    self.arrays.decode_index(v.decode_instance)
                    if v.decode_locked
                    else -1
                )
                one_delta, one_d = best_decode_batch(
                    now,
                    np.asarray([v.demand]),
                    np.asarray([now], dtype=np.float64),
                    dec_cost[i : i + 1],
                    np.asarray([lock], dtype=np.int64),
                    self.arrays,
                    ledgers,
                )
                d = int(one_d[0])
                self._commit_decode(now, v, d, dec_cost[i], ledgers)
                committed.append((v, -1, d))
        else:
            dec_out = np.asarray(
                [
                    sum(max(0.0, e - now) for _, e, _ in iv)
                    for iv in snap.decode_intervals
                ],
                dtype=np.float64,
            )
            caps = self.arrays.caps
            for i, v in enumerate(views):
                if v.decode_locked:
                    d = self.arrays.decode_index(v.decode_instance)
                else:
                    feas = [j for j in range(len(caps)) if v.demand <= caps[j]]
                    d = min(feas, key=lambda j: (dec_out[j], j))
                dec_out[d] += dec_cost[i, d]
                committed.append((v, -1, d))
        return committed, infeasible


class PerCallFcfsPolicy(_OrderedPolicy):
    """Each revealed call is an independent request served in reveal order."""

    name = "fcfs-call"

    def _priority_key(self, snap, v):
        return (v.reveal_time, v.call_id)


class WorkflowFcfsPolicy(_OrderedPolicy):
    """Preserves workflow arrival order, then DAG order within a workflow."""

    name = "fcfs-wf"

    def _priority_key(self, snap, v):
        return (v.a_w, v.workflow_id, v.topo_depth, v.call_id)


class WorkflowLlfPolicy(_OrderedPolicy):
    """Least laxity first against a horizon-scaled deadline."""

    name = "llf"
    joint_placement = True

    def _priority_key(self, snap, v):
        deadline = v.a_w + self.cfg.llf_kappa * v.horizon
        laxity = deadline - snap.time - v.remaining_path
        return (laxity, v.a_w, v.workflow_id, v.call_id)


class AttainedServicePolicy(_OrderedPolicy):
    """Least attained service at workflow granularity."""

    name = "atlas"
    joint_placement = True

    def _priority_key(self, snap, v):
        return (v.attained, v.a_w, v.workflow_id, v.call_id)


POLICIES = {
    cls.name: cls
    for cls in (
        ProjectedRiskPolicy,
        PerCallFcfsPolicy,
        WorkflowFcfsPolicy,
        WorkflowLlfPolicy,
        AttainedServicePolicy,
    )
}


def make_policy(
    name: str,
    arrays: ClusterArrays,
    model: LatencyModel,
    err: ErrorConfig,
    cfg: PolicyConfig | None = None,
) -> Policy:
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(
            f"unknown policy {name!r}; choose from {sorted(POLICIES)}"
        ) from None
    return cls(arrays, model, err, cfg)
