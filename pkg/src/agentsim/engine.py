"""Deterministic event-driven simulation of the call lifecycle.

Calls move WaitingPrefill -> Prefill -> Transfer -> WaitingDecode ->
Decode -> Complete on a disaggregated cluster. Prefill instances are
single-server with a priority queue; decode instances admit calls in
priority order against a token-capacity ledger; transfers are pure
delays. Planners run logically asynchronously: a plan is computed at its
trigger event and lands after a simulated latency, applying only to
calls still waiting with an unchanged revision.
"""

from __future__ import annotations

import copy
import heapq
import time as _time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .capacity import DecodeCapacityLedger
from .horizon import HorizonTracker, metrics_horizon
from .latency import (
    ErrorConfig,
    PredictorConfig,
    decode_time,
    kv_size,
    predict_output_len,
    prefill_time,
    scheduler_estimate,
    transfer_latency,
)
from .model import (
    CallNode,
    CallState,
    ClusterSpec,
    Stage,
    Trace,
    WorkflowState,
    assign_topo_depths,
    mark_revealed,
    reveal_children,
    validate_trace,
)
from .policies import (
    CallView,
    PolicyConfig,
    SchedulePlan,
    StageSnapshot,
    make_policy,
)
from .projection import ClusterArrays, best_pair_for_call


class DeadlockDetected(RuntimeError):
    pass


class EventKind(Enum):
    # Heap tie-break rank is the enum order: completions, then queue
    # joins, then arrivals/reveals, then plan landings.
    DECODE_COMPLETE = 0
    PREFILL_COMPLETE = 1
    TRANSFER_COMPLETE = 2
    JOIN_PREFILL = 3
    WORKFLOW_ARRIVAL = 4
    CALL_REVEAL = 5
    PLAN_READY = 6
    # Log-only kinds (never scheduled on the heap).
    PREFILL_START = 7
    DECODE_START = 8


def trigger_stages(kind: EventKind, revealed_children: bool = False) -> set[Stage]:
    """Stages whose planner a processed event invokes."""
    if kind in (EventKind.WORKFLOW_ARRIVAL, EventKind.CALL_REVEAL):
        return {Stage.PREFILL}
    if kind is EventKind.DECODE_COMPLETE and revealed_children:
        return {Stage.PREFILL}
    if kind is EventKind.TRANSFER_COMPLETE:
        return {Stage.DECODE}
    return set()


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: EventKind
    subject: int   # call_id, workflow_id, or plan_id
    sequence: int


@dataclass
class PlannerInvocation:
    time: float
    stage: Stage
    queue_len: int
    wall_s: float
    sim_latency_s: float


@dataclass
class CallRecord:
    call_id: int
    workflow_id: int
    reveal_time: float
    prefill_start: float
    prefill_end: float
    transfer_end: float
    decode_start: float
    decode_end: float
    prefill_instance: int
    decode_instance: int
    decode_locked: bool


@dataclass
class WorkflowRecord:
    workflow_id: int
    arrival_time: float
    completion_time: float
    online_horizon: float
    n_calls: int


@dataclass
class SimResult:
    calls: list[CallRecord]
    workflows: list[WorkflowRecord]
    planner_records: list[PlannerInvocation]
    plans: list[SchedulePlan]
    events: list[SimEvent]
    fallback_assignments: list[tuple[float, int]]
    max_inflight: dict[Stage, int]
    horizon_history: dict[int, list[tuple[float, float]]]


@dataclass
class EngineConfig:
    planning_latency_s: float = 0.010
    bootstrap_s: float = 0.0
    est_error: ErrorConfig = field(default_factory=ErrorConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    policy: str = "fcfs-wf"
    policy_cfg: PolicyConfig = field(default_factory=PolicyConfig)


class _PrefillServer:
    def __init__(self, spec):
        self.spec = spec
        self.running: int | None = None
        self.queue: set[int] = set()


class _DecodeServer:
    def __init__(self, spec):
        self.spec = spec
        self.ledger = DecodeCapacityLedger(cap=float(spec.kv_capacity_tokens))
        self.waiting: set[int] = set()
        self.running: set[int] = set()


def run(trace: Trace, cluster: ClusterSpec, cfg: EngineConfig) -> SimResult:
    """Simulate ``trace`` on ``cluster`` to quiescence under cfg.policy."""
    return _Engine(trace, cluster, cfg).run()


class _Engine:
    def __init__(self, trace: Trace, cluster: ClusterSpec, cfg: EngineConfig):
        violations = validate_trace(trace)
        if violations:
            raise ValueError("invalid trace: " + "; ".join(map(str, violations)))
        self.trace = copy.deepcopy(trace)
        self.cluster = cluster
        self.cfg = cfg
        self.model = cluster.model_profile
        self.arrays = ClusterArrays.build(cluster)
        self.policy = make_policy(
            cfg.policy, self.arrays, self.model, cfg.est_error, cfg.policy_cfg
        )
        self.tracker = HorizonTracker(self.arrays, self.model)

        self.workflows: dict[int, WorkflowState] = {}
        self.calls: dict[int, CallNode] = {}
        for wf in self.trace.workflows:
            assign_topo_depths(wf)
            self.workflows[wf.workflow_id] = wf
            for call in wf.calls.values():
                if call.call_id in self.calls:
                    raise ValueError(f"duplicate call id {call.call_id} across trace")
                call.predicted_output_len = predict_output_len(call, cfg.predictor)
                self.calls[call.call_id] = call

        self.prefill = {i.instance_id: _PrefillServer(i) for i in cluster.prefill}
        self.decode = {i.instance_id: _DecodeServer(i) for i in cluster.decode}
        self.unassigned: set[int] = set()
        self.in_flight: dict[Stage, SchedulePlan | None] = {
            Stage.PREFILL: None,
            Stage.DECODE: None,
        }
        self.max_inflight = {Stage.PREFILL: 0, Stage.DECODE: 0}
        self._path_est: dict[int, float] = {}

        self.now = 0.0
        self._seq = 0
        self._heap: list[tuple[float, int, int, int]] = []  # (time, rank, seq, subject)
        self._payloads: dict[int, object] = {}
        self._kinds: dict[int, EventKind] = {}
        self.events: list[SimEvent] = []
        self.planner_records: list[PlannerInvocation] = []
        self.plans: list[SchedulePlan] = []
        self.fallbacks: list[tuple[float, int]] = []

    # ---- event plumbing --------------------------------------------------

    def _push(self, t: float, kind: EventKind, subject: int, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, kind.value, self._seq, subject))
        if payload is not None:
            self._payloads[self._seq] = payload
        self._kinds[self._seq] = kind

    def _log(self, kind: EventKind, subject: int) -> None:
        self._seq += 1
        self.events.append(SimEvent(self.now, kind, subject, self._seq))

    # ---- main loop ---------------------------------------------------------

    def run(self) -> SimResult:
        for wf in self.trace.workflows:
            self._push(wf.arrival_time, EventKind.WORKFLOW_ARRIVAL, wf.workflow_id)
        while self._heap:
            t, rank, seq, subject = heapq.heappop(self._heap)
            kind = self._kinds.pop(seq)
            payload = self._payloads.pop(seq, None)
            self.now = t
            self.events.append(SimEvent(t, kind, subject, seq))
            if kind is EventKind.WORKFLOW_ARRIVAL:
                self._on_arrival(subject)
            elif kind is EventKind.CALL_REVEAL:
                self._on_reveal(subject)
            elif kind is EventKind.PREFILL_COMPLETE:
                self._on_prefill_complete(subject)
            elif kind is EventKind.TRANSFER_COMPLETE:
                self._on_transfer_complete(subject)
            elif kind is EventKind.DECODE_COMPLETE:
                self._on_decode_complete(subject)
            elif kind is EventKind.JOIN_PREFILL:
                self._on_join_prefill(subject)
            elif kind is EventKind.PLAN_READY:
                self._on_plan_ready(payload)
        incomplete = sorted(
            cid for cid, c in self.calls.items() if c.state is not CallState.COMPLETE
        )
        if incomplete:
            states = {cid: self.calls[cid].state.value for cid in incomplete[:5]}
            raise DeadlockDetected(
                f"{len(incomplete)} calls never completed; first states: {states}"
            )
        return self._result()

    # ---- handlers ----------------------------------------------------------

    def _on_arrival(self, wf_id: int) -> None:
        wf = self.workflows[wf_id]
        if not wf.calls:
            wf.completion_time = self.now
            return
        for cid in wf.source_ids():
            mark_revealed(wf, cid, self.now)
            self.unassigned.add(cid)
        self.tracker.recompute(wf, self.now, self._seq)
        self._trigger(Stage.PREFILL)

    def _on_reveal(self, cid: int) -> None:
        call = self.calls[cid]
        wf = self.workflows[call.workflow_id]
        if cid in wf.revealed:
            return
        mark_revealed(wf, cid, self.now)
        self.unassigned.add(cid)
        self.tracker.recompute(wf, self.now, self._seq)
        self._trigger(Stage.PREFILL)

    def _on_prefill_complete(self, cid: int) -> None:
        call = self.calls[cid]
        server = self.prefill[call.prefill_instance]
        assert server.running == cid
        server.running = None
        wf = self.workflows[call.workflow_id]
        wf.attained_service += self.now - call.state_enter[CallState.PREFILL]
        call.enter_state(CallState.TRANSFER, self.now)
        src = server.spec.gpu_class
        dst = self.cluster.by_id(call.decode_instance).gpu_class
        lat = transfer_latency(kv_size(call, self.model), src, dst, self.cluster)
        self._push(self.now + lat, EventKind.TRANSFER_COMPLETE, cid)
        self._start_prefill_if_idle(server)

    def _on_transfer_complete(self, cid: int) -> None:
        call = self.calls[cid]
        call.enter_state(CallState.WAITING_DECODE, self.now)
        self.decode[call.decode_instance].waiting.add(cid)
        self._try_admissions(call.decode_instance)
        self._trigger(Stage.DECODE)

    def _on_decode_complete(self, cid: int) -> None:
        call = self.calls[cid]
        wf = self.workflows[call.workflow_id]
        server = self.decode[call.decode_instance]
        server.running.discard(cid)
        server.ledger.prune(self.now)
        wf.attained_service += self.now - call.state_enter[CallState.DECODE]
        call.enter_state(CallState.COMPLETE, self.now)
        wf.completed.add(cid)
        if wf.done:
            wf.completion_time = self.now
        revealed_now = False
        for child in reveal_children(wf, cid):
            delay = wf.calls[child].reveal_delay_s
            if delay <= 0:
                mark_revealed(wf, child, self.now)
                self.unassigned.add(child)
                revealed_now = True
            else:
                self._push(self.now + delay, EventKind.CALL_REVEAL, child)
        ts = call.state_enter
        self.tracker.observe_completion(
            wf,
            cid,
            prefill_s=ts[CallState.TRANSFER] - ts[CallState.PREFILL],
            transfer_s=ts[CallState.WAITING_DECODE] - ts[CallState.TRANSFER],
            decode_s=self.now - ts[CallState.DECODE],
            now=self.now,
            event_id=self._seq,
        )
        self._try_admissions(call.decode_instance)
        for stage in trigger_stages(EventKind.DECODE_COMPLETE, revealed_now):
            self._trigger(stage)

    def _on_join_prefill(self, cid: int) -> None:
        call = self.calls[cid]
        if call.state is not CallState.WAITING_PREFILL:
            return
        call.pending_join = False
        server = self.prefill[call.prefill_instance]
        server.queue.add(cid)
        self._start_prefill_if_idle(server)

    def _on_plan_ready(self, plan: SchedulePlan) -> None:
        self.in_flight[plan.stage] = None
        self.apply_plan(plan)
        self._kick_starts()

    # ---- plan application --------------------------------------------------

    def apply_plan(self, plan: SchedulePlan) -> None:
        """Apply plan entries to still-waiting calls with matching revisions."""
        expected = (
            CallState.WAITING_PREFILL
            if plan.stage is Stage.PREFILL
            else CallState.WAITING_DECODE
        )
        for entry in plan.entries:
            call = self.calls[entry.call_id]
            if call.state is not expected or call.revision != entry.revision:
                plan.outcomes[entry.call_id] = "StaleIgnored"
                continue
            if plan.stage is Stage.PREFILL:
                self._apply_prefill_entry(call, entry)
            else:
                self._apply_decode_entry(call, entry)
            plan.outcomes[entry.call_id] = "Applied"

    def _apply_prefill_entry(self, call: CallNode, entry) -> None:
        old_pid = call.prefill_instance
        call.prefill_instance = entry.prefill_instance
        call.decode_instance = entry.decode_instance
        call.decode_locked = entry.lock_decode
        call.rank = entry.rank
        call.revision += 1
        if old_pid is None:
            self.unassigned.discard(call.call_id)
            self._dispatch(call)
        elif call.pending_join:
            pass  # joins its (updated) instance when bootstrap finishes
        elif old_pid != entry.prefill_instance:
            self.prefill[old_pid].queue.discard(call.call_id)
            self.prefill[entry.prefill_instance].queue.add(call.call_id)

    def _apply_decode_entry(self, call: CallNode, entry) -> None:
        old_did = call.decode_instance
        if call.decode_locked:
            assert entry.decode_instance == old_did, "planner moved a locked call"
        call.rank = entry.rank
        call.revision += 1
        if entry.decode_instance != old_did:
            self.decode[old_did].waiting.discard(call.call_id)
            self.decode[entry.decode_instance].waiting.add(call.call_id)
            call.decode_instance = entry.decode_instance

    def _dispatch(self, call: CallNode) -> None:
        """First assignment: bootstrap, then join the prefill queue."""
        if self.cfg.bootstrap_s > 0:
            call.pending_join = True
            self._push(
                self.now + self.cfg.bootstrap_s, EventKind.JOIN_PREFILL, call.call_id
            )
        else:
            self.prefill[call.prefill_instance].queue.add(call.call_id)

    # ---- serving ------------------------------------------------------------

    def _priority(self, cid: int):
        call = self.calls[cid]
        wf = self.workflows[call.workflow_id]
        return (call.rank, wf.arrival_time, call.workflow_id, cid)

    def _start_prefill_if_idle(self, server: _PrefillServer) -> None:
        if server.running is not None or not server.queue:
            return
        cid = min(server.queue, key=self._priority)
        server.queue.remove(cid)
        call = self.calls[cid]
        call.enter_state(CallState.PREFILL, self.now)
        self._log(EventKind.PREFILL_START, cid)
        dur = prefill_time(call, server.spec, self.model)
        server.running = cid
        self._push(self.now + dur, EventKind.PREFILL_COMPLETE, cid)

    def _try_admissions(self, d_id: int) -> None:
        server = self.decode[d_id]
        while server.waiting:
            cid = min(server.waiting, key=self._priority)
            call = self.calls[cid]
            m = float(call.input_len + call.predicted_output_len)
            if server.ledger.occupancy_at(self.now) + m > server.ledger.cap:
                break
            server.waiting.remove(cid)
            self._start_decode(call, server, m)

    def _start_decode(self, call: CallNode, server: _DecodeServer, m: float) -> None:
        call.enter_state(CallState.DECODE, self.now)
        self._log(EventKind.DECODE_START, call.call_id)
        dur = decode_time(call, server.spec, self.model, use_predicted=False)
        server.ledger.add(self.now, self.now + dur, m)
        server.running.add(call.call_id)
        self._push(self.now + dur, EventKind.DECODE_COMPLETE, call.call_id)

    def _kick_starts(self) -> None:
        for pid in sorted(self.prefill):
            self._start_prefill_if_idle(self.prefill[pid])
        for did in sorted(self.decode):
            self._try_admissions(did)

    # ---- planning -----------------------------------------------------------

    def _trigger(self, stage: Stage) -> None:
        if self.in_flight[stage] is not None:
            self._fallback_pass(stage)
        else:
            self._invoke_planner(stage)

    def _waiting_ids(self, stage: Stage) -> list[int]:
        want = (
            CallState.WAITING_PREFILL if stage is Stage.PREFILL else CallState.WAITING_DECODE
        )
        return sorted(cid for cid, c in self.calls.items() if c.state is want)

    def _invoke_planner(self, stage: Stage) -> None:
        waiting = self._waiting_ids(stage)
        if not waiting:
            return
        snap = self._build_snapshot(stage, waiting)
        t0 = _time.perf_counter()
        plan = self.policy.plan(snap)
        wall = _time.perf_counter() - t0
        plan.sim_latency = self.cfg.planning_latency_s
        self.planner_records.append(
            PlannerInvocation(self.now, stage, len(waiting), wall, plan.sim_latency)
        )
        self.plans.append(plan)
        if plan.sim_latency <= 0:
            self.apply_plan(plan)
            self._kick_starts()
        else:
            self.in_flight[stage] = plan
            inflight = sum(1 for p in self.in_flight.values() if p is not None)
            self.max_inflight[stage] = max(self.max_inflight[stage], 1)
            assert inflight <= 2  # one per stage
            self._push(
                self.now + plan.sim_latency, EventKind.PLAN_READY, plan.plan_id, plan
            )

    def _fallback_pass(self, stage: Stage) -> None:
        """Assign still-unassigned calls while this stage's plan is in flight."""
        if stage is not Stage.PREFILL:
            return  # waiting-decode calls always carry an assignment
        pending = sorted(self.unassigned, key=self._arrival_key)
        assigned_any = False
        for cid in pending:
            call = self.calls[cid]
            pf_row, dec_row = self._estimate_rows(call)
            choice = best_pair_for_call(
                self.now,
                kv_size(call, self.model),
                float(call.input_len + call.predicted_output_len),
                pf_row,
                dec_row,
                self._fallback_prefill_avail(),
                self.arrays,
                self._visible_decode_intervals(),
            )
            if not choice.feasible:
                continue  # retried at the next invocation
            call.prefill_instance = self.arrays.prefill_ids[choice.prefill_idx]
            call.decode_instance = self.arrays.decode_ids[choice.decode_idx]
            self.unassigned.discard(cid)
            self.fallbacks.append((self.now, cid))
            self._dispatch(call)
            assigned_any = True
        if assigned_any:
            self._kick_starts()

    def _arrival_key(self, cid: int):
        call = self.calls[cid]
        return (self.workflows[call.workflow_id].arrival_time, call.workflow_id, cid)

    def _estimate_rows(self, call: CallNode):
        err = self.cfg.est_error
        pf = np.asarray(
            [
                scheduler_estimate(prefill_time(call, inst, self.model), call.call_id, err)
                for inst in self.cluster.prefill
            ],
            dtype=np.float64,
        )
        dec = np.asarray(
            [
                scheduler_estimate(
                    decode_time(call, inst, self.model, use_predicted=True),
                    call.call_id,
                    err,
                )
                for inst in self.cluster.decode
            ],
            dtype=np.float64,
        )
        return pf, dec

    def _fallback_prefill_avail(self) -> np.ndarray:
        """Availability including queued work (the fallback call joins the tail)."""
        avail = []
        for pid in sorted(self.prefill):
            server = self.prefill[pid]
            t = self.now
            if server.running is not None:
                run = self.calls[server.running]
                est = scheduler_estimate(
                    prefill_time(run, server.spec, self.model),
                    run.call_id,
                    self.cfg.est_error,
                )
                t = max(t, run.state_enter[CallState.PREFILL] + est)
            for qid in sorted(server.queue):
                q = self.calls[qid]
                t += scheduler_estimate(
                    prefill_time(q, server.spec, self.model), qid, self.cfg.est_error
                )
            avail.append(t)
        return np.asarray(avail, dtype=np.float64)

    def _visible_decode_intervals(self):
        """Scheduler-visible running-decode intervals per instance."""
        out = []
        for did in sorted(self.decode):
            server = self.decode[did]
            ivs = []
            for cid in sorted(server.running):
                call = self.calls[cid]
                start = call.state_enter[CallState.DECODE]
                est = scheduler_estimate(
                    decode_time(call, server.spec, self.model, use_predicted=True),
                    cid,
                    self.cfg.est_error,
                )
                ivs.append(
                    (start, start + est, float(call.input_len + call.predicted_output_len))
                )
            out.append(tuple(ivs))
        return tuple(out)

    def _build_snapshot(self, stage: Stage, waiting: list[int]) -> StageSnapshot:
        views = []
        remaining_cache: dict[int, float] = {}
        attained_cache: dict[int, float] = {}
        for cid in waiting:
            call = self.calls[cid]
            wf = self.workflows[call.workflow_id]
            if wf.workflow_id not in remaining_cache:
                remaining_cache[wf.workflow_id] = self._remaining_path(wf)
                attained_cache[wf.workflow_id] = self._attained_with_partials(wf)
            views.append(
                CallView(
                    call_id=cid,
                    workflow_id=wf.workflow_id,
                    a_w=wf.arrival_time,
                    input_len=call.input_len,
                    predicted_output_len=call.predicted_output_len,
                    reveal_time=call.reveal_time,
                    topo_depth=call.topo_depth,
                    revision=call.revision,
                    prefill_instance=call.prefill_instance,
                    decode_instance=call.decode_instance,
                    decode_locked=call.decode_locked,
                    horizon=wf.horizon,
                    remaining_path=remaining_cache[wf.workflow_id],
                    attained=attained_cache[wf.workflow_id],
                )
            )
        views.sort(key=lambda v: (v.a_w, v.workflow_id, v.call_id))
        pf_avail = []
        for pid in sorted(self.prefill):
            server = self.prefill[pid]
            if server.running is None:
                pf_avail.append(self.now)
            else:
                run = self.calls[server.running]
                est = scheduler_estimate(
                    prefill_time(run, server.spec, self.model),
                    run.call_id,
                    self.cfg.est_error,
                )
                pf_avail.append(run.state_enter[CallState.PREFILL] + est)
        return StageSnapshot(
            time=self.now,
            stage=stage,
            waiting=tuple(views),
            pf_avail=tuple(pf_avail),
            decode_intervals=self._visible_decode_intervals(),
        )

    def _remaining_path(self, wf: WorkflowState) -> float:
        """Longest chain of incomplete revealed calls, in isolated path seconds."""
        down: dict[int, float] = {}
        best = 0.0
        for cid in sorted(wf.revealed, reverse=True):
            if cid in wf.completed:
                continue
            w = self._call_path_est(wf.calls[cid])
            tail = 0.0
            for child in wf.children.get(cid, ()):
                if child in wf.revealed and child not in wf.completed:
                    tail = max(tail, down.get(child, 0.0))
            down[cid] = w + tail
            best = max(best, down[cid])
        return best

    def _call_path_est(self, call: CallNode) -> float:
        """Isolated min-over-pairs path time (error-free), cached per call."""
        est = self._path_est.get(call.call_id)
        if est is None:
            best = float("inf")
            for p in self.cluster.prefill:
                for d in self.cluster.decode:
                    if call.input_len + call.predicted_output_len > d.kv_capacity_tokens:
                        continue
                    t = (
                        prefill_time(call, p, self.model)
                        + transfer_latency(
                            kv_size(call, self.model), p.gpu_class, d.gpu_class, self.cluster
                        )
                        + decode_time(call, d, self.model, use_predicted=True)
                    )
                    best = min(best, t)
            est = best
            self._path_est[call.call_id] = est
        return est

    def _attained_with_partials(self, wf: WorkflowState) -> float:
        total = wf.attained_service
        for cid in sorted(wf.revealed):
            call = wf.calls[cid]
            if call.state is CallState.PREFILL:
                total += self.now - call.state_enter[CallState.PREFILL]
            elif call.state is CallState.DECODE:
                total += self.now - call.state_enter[CallState.DECODE]
        return total

    # ---- result export --------------------------------------------------------

    def _result(self) -> SimResult:
        call_records = []
        for cid in sorted(self.calls):
            c = self.calls[cid]
            ts = c.state_enter
            call_records.append(
                CallRecord(
                    call_id=cid,
                    workflow_id=c.workflow_id,
                    reveal_time=c.reveal_time,
                    prefill_start=ts[CallState.PREFILL],
                    prefill_end=ts[CallState.TRANSFER],
                    transfer_end=ts[CallState.WAITING_DECODE],
                    decode_start=ts[CallState.DECODE],
                    decode_end=ts[CallState.COMPLETE],
                    prefill_instance=c.prefill_instance,
                    decode_instance=c.decode_instance,
                    decode_locked=c.decode_locked,
                )
            )
        wf_records = [
            WorkflowRecord(
                workflow_id=wf.workflow_id,
                arrival_time=wf.arrival_time,
                completion_time=wf.completion_time,
                online_horizon=wf.horizon,
                n_calls=len(wf.calls),
            )
            for wf in self.trace.workflows
        ]
        history = {
            wid: list(rec.history) for wid, rec in sorted(self.tracker.records.items())
        }
        return SimResult(
            calls=call_records,
            workflows=wf_records,
            planner_records=self.planner_records,
            plans=self.plans,
            events=self.events,
            fallback_assignments=self.fallbacks,
            max_inflight=dict(self.max_inflight),
            horizon_history=history,
        )


def compute_metrics_horizons(trace: Trace, cluster: ClusterSpec) -> dict[int, float]:
    """Policy-independent full-DAG horizons used as the Req denominators."""
    arrays = ClusterArrays.build(cluster)
    out = {}
    for wf in trace.workflows:
        out[wf.workflow_id] = metrics_horizon(wf, arrays, cluster.model_profile)
    return out
