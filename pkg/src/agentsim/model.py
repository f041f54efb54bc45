"""Domain types for workflows, calls, clusters, and online-reveal mechanics.

A workflow is a DAG of LLM calls revealed online: only source calls are
visible at arrival, and a child becomes schedulable once every parent has
completed (plus an optional per-call tool delay). All other modules build
on the types here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Stage(Enum):
    PREFILL = "prefill"
    DECODE = "decode"


class CallState(Enum):
    WAITING_PREFILL = "waiting_prefill"
    PREFILL = "prefill"
    TRANSFER = "transfer"
    WAITING_DECODE = "waiting_decode"
    DECODE = "decode"
    COMPLETE = "complete"


# Lifecycle order used to check that state-entry timestamps are nondecreasing.
LIFECYCLE_ORDER = (
    CallState.WAITING_PREFILL,
    CallState.PREFILL,
    CallState.TRANSFER,
    CallState.WAITING_DECODE,
    CallState.DECODE,
    CallState.COMPLETE,
)

# Queue rank given to calls that have no plan-assigned rank yet; plan ranks
# start at 1, so unplanned calls sort behind planned ones.
UNRANKED = 1 << 30


@dataclass
class CallNode:
    """One LLM call plus its mutable lifecycle state during a run."""

    call_id: int
    workflow_id: int
    parents: tuple[int, ...]
    input_len: int
    true_output_len: int
    reveal_delay_s: float = 0.0

    # Filled by the run harness / predictor.
    predicted_output_len: int = 0

    # Simulation state.
    state: CallState = CallState.WAITING_PREFILL
    prefill_instance: int | None = None
    decode_instance: int | None = None
    decode_locked: bool = False
    rank: int = UNRANKED
    revision: int = 0
    pending_join: bool = False
    reveal_time: float | None = None
    state_enter: dict[CallState, float] = field(default_factory=dict)
    topo_depth: int = 0

    def enter_state(self, state: CallState, now: float) -> None:
        self.state = state
        self.state_enter[state] = now
        self.revision += 1

    @property
    def is_waiting(self) -> bool:
        return self.state in (CallState.WAITING_PREFILL, CallState.WAITING_DECODE)

    def waiting_stage(self) -> Stage | None:
        if self.state is CallState.WAITING_PREFILL:
            return Stage.PREFILL
        if self.state is CallState.WAITING_DECODE:
            return Stage.DECODE
        return None


@dataclass
class WorkflowState:
    """Online view of one workflow: revealed subgraph, progress, horizon."""

    workflow_id: int
    arrival_time: float
    calls: dict[int, CallNode]
    revealed: set[int] = field(default_factory=set)
    completed: set[int] = field(default_factory=set)
    horizon: float = 0.0            # H_w(t), refined online
    final_horizon: float = 0.0      # full-DAG standalone time, for metrics
    completion_time: float | None = None
    attained_service: float = 0.0   # ground-truth execution seconds consumed

    # parent -> children adjacency, derived once from the call list
    children: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.children:
            self.children = {cid: [] for cid in self.calls}
            for call in self.calls.values():
                for p in call.parents:
                    self.children[p].append(call.call_id)
            for kids in self.children.values():
                kids.sort()

    def source_ids(self) -> list[int]:
        return sorted(c.call_id for c in self.calls.values() if not c.parents)

    @property
    def done(self) -> bool:
        return len(self.completed) == len(self.calls)


@dataclass(frozen=True)
class InstanceSpec:
    """One serving instance: a prefill server or a decode pool member."""

    instance_id: int
    pool: Stage
    gpu_class: str
    kv_capacity_tokens: int | None = None  # decode pool only

    def __post_init__(self) -> None:
        if self.pool is Stage.DECODE:
            if self.kv_capacity_tokens is None or self.kv_capacity_tokens <= 0:
                raise ValueError(
                    f"decode instance {self.instance_id} needs a positive kv capacity"
                )
        elif self.kv_capacity_tokens is not None:
            raise ValueError(
                f"prefill instance {self.instance_id} must not carry a kv capacity"
            )


@dataclass
class ClusterSpec:
    """Prefill/decode instance pools plus the transfer and latency profile."""

    instances: list[InstanceSpec]
    bandwidth_bytes_per_s: dict[tuple[str, str], float]
    transfer_setup_s: float
    model_profile: "LatencyModel"

    def __post_init__(self) -> None:
        self.prefill = sorted(
            (i for i in self.instances if i.pool is Stage.PREFILL),
            key=lambda i: i.instance_id,
        )
        self.decode = sorted(
            (i for i in self.instances if i.pool is Stage.DECODE),
            key=lambda i: i.instance_id,
        )
        if not self.prefill or not self.decode:
            raise ValueError("cluster needs at least one prefill and one decode instance")
        ids = [i.instance_id for i in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance ids in cluster")
        for bw in self.bandwidth_bytes_per_s.values():
            if bw <= 0:
                raise ValueError("bandwidths must be positive")
        classes = {i.gpu_class for i in self.instances}
        for src in classes:
            for dst in classes:
                if (src, dst) not in self.bandwidth_bytes_per_s:
                    raise ValueError(f"bandwidth matrix missing entry ({src}, {dst})")

    def by_id(self, instance_id: int) -> InstanceSpec:
        for inst in self.instances:
            if inst.instance_id == instance_id:
                return inst
        raise KeyError(instance_id)


@dataclass
class Trace:
    """A full workload: workflows with arrival times and their call DAGs."""

    workflows: list[WorkflowState]

    def __post_init__(self) -> None:
        self.workflows.sort(key=lambda w: w.workflow_id)

    @property
    def n_calls(self) -> int:
        return sum(len(w.calls) for w in self.workflows)

    def all_calls(self) -> list[CallNode]:
        out: list[CallNode] = []
        for w in self.workflows:
            out.extend(w.calls[cid] for cid in sorted(w.calls))
        return out


@dataclass(frozen=True)
class Violation:
    kind: str          # CycleDetected | DanglingParent | NonPositiveLength | MissingArrival
    subject: int       # workflow_id or call_id
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}({self.subject}): {self.detail}"


def validate_trace(trace: Trace) -> list[Violation]:
    """Check acyclicity, parent resolution, positive lengths, arrival times.

    Returns an empty list when the trace is well-formed.
    """
    violations: list[Violation] = []
    for w in trace.workflows:
        if w.arrival_time is None or w.arrival_time < 0:
            violations.append(
                Violation("MissingArrival", w.workflow_id, "workflow has no valid arrival time")
            )
        for call in w.calls.values():
            if call.input_len < 1 or call.true_output_len < 1:
                violations.append(
                    Violation(
                        "NonPositiveLength",
                        call.call_id,
                        f"input_len={call.input_len} output_len={call.true_output_len}",
                    )
                )
            for p in call.parents:
                if p not in w.calls:
                    violations.append(
                        Violation(
                            "DanglingParent",
                            call.call_id,
                            f"parent {p} not in workflow {w.workflow_id}",
                        )
                    )
        if _has_cycle(w):
            violations.append(
                Violation("CycleDetected", w.workflow_id, "dependency cycle in workflow DAG")
            )
    return violations


def _has_cycle(w: WorkflowState) -> bool:
    # Kahn's algorithm; a leftover node means a cycle.
    indeg = {cid: 0 for cid in w.calls}
    for call in w.calls.values():
        for p in call.parents:
            if p in w.calls:
                indeg[call.call_id] += 1
    queue = [cid for cid, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        cid = queue.pop()
        seen += 1
        for child in w.children.get(cid, ()):
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
    return seen != len(w.calls)


def topo_order(w: WorkflowState, subset: set[int] | None = None) -> list[int]:
    """Deterministic topological order (ties by call_id) over a workflow.

    When ``subset`` is given it must be ancestor-closed; only those calls
    are ordered.
    """
    ids = set(w.calls) if subset is None else set(subset)
    indeg = {cid: sum(1 for p in w.calls[cid].parents if p in ids) for cid in ids}
    import heapq

    ready = [cid for cid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        cid = heapq.heappop(ready)
        order.append(cid)
        for child in w.children.get(cid, ()):
            if child in ids:
                indeg[child] -= 1
                if indeg[child] == 0:
                    heapq.heappush(ready, child)
    if len(order) != len(ids):
        raise ValueError(f"cycle detected in workflow {w.workflow_id}")
    return order


def assign_topo_depths(w: WorkflowState) -> None:
    """Set each call's topo_depth = longest source-to-call edge count."""
    for cid in topo_order(w):
        call = w.calls[cid]
        call.topo_depth = (
            0 if not call.parents else 1 + max(w.calls[p].topo_depth for p in call.parents)
        )


class UnknownCall(KeyError):
    pass


def reveal_children(w: WorkflowState, completed_call: int) -> list[int]:
    """Children of ``completed_call`` whose parents are now all complete.

    Returned calls are not yet revealed; the caller is responsible for
    marking them revealed (possibly after a tool delay). A call is never
    returned twice because revelation is recorded in ``w.revealed``.
    """
    if completed_call not in w.calls:
        raise UnknownCall(completed_call)
    ready: list[int] = []
    for child in w.children.get(completed_call, ()):
        if child in w.revealed:
            continue
        if all(p in w.completed for p in w.calls[child].parents):
            ready.append(child)
    return ready


def mark_revealed(w: WorkflowState, call_id: int, now: float) -> CallNode:
    call = w.calls[call_id]
    w.revealed.add(call_id)
    call.reveal_time = now
    call.enter_state(CallState.WAITING_PREFILL, now)
    return call


def runnable_frontier(w: WorkflowState) -> set[int]:
    """Revealed calls still waiting for prefill scheduling."""
    return {
        cid for cid in w.revealed if w.calls[cid].state is CallState.WAITING_PREFILL
    }
