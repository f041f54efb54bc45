"""Workflow planning horizons: standalone completion time of a subgraph.

The horizon of a workflow at time t is the makespan of its revealed
subgraph when executed alone on an empty copy of the cluster, using
greedy earliest-finish placement over all prefill/decode pairs in
deterministic topological order. It grows as new calls are revealed and
is refined as completed calls expose their true output lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .latency import LatencyModel, service_time
from .model import ClusterSpec, Stage, WorkflowState, topo_order
from .projection import ClusterArrays, best_pair_for_call, decode_start_on

EMPTY = np.empty(0, dtype=np.float64)


class NoFeasibleDecode(RuntimeError):
    pass


def standalone_horizon(
    wf: WorkflowState,
    subgraph: set[int],
    arrays: ClusterArrays,
    model: LatencyModel,
    output_lens: dict[int, int],
) -> float:
    """Isolated makespan of ``subgraph`` (must be ancestor-closed).

    ``output_lens`` supplies the effective output length per call:
    observed true lengths for completed calls, predicted otherwise.
    Estimates are error-free; the serving policy under test plays no role.
    """
    if not subgraph:
        return 0.0
    n_p, n_d = arrays.n_prefill, arrays.n_decode
    pf_avail = np.zeros(n_p, dtype=np.float64)
    ledgers: list[list[tuple[float, float, float]]] = [[] for _ in range(n_d)]
    finish: dict[int, float] = {}
    makespan = 0.0
    for cid in topo_order(wf, subgraph):
        call = wf.calls[cid]
        out_len = output_lens[cid]
        if call.parents:
            ready = max(finish[p] for p in call.parents) + call.reveal_delay_s
        else:
            ready = 0.0
        pf_cost = np.asarray(
            [
                service_time(call.input_len, inst.gpu_class, model, Stage.PREFILL)
                for inst in arrays.cluster.prefill
            ],
            dtype=np.float64,
        )
        dec_cost = np.asarray(
            [
                service_time(out_len, inst.gpu_class, model, Stage.DECODE)
                for inst in arrays.cluster.decode
            ],
            dtype=np.float64,
        )
        kv_bytes = call.input_len * model.kv_bytes_per_token
        demand = float(call.input_len + out_len)
        choice = best_pair_for_call(
            ready, kv_bytes, demand, pf_cost, dec_cost, pf_avail, arrays, ledgers
        )
        if not choice.feasible:
            raise NoFeasibleDecode(
                f"call {cid} demand {demand} exceeds every decode capacity"
            )
        p, d = choice.prefill_idx, choice.decode_idx
        start_p = pf_avail[p] if pf_avail[p] > ready else ready
        t_pf = start_p + pf_cost[p]
        r = t_pf + arrays.setup + kv_bytes * arrays.inv_bw[p * n_d + d]
        dec_start = decode_start_on(demand, r, dec_cost[d], d, arrays, ledgers)
        end = dec_start + dec_cost[d]
        pf_avail[p] = t_pf
        ledgers[d].append((dec_start, end, demand))
        finish[cid] = end
        if end > makespan:
            makespan = end
    return makespan


def metrics_horizon(
    wf: WorkflowState, arrays: ClusterArrays, model: LatencyModel
) -> float:
    """Full-DAG standalone time with true output lengths; the Req denominator."""
    lens = {cid: c.true_output_len for cid, c in wf.calls.items()}
    return standalone_horizon(wf, set(wf.calls), arrays, model, lens)


@dataclass
class HorizonRecord:
    workflow_id: int
    value: float = 0.0
    observed_output_lens: dict[int, int] = field(default_factory=dict)
    observed_stage_seconds: dict[int, tuple[float, float, float]] = field(
        default_factory=dict
    )
    last_event: int = -1
    history: list[tuple[float, float]] = field(default_factory=list)


class HorizonTracker:
    """Maintains each workflow's online horizon across reveal/completion events."""

    def __init__(self, arrays: ClusterArrays, model: LatencyModel):
        self.arrays = arrays
        self.model = model
        self.records: dict[int, HorizonRecord] = {}

    def record(self, wf: WorkflowState) -> HorizonRecord:
        rec = self.records.get(wf.workflow_id)
        if rec is None:
            rec = HorizonRecord(wf.workflow_id)
            self.records[wf.workflow_id] = rec
        return rec

    def recompute(self, wf: WorkflowState, now: float, event_id: int) -> float:
        rec = self.record(wf)
        lens = {
            cid: rec.observed_output_lens.get(cid, wf.calls[cid].predicted_output_len)
            for cid in wf.revealed
        }
        rec.value = standalone_horizon(wf, set(wf.revealed), self.arrays, self.model, lens)
        rec.last_event = event_id
        rec.history.append((now, rec.value))
        wf.horizon = rec.value
        return rec.value

    def observe_completion(
        self,
        wf: WorkflowState,
        call_id: int,
        prefill_s: float,
        transfer_s: float,
        decode_s: float,
        now: float,
        event_id: int,
    ) -> float:
        rec = self.record(wf)
        rec.observed_output_lens[call_id] = wf.calls[call_id].true_output_len
        rec.observed_stage_seconds[call_id] = (prefill_s, transfer_s, decode_s)
        return self.recompute(wf, now, event_id)
