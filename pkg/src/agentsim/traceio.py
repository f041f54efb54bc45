"""Trace and cluster file formats.

Traces are JSON lines: one workflow header record per workflow carrying
the arrival time, then one record per call. Clusters are a single JSON
document matching ClusterSpec. Both writers are deterministic.
"""

from __future__ import annotations

import json
from pathlib import Path

from .latency import LatencyModel, RooflineParams
from .model import CallNode, ClusterSpec, InstanceSpec, Stage, Trace, WorkflowState


def load_trace(path: str | Path) -> Trace:
    workflows: dict[int, dict] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rec = json.loads(line)
            kind = rec.get("type")
            if kind == "workflow":
                wid = int(rec["workflow_id"])
                workflows.setdefault(wid, {"calls": []})["arrival"] = float(
                    rec["arrival_time_s"]
                )
            elif kind == "call":
                wid = int(rec["workflow_id"])
                workflows.setdefault(wid, {"calls": []})["calls"].append(rec)
            else:
                raise ValueError(f"{path}:{line_no}: unknown record type {kind!r}")
    out = []
    for wid in sorted(workflows):
        info = workflows[wid]
        if "arrival" not in info:
            raise ValueError(f"workflow {wid} has no header record with arrival_time_s")
        calls = {}
        for rec in info["calls"]:
            call = CallNode(
                call_id=int(rec["call_id"]),
                workflow_id=wid,
                parents=tuple(sorted(int(p) for p in rec.get("parents", []))),
                input_len=int(rec["input_len"]),
                true_output_len=int(rec["output_len"]),
                reveal_delay_s=float(rec.get("reveal_delay_s", 0.0)),
            )
            calls[call.call_id] = call
        out.append(WorkflowState(workflow_id=wid, arrival_time=info["arrival"], calls=calls))
    return Trace(workflows=out)


def save_trace(trace: Trace, path: str | Path) -> None:
    with open(path, "w") as fh:
        for wf in trace.workflows:
            fh.write(
                json.dumps(
                    {
                        "type": "workflow",
                        "workflow_id": wf.workflow_id,
                        "arrival_time_s": wf.arrival_time,
                    }
                )
                + "\n"
            )
            for cid in sorted(wf.calls):
                call = wf.calls[cid]
                rec = {
                    "type": "call",
                    "workflow_id": wf.workflow_id,
                    "call_id": call.call_id,
                    "parents": list(call.parents),
                    "input_len": call.input_len,
                    "output_len": call.true_output_len,
                }
                if call.reveal_delay_s:
                    rec["reveal_delay_s"] = call.reveal_delay_s
                fh.write(json.dumps(rec) + "\n")


def load_cluster(path: str | Path) -> ClusterSpec:
    with open(path) as fh:
        doc = json.load(fh)
    instances = []
    for rec in doc["instances"]:
        pool = Stage(rec["pool"])
        instances.append(
            InstanceSpec(
                instance_id=int(rec["instance_id"]),
                pool=pool,
                gpu_class=rec["gpu_class"],
                kv_capacity_tokens=(
                    int(rec["kv_capacity_tokens"]) if pool is Stage.DECODE else None
                ),
            )
        )
    bw = {}
    for key, val in doc["bandwidth_bytes_per_s"].items():
        src, dst = key.split(":")
        bw[(src, dst)] = float(val)
    prof = doc["model_profile"]
    roofline = {
        cls: RooflineParams(**params) for cls, params in prof.get("roofline", {}).items()
    }
    model = LatencyModel(
        kv_bytes_per_token=float(prof["kv_bytes_per_token"]),
        param_bytes=float(prof.get("param_bytes", 0.0)),
        prefill_s_per_token={
            k: float(v) for k, v in prof.get("prefill_s_per_token", {}).items()
        },
        decode_s_per_token={
            k: float(v) for k, v in prof.get("decode_s_per_token", {}).items()
        },
        roofline=roofline,
    )
    return ClusterSpec(
        instances=instances,
        bandwidth_bytes_per_s=bw,
        transfer_setup_s=float(doc["transfer_setup_s"]),
        model_profile=model,
    )


def save_cluster(cluster: ClusterSpec, path: str | Path) -> None:
    doc = {
        "instances": [
            {
                "instance_id": i.instance_id,
                "pool": i.pool.value,
                "gpu_class": i.gpu_class,
                **(
                    {"kv_capacity_tokens": i.kv_capacity_tokens}
                    if i.pool is Stage.DECODE
                    else {}
                ),
            }
            for i in cluster.instances
        ],
        "bandwidth_bytes_per_s": {
            f"{src}:{dst}": bw
            for (src, dst), bw in sorted(cluster.bandwidth_bytes_per_s.items())
        },
        "transfer_setup_s": cluster.transfer_setup_s,
        "model_profile": _profile_doc(cluster.model_profile),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _profile_doc(model: LatencyModel) -> dict:
    doc: dict = {
        "kv_bytes_per_token": model.kv_bytes_per_token,
        "param_bytes": model.param_bytes,
    }
    if model.mode == "table":
        doc["prefill_s_per_token"] = dict(sorted(model.prefill_s_per_token.items()))
        doc["decode_s_per_token"] = dict(sorted(model.decode_s_per_token.items()))
    else:
        doc["roofline"] = {
            cls: vars(rp) for cls, rp in sorted(model.roofline.items())
        }
    return doc
