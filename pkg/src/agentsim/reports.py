"""Run orchestration and CSV export.

All CSV files start with a schema-version comment line. Files describing
simulation semantics (calls, workflows, attainment curves) are byte
deterministic for fixed inputs; planner overhead files contain wall-clock
measurements and are not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .engine import EngineConfig, SimResult, compute_metrics_horizons, run
from .latency import ErrorConfig, ErrorMode, PredictorConfig
from .metrics import (
    AttainmentPoint,
    attainment_curve,
    completion_ratios,
    overhead_summary,
    req_at,
)
from .model import Trace
from .policies import PolicyConfig
from .traceio import load_cluster, load_trace

CSV_VERSION = "v1"


@dataclass
class RunConfig:
    trace_path: str
    cluster_path: str
    policy: str = "hexagent"
    est_error: float = 0.0
    pred_error: float = 0.0
    planning_latency_s: float = 0.010
    bootstrap_s: float = 0.0
    seed: int = 0
    out_dir: str = "out"
    alphas: list[float] = field(default_factory=lambda: default_alpha_grid())
    greedy_threshold: int = 64
    llf_kappa: float = 1.0
    dump_horizons: bool = False


def default_alpha_grid(max_alpha: float = 30.0, step: float = 0.25) -> list[float]:
    n = int(round(max_alpha / step))
    return [step * i for i in range(1, n + 1)]


@dataclass
class RunOutput:
    policy: str
    result: SimResult
    horizons: dict[int, float]
    ratios: list[float]
    req95: float
    req99: float
    curve: list[AttainmentPoint]


def engine_config(cfg: RunConfig, policy: str | None = None) -> EngineConfig:
    err_mode = (
        ErrorMode.DETERMINISTIC_MULTIPLICATIVE if cfg.est_error > 0 else ErrorMode.OFF
    )
    pred_mode = (
        ErrorMode.DETERMINISTIC_MULTIPLICATIVE if cfg.pred_error > 0 else ErrorMode.OFF
    )
    return EngineConfig(
        planning_latency_s=cfg.planning_latency_s,
        bootstrap_s=cfg.bootstrap_s,
        est_error=ErrorConfig(epsilon=cfg.est_error, mode=err_mode),
        predictor=PredictorConfig(epsilon=cfg.pred_error, mode=pred_mode),
        policy=policy or cfg.policy,
        policy_cfg=PolicyConfig(
            greedy_threshold=cfg.greedy_threshold, llf_kappa=cfg.llf_kappa
        ),
    )


def execute(
    trace: Trace,
    cluster,
    cfg: RunConfig,
    policy: str | None = None,
    horizons: dict[int, float] | None = None,
) -> RunOutput:
    """Run one (trace, cluster, policy) simulation and compute its metrics."""
    policy = policy or cfg.policy
    result = run(trace, cluster, engine_config(cfg, policy))
    if horizons is None:
        horizons = compute_metrics_horizons(trace, cluster)
    completions = {w.workflow_id: w.completion_time for w in result.workflows}
    arrivals = {w.workflow_id: w.arrival_time for w in result.workflows}
    ratios = completion_ratios(completions, arrivals, horizons)
    return RunOutput(
        policy=policy,
        result=result,
        horizons=horizons,
        ratios=ratios,
        req95=req_at(0.95, ratios),
        req99=req_at(0.99, ratios),
        curve=attainment_curve(ratios, cfg.alphas),
    )


def load_inputs(cfg: RunConfig):
    return load_trace(cfg.trace_path), load_cluster(cfg.cluster_path)


# ---- CSV writers -----------------------------------------------------------


def _open_csv(path: Path, name: str, header: list[str]):
    fh = open(path, "w")
    fh.write(f"# agentsim-csv {CSV_VERSION} {name}\n")
    fh.write(",".join(header) + "\n")
    return fh


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_calls_csv(result: SimResult, path: Path) -> None:
    cols = [
        "workflow_id", "call_id", "reveal_time", "prefill_start", "prefill_end",
        "transfer_end", "decode_start", "decode_end",
        "prefill_instance", "decode_instance", "decode_locked",
    ]
    with _open_csv(path, "calls", cols) as fh:
        for c in result.calls:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        c.workflow_id, c.call_id, c.reveal_time, c.prefill_start,
                        c.prefill_end, c.transfer_end, c.decode_start, c.decode_end,
                        c.prefill_instance, c.decode_instance, int(c.decode_locked),
                    )
                )
                + "\n"
            )


def write_workflows_csv(result: SimResult, horizons: dict[int, float], path: Path) -> None:
    cols = ["workflow_id", "arrival_time", "completion_time", "horizon", "ratio", "n_calls"]
    with _open_csv(path, "workflows", cols) as fh:
        for w in result.workflows:
            h = horizons[w.workflow_id]
            ratio = (w.completion_time - w.arrival_time) / h
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        w.workflow_id, w.arrival_time, w.completion_time, h, ratio,
                        w.n_calls,
                    )
                )
                + "\n"
            )


def write_curve_csv(curve: list[AttainmentPoint], path: Path) -> None:
    with _open_csv(path, "attainment", ["alpha", "fraction"]) as fh:
        for pt in curve:
            fh.write(f"{_fmt(pt.alpha)},{_fmt(pt.fraction)}\n")


def write_planner_csv(result: SimResult, path: Path) -> None:
    cols = ["time", "stage", "queue_len", "wall_us", "sim_latency_s"]
    with _open_csv(path, "planner", cols) as fh:
        for r in result.planner_records:
            fh.write(
                f"{_fmt(r.time)},{r.stage.value},{r.queue_len},"
                f"{_fmt(r.wall_s * 1e6)},{_fmt(r.sim_latency_s)}\n"
            )


def write_summary_csv(rows: list[dict], path: Path) -> None:
    cols = ["policy", "trace", "req95", "req99", "mean_ms_per_inv", "total_overhead_s"]
    with _open_csv(path, "summary", cols) as fh:
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def write_horizons_csv(result: SimResult, path: Path) -> None:
    with _open_csv(path, "horizons", ["workflow_id", "time", "horizon"]) as fh:
        for wid, hist in result.horizon_history.items():
            for t, h in hist:
                fh.write(f"{wid},{_fmt(t)},{_fmt(h)}\n")


def summary_row(trace_name: str, out: RunOutput) -> dict:
    oh = overhead_summary(out.result.planner_records)
    return {
        "policy": out.policy,
        "trace": trace_name,
        "req95": out.req95,
        "req99": out.req99,
        "mean_ms_per_inv": oh.mean_ms_per_invocation,
        "total_overhead_s": oh.total_wall_s,
    }


def write_run_outputs(
    out: RunOutput, cfg: RunConfig, out_dir: Path, trace_name: str
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_calls_csv(out.result, out_dir / "calls.csv")
    write_workflows_csv(out.result, out.horizons, out_dir / "workflows.csv")
    write_curve_csv(out.curve, out_dir / "attainment.csv")
    write_planner_csv(out.result, out_dir / "planner.csv")
    write_summary_csv([summary_row(trace_name, out)], out_dir / "summary.csv")
    if cfg.dump_horizons:
        write_horizons_csv(out.result, out_dir / "horizons.csv")
