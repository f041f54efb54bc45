"""Command-line interface: run, compare, gen, describe."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .metrics import overhead_summary
from .policies import POLICIES
from .reports import (
    RunConfig,
    default_alpha_grid,
    execute,
    load_inputs,
    summary_row,
    write_run_outputs,
    write_summary_csv,
)
from .traceio import load_trace, save_trace
from .workload import GenConfig, InvalidConfig, TraceKind, describe_trace, gen_trace


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentsim",
        description="Simulate agentic LLM workflow scheduling on "
        "prefill-decode disaggregated clusters.",
    )
    sub = parser.add_subparsers(required=True)

    p_run = sub.add_parser("run", help="simulate one trace/cluster/policy combination")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run several policies on one trace")
    _add_run_flags(p_cmp, policy_list=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("gen", help="generate a synthetic trace file")
    p_gen.add_argument("--kind", required=True, choices=[k.value for k in TraceKind])
    p_gen.add_argument("--n", type=int, required=True, help="number of workflows")
    p_gen.add_argument("--rate", type=float, required=True, help="workflows per second")
    p_gen.add_argument("--seed", type=int, default=1)
    p_gen.add_argument("--chain-mean-len", type=float, default=6.0)
    p_gen.add_argument("--chain-max-len", type=int, default=20)
    p_gen.add_argument("--tree-branching", type=int, default=2)
    p_gen.add_argument("--tree-depth", type=int, default=2)
    p_gen.add_argument("--out", required=True, help="output trace path (.jsonl)")
    p_gen.set_defaults(func=cmd_gen)

    p_desc = sub.add_parser("describe", help="summarize a trace file")
    p_desc.add_argument("trace")
    p_desc.set_defaults(func=cmd_describe)
    return parser


def _add_run_flags(p: argparse.ArgumentParser, policy_list: bool = False) -> None:
    p.add_argument("--trace", required=True)
    p.add_argument("--cluster", required=True)
    if policy_list:
        p.add_argument(
            "--policies",
            default=",".join(sorted(POLICIES)),
            help="comma-separated policy names",
        )
    else:
        p.add_argument("--policy", default="hexagent", help=f"one of {sorted(POLICIES)}")
    p.add_argument("--est-error", type=float, default=0.0,
                   help="deterministic multiplicative estimate error, e.g. 0.30")
    p.add_argument("--pred-error", type=float, default=0.0,
                   help="multiplicative output-length prediction error")
    p.add_argument("--plan-latency", type=float, default=0.010,
                   help="simulated planning latency per invocation (s)")
    p.add_argument("--bootstrap", type=float, default=0.0,
                   help="dispatch bootstrap latency before queueing (s)")
    p.add_argument("--greedy-threshold", type=int, default=64)
    p.add_argument("--llf-kappa", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha-max", type=float, default=30.0)
    p.add_argument("--alpha-step", type=float, default=0.25)
    p.add_argument("--dump-horizons", action="store_true")
    p.add_argument("--out", default=None,
                   help="output directory (default $AGENTSIM_OUT or ./out)")


def _run_config(args, policy: str | None = None) -> RunConfig:
    out_dir = args.out or os.environ.get("AGENTSIM_OUT") or "out"
    return RunConfig(
        trace_path=args.trace,
        cluster_path=args.cluster,
        policy=policy or getattr(args, "policy", "hexagent"),
        est_error=args.est_error,
        pred_error=args.pred_error,
        planning_latency_s=args.plan_latency,
        bootstrap_s=args.bootstrap,
        seed=args.seed,
        out_dir=out_dir,
        alphas=default_alpha_grid(args.alpha_max, args.alpha_step),
        greedy_threshold=args.greedy_threshold,
        llf_kappa=args.llf_kappa,
        dump_horizons=args.dump_horizons,
    )


def cmd_run(args) -> int:
    cfg = _run_config(args)
    if cfg.policy not in POLICIES:
        print(f"error: unknown policy {cfg.policy!r}", file=sys.stderr)
        return 1
    trace, cluster = load_inputs(cfg)
    out = execute(trace, cluster, cfg)
    trace_name = Path(cfg.trace_path).stem
    write_run_outputs(out, cfg, Path(cfg.out_dir), trace_name)
    oh = overhead_summary(out.result.planner_records)
    print(f"policy={out.policy} trace={trace_name}")
    print(f"Req95={out.req95:.4f} Req99={out.req99:.4f}")
    print(
        f"planner: {oh.invocations} invocations, "
        f"{oh.mean_ms_per_invocation:.3f} ms/inv, total {oh.total_wall_s:.3f} s"
    )
    print(f"outputs in {cfg.out_dir}")
    return 0


def cmd_compare(args) -> int:
    policies = [p for p in args.policies.split(",") if p]
    if not policies:
        print("error: empty policy list", file=sys.stderr)
        return 1
    unknown = [p for p in policies if p not in POLICIES]
    if unknown:
        print(f"error: unknown policy {unknown[0]!r}", file=sys.stderr)
        return 1
    cfg = _run_config(args, policy=policies[0])
    trace, cluster = load_inputs(cfg)
    trace_name = Path(cfg.trace_path).stem
    out_root = Path(cfg.out_dir)
    rows = []
    horizons = None
    for policy in policies:
        out = execute(trace, cluster, cfg, policy=policy, horizons=horizons)
        horizons = out.horizons  # shared denominators across policies
        write_run_outputs(out, cfg, out_root / policy, trace_name)
        rows.append(summary_row(trace_name, out))
        print(
            f"{policy:10s} Req95={out.req95:8.4f} Req99={out.req99:8.4f}"
        )
    out_root.mkdir(parents=True, exist_ok=True)
    write_summary_csv(rows, out_root / "compare.csv")
    print(f"outputs in {cfg.out_dir}")
    return 0


def cmd_gen(args) -> int:
    try:
        cfg = GenConfig(
            kind=TraceKind(args.kind),
            n_workflows=args.n,
            rate=args.rate,
            seed=args.seed,
            chain_mean_len=args.chain_mean_len,
            chain_max_len=args.chain_max_len,
            tree_branching=args.tree_branching,
            tree_depth=args.tree_depth,
        )
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    trace = gen_trace(cfg)
    save_trace(trace, args.out)
    print(f"wrote {trace.n_calls} calls across {len(trace.workflows)} workflows to {args.out}")
    return 0


def cmd_describe(args) -> int:
    trace = load_trace(args.trace)
    for line in describe_trace(trace).lines():
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
