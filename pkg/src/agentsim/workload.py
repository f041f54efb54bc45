"""Deterministic synthetic workload generators.

Four trace families mimic common agentic shapes: conversational chains,
short tool-calling chains, fan-out trees, and a round-robin mix. Arrival
times follow a Poisson process. Generation is splittable-seeded per
workflow index, so output is independent of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import CallNode, Trace, WorkflowState

_ARRIVAL_STREAM = 0
_WORKFLOW_STREAM = 1


class InvalidConfig(ValueError):
    pass


class TraceKind(Enum):
    CHAIN = "chain"
    FUNCCALL = "funccall"
    TREE = "tree"
    MIXED = "mixed"


@dataclass(frozen=True)
class GenConfig:
    kind: TraceKind
    n_workflows: int
    rate: float                  # workflows per second
    seed: int
    chain_mean_len: float = 6.0
    chain_max_len: int = 20
    tree_branching: int = 2
    tree_depth: int = 2
    # (low, high) inclusive token ranges per family
    chain_input: tuple[int, int] = (500, 2000)
    chain_output: tuple[int, int] = (100, 600)
    funccall_input: tuple[int, int] = (200, 800)
    funccall_output: tuple[int, int] = (20, 100)
    tree_input: tuple[int, int] = (500, 1500)
    tree_output: tuple[int, int] = (100, 400)

    def __post_init__(self) -> None:
        if self.n_workflows < 1:
            raise InvalidConfig("n_workflows must be >= 1")
        if self.rate <= 0:
            raise InvalidConfig("rate must be positive")
        if self.chain_max_len < 1 or self.tree_branching < 1 or self.tree_depth < 0:
            raise InvalidConfig("degenerate shape parameters")
        for lo, hi in (
            self.chain_input, self.chain_output,
            self.funccall_input, self.funccall_output,
            self.tree_input, self.tree_output,
        ):
            if lo < 1 or hi < lo:
                raise InvalidConfig(f"bad token range ({lo}, {hi})")


_MIX_ROTATION = (TraceKind.CHAIN, TraceKind.FUNCCALL, TraceKind.TREE)


def gen_trace(cfg: GenConfig) -> Trace:
    arrivals = _arrival_times(cfg)
    workflows = []
    next_call_id = 0
    for i in range(cfg.n_workflows):
        kind = cfg.kind
        if kind is TraceKind.MIXED:
            kind = _MIX_ROTATION[i % 3]
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([cfg.seed, _WORKFLOW_STREAM, i]))
        )
        edges, n_nodes, in_rng, out_rng = _shape(kind, cfg, rng)
        calls = {}
        for local in range(n_nodes):
            cid = next_call_id + local
            parents = tuple(next_call_id + p for p in edges.get(local, ()))
            calls[cid] = CallNode(
                call_id=cid,
                workflow_id=i,
                parents=parents,
                input_len=int(rng.integers(in_rng[0], in_rng[1] + 1)),
                true_output_len=int(rng.integers(out_rng[0], out_rng[1] + 1)),
            )
        next_call_id += n_nodes
        workflows.append(
            WorkflowState(workflow_id=i, arrival_time=arrivals[i], calls=calls)
        )
    return Trace(workflows=workflows)


def _arrival_times(cfg: GenConfig) -> list[float]:
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([cfg.seed, _ARRIVAL_STREAM]))
    )
    gaps = rng.exponential(1.0 / cfg.rate, size=cfg.n_workflows)
    return list(np.cumsum(gaps))


def _shape(kind: TraceKind, cfg: GenConfig, rng: np.random.Generator):
    """Return (parent edges by local index, node count, input range, output range)."""
    if kind is TraceKind.CHAIN:
        length = min(int(rng.geometric(1.0 / cfg.chain_mean_len)), cfg.chain_max_len)
        edges = {i: (i - 1,) for i in range(1, length)}
        return edges, length, cfg.chain_input, cfg.chain_output
    if kind is TraceKind.FUNCCALL:
        length = int(rng.integers(2, 5))
        edges = {i: (i - 1,) for i in range(1, length)}
        return edges, length, cfg.funccall_input, cfg.funccall_output
    if kind is TraceKind.TREE:
        b, d = cfg.tree_branching, cfg.tree_depth
        edges = {}
        idx = 1
        prev_level = [0]
        for _ in range(d):
            level = []
            for parent in prev_level:
                for _ in range(b):
                    edges[idx] = (parent,)
                    level.append(idx)
                    idx += 1
            prev_level = level
        return edges, idx, cfg.tree_input, cfg.tree_output
    raise InvalidConfig(f"cannot shape kind {kind}")


@dataclass
class TraceSummary:
    n_workflows: int
    n_calls: int
    depth_histogram: dict[int, int] = field(default_factory=dict)
    width_histogram: dict[int, int] = field(default_factory=dict)
    input_len_pcts: dict[int, float] = field(default_factory=dict)
    output_len_pcts: dict[int, float] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"workflows: {self.n_workflows}",
            f"calls: {self.n_calls}",
            f"depths (max edges from source): {_fmt_hist(self.depth_histogram)}",
            f"widths (max parallel calls): {_fmt_hist(self.width_histogram)}",
            f"input tokens p10/p50/p90: {_fmt_pcts(self.input_len_pcts)}",
            f"output tokens p10/p50/p90: {_fmt_pcts(self.output_len_pcts)}",
        ]
        return out


def _fmt_hist(h: dict[int, int]) -> str:
    return ", ".join(f"{k}:{v}" for k, v in sorted(h.items())) or "-"


def _fmt_pcts(p: dict[int, float]) -> str:
    return "/".join(str(round(p[k], 1)) for k in (10, 50, 90)) if p else "-"


def describe_trace(trace: Trace) -> TraceSummary:
    summary = TraceSummary(n_workflows=len(trace.workflows), n_calls=trace.n_calls)
    if trace.n_calls == 0:
        return summary
    in_lens, out_lens = [], []
    from .model import assign_topo_depths

    for wf in trace.workflows:
        assign_topo_depths(wf)
        depths = [c.topo_depth for c in wf.calls.values()]
        depth = max(depths)
        width = max(depths.count(level) for level in set(depths))
        summary.depth_histogram[depth] = summary.depth_histogram.get(depth, 0) + 1
        summary.width_histogram[width] = summary.width_histogram.get(width, 0) + 1
        in_lens.extend(c.input_len for c in wf.calls.values())
        out_lens.extend(c.true_output_len for c in wf.calls.values())
    for pct in (10, 50, 90):
        summary.input_len_pcts[pct] = float(np.percentile(in_lens, pct))
        summary.output_len_pcts[pct] = float(np.percentile(out_lens, pct))
    return summary
