"""Workflow-level scaled-SLO metrics and scheduler-overhead summaries.

A workflow meets its SLO at scale alpha when completion time <= alpha
times its standalone horizon. Req95/Req99 are the exact order statistics
of the completion ratios; no grid search or interpolation is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class AttainmentPoint:
    alpha: float
    fraction: float


@dataclass(frozen=True)
class OverheadRecord:
    invocations: int
    total_wall_s: float
    mean_ms_per_invocation: float
    max_queue_len: int


def completion_ratios(
    completions: dict[int, float],
    arrivals: dict[int, float],
    horizons: dict[int, float],
) -> list[float]:
    """Per-workflow (C_w - a_w) / H_w, ordered by workflow id."""
    ratios = []
    for wid in sorted(completions):
        h = horizons[wid]
        if h <= 0:
            raise ValueError(f"workflow {wid} has non-positive horizon {h}")
        ratios.append((completions[wid] - arrivals[wid]) / h)
    return ratios


def req_at(tau: float, ratios: list[float]) -> float:
    """Minimum scale at which a tau fraction of workflows meet their SLO."""
    if not ratios:
        raise EmptyInput("no completion ratios")
    if not (0.0 < tau <= 1.0):
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    k = math.ceil(tau * len(ratios))
    return sorted(ratios)[k - 1]


def attainment_curve(ratios: list[float], alphas: list[float]) -> list[AttainmentPoint]:
    """Fraction of workflows with ratio <= alpha, sampled at the grid."""
    if not ratios:
        raise EmptyInput("no completion ratios")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha grid must be ascending")
    n = len(ratios)
    srt = sorted(ratios)
    points = []
    i = 0
    for alpha in alphas:
        while i < n and srt[i] <= alpha:
            i += 1
        points.append(AttainmentPoint(alpha, i / n))
    return points


def degradation(
    base: tuple[float, float], perturbed: tuple[float, float]
) -> tuple[float, float]:
    """Percent change of (Req95, Req99) relative to a baseline run."""
    if base[0] <= 0 or base[1] <= 0:
        raise ValueError("base Req values must be positive")
    return (
        100.0 * (perturbed[0] - base[0]) / base[0],
        100.0 * (perturbed[1] - base[1]) / base[1],
    )


def overhead_summary(planner_records) -> OverheadRecord:
    """Wall-clock planning cost per invocation; simulated latency excluded."""
    n = len(planner_records)
    if n == 0:
        return OverheadRecord(0, 0.0, 0.0, 0)
    total = sum(r.wall_s for r in planner_records)
    return OverheadRecord(
        invocations=n,
        total_wall_s=total,
        mean_ms_per_invocation=1000.0 * total / n,
        max_queue_len=max(r.queue_len for r in planner_records),
    )
