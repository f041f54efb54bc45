"""Service-time estimation: prefill/decode/KV-transfer latencies.

All functions here are pure. The same model produces both ground-truth
event durations and scheduler-visible estimates; the estimate path can be
perturbed with a deterministic multiplicative error that never touches
ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .model import CallNode, ClusterSpec, InstanceSpec, Stage


class UnknownClass(KeyError):
    pass


class MissingBandwidthEntry(KeyError):
    pass


@dataclass(frozen=True)
class RooflineParams:
    peak_flops: float
    mem_bandwidth_bytes_per_s: float
    prefill_flops_per_token: float
    prefill_bytes_per_token: float
    decode_flops_per_token: float
    decode_bytes_per_token: float


@dataclass
class LatencyModel:
    """Per-GPU-class service-time model plus the KV size profile.

    Exactly one of table mode (per-token coefficients) or roofline mode
    (compute/memory bound terms) is active per run.
    """

    kv_bytes_per_token: float
    param_bytes: float = 0.0
    prefill_s_per_token: dict[str, float] = field(default_factory=dict)
    decode_s_per_token: dict[str, float] = field(default_factory=dict)
    roofline: dict[str, RooflineParams] = field(default_factory=dict)

    def __post_init__(self) -> None:
        table = bool(self.prefill_s_per_token or self.decode_s_per_token)
        if table and self.roofline:
            raise ValueError("table mode and roofline mode are mutually exclusive")
        if not table and not self.roofline:
            raise ValueError("latency model needs coefficients or roofline parameters")
        for tbl in (self.prefill_s_per_token, self.decode_s_per_token):
            for cls, coeff in tbl.items():
                if coeff <= 0:
                    raise ValueError(f"non-positive coefficient for class {cls}")
        if self.kv_bytes_per_token <= 0:
            raise ValueError("kv_bytes_per_token must be positive")

    @property
    def mode(self) -> str:
        return "roofline" if self.roofline else "table"


class ErrorMode(Enum):
    OFF = "off"
    DETERMINISTIC_MULTIPLICATIVE = "deterministic_multiplicative"


@dataclass(frozen=True)
class ErrorConfig:
    """Multiplicative perturbation of scheduler-visible estimates only."""

    epsilon: float = 0.0
    mode: ErrorMode = ErrorMode.OFF

    def __post_init__(self) -> None:
        if not (0.0 <= self.epsilon < 1.0):
            raise ValueError("epsilon must lie in [0, 1)")


@dataclass(frozen=True)
class PredictorConfig:
    """Output-length predictor; perfect by default, optionally perturbed."""

    epsilon: float = 0.0
    mode: ErrorMode = ErrorMode.OFF


def prefill_time(call: CallNode, inst: InstanceSpec, m: LatencyModel) -> float:
    """Ground-truth prefill service time of ``call`` on ``inst``."""
    assert inst.pool is Stage.PREFILL
    return service_time(call.input_len, inst.gpu_class, m, Stage.PREFILL)


def decode_time(
    call: CallNode, inst: InstanceSpec, m: LatencyModel, use_predicted: bool
) -> float:
    """Decode service time; predicted length for projections, true for events."""
    assert inst.pool is Stage.DECODE
    length = call.predicted_output_len if use_predicted else call.true_output_len
    return service_time(length, inst.gpu_class, m, Stage.DECODE)


def service_time(tokens: int, gpu_class: str, m: LatencyModel, stage: Stage) -> float:
    if m.mode == "table":
        table = m.prefill_s_per_token if stage is Stage.PREFILL else m.decode_s_per_token
        try:
            return tokens * table[gpu_class]
        except KeyError:
            raise UnknownClass(gpu_class) from None
    try:
        rp = m.roofline[gpu_class]
    except KeyError:
        raise UnknownClass(gpu_class) from None
    if stage is Stage.PREFILL:
        flops, bts = rp.prefill_flops_per_token, rp.prefill_bytes_per_token
    else:
        flops, bts = rp.decode_flops_per_token, rp.decode_bytes_per_token
    return max(flops * tokens / rp.peak_flops, bts * tokens / rp.mem_bandwidth_bytes_per_s)


def kv_size(call: CallNode, m: LatencyModel) -> float:
    """Bytes of KV state produced by prefill and moved to decode."""
    return call.input_len * m.kv_bytes_per_token


def transfer_latency(
    kv_bytes: float, src_class: str, dst_class: str, cluster: ClusterSpec
) -> float:
    """Setup latency plus payload over the class-pair effective bandwidth."""
    try:
        bw = cluster.bandwidth_bytes_per_s[(src_class, dst_class)]
    except KeyError:
        raise MissingBandwidthEntry((src_class, dst_class)) from None
    return cluster.transfer_setup_s + kv_bytes / bw


def scheduler_estimate(true_value: float, call_id: int, cfg: ErrorConfig) -> float:
    """Scheduler-visible version of a true duration.

    Deterministic multiplicative mode inflates even call ids by (1+eps) and
    deflates odd ones by (1-eps); ground-truth event durations are never
    altered by this path.
    """
    if cfg.mode is ErrorMode.OFF or cfg.epsilon == 0.0:
        return true_value
    factor = 1.0 + cfg.epsilon if call_id % 2 == 0 else 1.0 - cfg.epsilon
    return true_value * factor


def predict_output_len(call: CallNode, cfg: PredictorConfig) -> int:
    """Predicted output length; ground truth unless a perturbation is set."""
    if cfg.mode is ErrorMode.OFF or cfg.epsilon == 0.0:
        return call.true_output_len
    factor = 1.0 + cfg.epsilon if call.call_id % 2 == 0 else 1.0 - cfg.epsilon
    return max(1, round(call.true_output_len * factor))
