"""The live monitoring loop: samples -> banks -> features -> inference -> alarms.

Raw ADC codes stream through the ping-pong buffer; each delivered bank is
converted back to mA, scanned for actuation edges, and every edge runs
through the fault classifier and the remaining-life regressor. An alarm is
raised when any non-good class probability reaches the fault threshold or
the predicted remaining life falls under the cycle threshold.

Actuations that straddle a bank boundary are handled by carrying the last
(lower_window + frame) samples of each bank into the next bank's analysis
window; edges are de-duplicated by their global sample index.

Clocks: with ``virtual`` the producer is paced by logical time and all
emitted timestamps/latencies are deterministic (sample-derived microseconds
and processing-step counts). Wall-clock latencies are still measured and
reported on the returned TimingReport, so performance assertions work in
either mode. With ``realtime`` pushes are paced on the wall clock and the
emitted times are measured microseconds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import tinynn
from .acquisition import (PingPongBuffer, TimingReport, buffer_fill_duration,
                          max_cycles, run_acquisition)
from .errors import ExtractionError, ParameterError
from .features import ExtractionConfig, detect_rising_edges, extract_features
from .models import FAULT_CLASSES
from .tinynn import Mlp, ModelKind
from .waveform import (AdcConfig, DegradationState, FaultCondition, FaultKind,
                       ValveParams, codes_to_current, current_to_codes,
                       transient_current)


@dataclass(frozen=True)
class MonitorConfig:
    k: int = 10000
    fs: float = 1000.0
    f_op: float = 0.5
    rul_alarm_threshold: float = 100.0   # cycles
    fault_alarm_threshold: float = 0.5   # probability of any non-good class
    clock: str = "virtual"
    adc: AdcConfig = field(default_factory=AdcConfig)

    def __post_init__(self):
        if self.k <= 0 or self.fs <= 0 or self.f_op <= 0:
            raise ParameterError("k, fs and f_op must be > 0")
        if self.rul_alarm_threshold <= 0 or self.fault_alarm_threshold <= 0:
            raise ParameterError("alarm thresholds must be > 0")
        if self.clock not in ("virtual", "realtime"):
            raise ParameterError(f"clock must be 'virtual' or 'realtime', got {self.clock!r}")


@dataclass
class MonitorEvent:
    """One inference record per detected actuation."""

    buffer_seq: int
    zero_index: int              # global sample index of the edge
    fault_probs: np.ndarray      # length 4, sums to 1
    predicted_class: FaultKind
    rul: float                   # predicted remaining cycles, clamped at 0
    alarm: bool
    it_pc: float                 # wall seconds spent on this actuation
    timestamp_us: int            # virtual: sample-derived; realtime: wall clock


@dataclass
class DiagnosticEvent:
    """An edge whose feature extraction failed; the stream continues."""

    buffer_seq: int
    zero_index: int
    reason: str


def _check_models(fault_model: Mlp, rul_model: Mlp) -> None:
    if fault_model.kind is not ModelKind.CLASSIFIER or fault_model.out_dim != len(FAULT_CLASSES):
        raise ParameterError("fault_model must be a 4-class classifier")
    if rul_model.kind is not ModelKind.REGRESSOR or rul_model.out_dim != 1:
        raise ParameterError("rul_model must be a single-output regressor")


def run_monitor(source, fault_model: Mlp, rul_model: Mlp, cfg: MonitorConfig,
                on_event=None):
    """Run the full loop over a stream of raw ADC codes.

    Returns ``(events, report)`` where ``events`` also contains
    DiagnosticEvent entries for edges that failed extraction. ``on_event``
    is called with each event as it is emitted (the CLI streams JSON lines
    from it).
    """
    _check_models(fault_model, rul_model)
    excfg = ExtractionConfig.for_sample_rate(cfg.fs)
    carry = excfg.lower_window + excfg.frame

    events: list = []
    it_pc: list[float] = []
    state = {"tail": np.empty(0), "pos": 0, "watermark": -1, "bank": 0}

    def emit(event):
        events.append(event)
        if on_event is not None:
            on_event(event)

    def consume(handle):
        codes = np.array(handle.data, copy=True)
        buf.release(handle)
        ma = codes_to_current(codes, cfg.adc)
        analysis = np.concatenate((state["tail"], ma))
        offset = state["pos"] - state["tail"].size
        for z in detect_rising_edges(analysis, excfg):
            global_z = offset + z
            if global_z <= state["watermark"]:
                continue
            state["watermark"] = global_z
            t0 = time.perf_counter()
            try:
                ft = extract_features(analysis, z, excfg)
            except ExtractionError as err:
                emit(DiagnosticEvent(state["bank"], global_z, type(err).__name__))
                continue
            probs = tinynn.infer(fault_model, np.array([ft.di_dt, ft.auc]))
            rul = max(float(tinynn.infer(rul_model, np.array([ft.di_dt, ft.auc]))[0]), 0.0)
            elapsed = time.perf_counter() - t0
            it_pc.append(elapsed)
            alarm = (float(probs[1:].max()) >= cfg.fault_alarm_threshold
                     or rul < cfg.rul_alarm_threshold)
            if cfg.clock == "virtual":
                stamp = round(global_z / cfg.fs * 1e6)
            else:
                stamp = round(time.time() * 1e6)
            emit(MonitorEvent(buffer_seq=state["bank"], zero_index=global_z,
                              fault_probs=probs,
                              predicted_class=FAULT_CLASSES[int(probs.argmax())],
                              rul=rul, alarm=alarm, it_pc=elapsed, timestamp_us=stamp))
        state["tail"] = analysis[-carry:]
        state["pos"] += ma.size
        state["bank"] += 1

    buf = PingPongBuffer(cfg.k)  # caller-owned so consume() can release handles
    report = run_acquisition(source, cfg.k, cfg.fs, consume,
                             clock=cfg.clock, f_op=cfg.f_op, buf=buf)
    report.inference_time_per_cycle = sum(it_pc) / len(it_pc) if it_pc else None
    return events, report


def timing_report(cfg: MonitorConfig, it_pc_seconds, it_pb_seconds,
                  overrun_count: int = 0) -> TimingReport:
    """Assemble a report from measured per-cycle and per-buffer durations."""
    it_pb = list(it_pb_seconds)
    if not it_pb:
        raise ParameterError("timing_report needs at least one processed buffer")
    it_pc = list(it_pc_seconds)
    return TimingReport(
        k=cfg.k, fs=cfg.fs, f_op=cfg.f_op,
        buffer_fill_duration=buffer_fill_duration(cfg.k, cfg.fs),
        max_cycles=max_cycles(cfg.k, cfg.f_op, cfg.fs),
        inference_time_per_cycle=sum(it_pc) / len(it_pc) if it_pc else None,
        inference_time_per_buffer=sum(it_pb) / len(it_pb),
        lossless=overrun_count == 0,
        overrun_count=overrun_count,
        banks_delivered=len(it_pb),
    )


def event_to_json(event, cfg: MonitorConfig, excfg: ExtractionConfig | None = None) -> str:
    """One JSON line per event; virtual-clock latencies are step counts."""
    if excfg is None:
        excfg = ExtractionConfig.for_sample_rate(cfg.fs)
    if isinstance(event, DiagnosticEvent):
        return json.dumps({"type": "diagnostic", "buffer_seq": event.buffer_seq,
                           "zero_index": event.zero_index, "reason": event.reason})
    payload = {
        "type": "event",
        "buffer_seq": event.buffer_seq,
        "zero_index": event.zero_index,
        "fault_probs": [float(p) for p in event.fault_probs],
        "predicted_class": event.predicted_class.value,
        "rul": float(event.rul),
        "alarm": bool(event.alarm),
        "timestamp_us": event.timestamp_us,
    }
    if cfg.clock == "virtual":
        payload["it_pc_steps"] = excfg.lower_window + excfg.frame
    else:
        payload["it_pc_us"] = round(event.it_pc * 1e6)
    return json.dumps(payload)


def report_to_json(report: TimingReport, cfg: MonitorConfig) -> str:
    """Final timing-report JSON line (deterministic under the virtual clock)."""
    payload = {
        "type": "timing_report",
        "clock": cfg.clock,
        "k": report.k,
        "fs": report.fs,
        "f_op": report.f_op,
        "b_fd_us": round(report.buffer_fill_duration * 1e6),
        "c_max": report.max_cycles,
        "lossless": report.lossless,
        "overrun_count": report.overrun_count,
        "banks_delivered": report.banks_delivered,
    }
    excfg = ExtractionConfig.for_sample_rate(cfg.fs)
    if cfg.clock == "virtual":
        payload["it_pc_steps"] = excfg.lower_window + excfg.frame
        payload["it_pb_steps"] = report.k
    else:
        payload["it_pc_us"] = (None if report.inference_time_per_cycle is None
                               else round(report.inference_time_per_cycle * 1e6))
        payload["it_pb_us"] = (None if report.inference_time_per_buffer is None
                               else round(report.inference_time_per_buffer * 1e6))
    return json.dumps(payload)


def _cycle_segment(params: ValveParams, fault: FaultCondition, deg: DegradationState,
                   period: int, fs: float) -> np.ndarray:
    """Analog mA for one operation period: energized half, then released."""
    on = period // 2
    t_ms = np.arange(on) * (1000.0 / fs)
    seg = np.empty(period)
    seg[:on] = transient_current(params, fault, deg, t_ms)
    seg[on:] = params.idle_current
    return seg


def constant_fault_source(fault: FaultCondition, n_cycles: int,
                          f_op: float = 0.5, fs: float = 1000.0,
                          params: ValveParams | None = None, severity: float = 0.0,
                          noise_std: float = 1.0, seed: int = 0,
                          adc: AdcConfig = AdcConfig()):
    """Raw-code stream of ``n_cycles`` identical actuations.

    Returns ``(codes, trigger_indices)`` where the trigger indices are the
    ground-truth actuation starts (for event-completeness checks).
    """
    if n_cycles < 1:
        raise ParameterError("n_cycles must be >= 1")
    if not 0.0 <= severity <= 1.0:
        raise ParameterError("severity must be in [0, 1]")
    params = params or ValveParams()
    period = round(fs / f_op)
    lead = round(60 * fs / 1000.0)
    deg = DegradationState(cycle=round(severity * 1_000_000), failure_cycle=1_000_000)

    analog = [np.full(lead, params.idle_current)]
    triggers = []
    for i in range(n_cycles):
        triggers.append(lead + i * period)
        analog.append(_cycle_segment(params, fault, deg, period, fs))
    stream = np.concatenate(analog)
    if noise_std > 0:
        stream = stream + np.random.default_rng(seed).normal(0.0, noise_std, stream.size)
    return current_to_codes(stream, adc), triggers


def degradation_source(n_cycles: int = 40, failure_cycle: int = 200, cycle_step: int = 5,
                       f_op: float = 0.5, fs: float = 1000.0,
                       params: ValveParams | None = None, noise_std: float = 1.0,
                       seed: int = 0, adc: AdcConfig = AdcConfig()):
    """Raw-code stream of a valve wearing out: actuation i runs at cycle
    ``i * cycle_step``, sweeping severity toward 1. Returns
    ``(codes, trigger_indices)``."""
    if n_cycles < 1:
        raise ParameterError("n_cycles must be >= 1")
    params = params or ValveParams()
    period = round(fs / f_op)
    lead = round(60 * fs / 1000.0)

    analog = [np.full(lead, params.idle_current)]
    triggers = []
    for i in range(n_cycles):
        deg = DegradationState(cycle=min(i * cycle_step, failure_cycle),
                               failure_cycle=failure_cycle)
        triggers.append(lead + i * period)
        analog.append(_cycle_segment(params, FaultCondition.good(), deg, period, fs))
    stream = np.concatenate(analog)
    if noise_std > 0:
        stream = stream + np.random.default_rng(seed).normal(0.0, noise_std, stream.size)
    return current_to_codes(stream, adc), triggers
