"""Synthetic port-scan session traces.

Five processes emit antigen as Poisson streams over their active intervals.
Telemetry is sampled at 1 Hz: a baseline packet rate, plus an nmap ping
scan (ICMP errors and a bursty packet rate) and an scp file transfer (a
high, mildly fluctuating packet rate). All rates here are invented
defaults, tuned so the scan stands out; they are not measurements.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .core import ValidationError
from .trace import TraceRecord

# Times and rates are rounded to what the trace format can carry.
_PRECISION = 6


@dataclass(frozen=True)
class ProcessSpec:
    label: str
    pid: int
    rate: float
    start: float
    end: float


@dataclass(frozen=True)
class ScanSpec:
    start: float
    end: float
    icmp_error_rate: float
    packet_rate: float
    packet_jitter: float = 0.0
    burst_period: float = 0.0
    burst_floor: float = 0.0

    def scan_packets(self, t: float) -> float:
        """Scan contribution before jitter: on/off probe rounds when burst_period > 0."""
        if self.burst_period <= 0:
            return self.packet_rate
        phase = (t - self.start) % self.burst_period
        return self.packet_rate if phase < self.burst_period / 2 else self.burst_floor


@dataclass(frozen=True)
class TransferSpec:
    start: float
    end: float
    packet_rate: float
    packet_jitter: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float
    processes: Tuple[ProcessSpec, ...] = ()
    scan: Optional[ScanSpec] = None
    transfer: Optional[TransferSpec] = None
    baseline_packet_rate: float = 0.0
    baseline_jitter: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "processes", tuple(self.processes))
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValidationError(f"duration must be >= 0, got {self.duration!r}")
        rates = [self.baseline_packet_rate, self.baseline_jitter]
        intervals = []
        for p in self.processes:
            rates.append(p.rate)
            intervals.append((p.label, p.start, p.end))
        if self.scan:
            rates += [self.scan.icmp_error_rate, self.scan.packet_rate, self.scan.packet_jitter,
                      self.scan.burst_period, self.scan.burst_floor]
            intervals.append(("scan", self.scan.start, self.scan.end))
        if self.transfer:
            rates += [self.transfer.packet_rate, self.transfer.packet_jitter]
            intervals.append(("transfer", self.transfer.start, self.transfer.end))
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ValidationError("scenario rates must be finite and >= 0")
        for name, rate, jitter in (
            ("baseline", self.baseline_packet_rate, self.baseline_jitter),
            ("scan", *(_rate_and_jitter(self.scan))),
            ("transfer", *(_rate_and_jitter(self.transfer))),
        ):
            if jitter > rate:
                raise ValidationError(f"{name} packet jitter {jitter} exceeds its packet rate {rate}")
        for name, start, end in intervals:
            if not 0 <= start <= end <= self.duration:
                raise ValidationError(
                    f"{name} interval [{start}, {end}] not within [0, {self.duration}]"
                )
        pids = [p.pid for p in self.processes]
        if len(set(pids)) != len(pids):
            raise ValidationError("process ids must be unique")

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "processes": [asdict(p) for p in self.processes],
            "scan": asdict(self.scan) if self.scan else None,
            "transfer": asdict(self.transfer) if self.transfer else None,
            "baseline_packet_rate": self.baseline_packet_rate,
            "baseline_jitter": self.baseline_jitter,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            return cls(
                duration=float(d["duration"]),
                processes=tuple(ProcessSpec(**p) for p in d.get("processes", ())),
                scan=ScanSpec(**d["scan"]) if d.get("scan") else None,
                transfer=TransferSpec(**d["transfer"]) if d.get("transfer") else None,
                baseline_packet_rate=float(d.get("baseline_packet_rate", 0.0)),
                baseline_jitter=float(d.get("baseline_jitter", 0.0)),
                rng_seed=int(d.get("rng_seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad scenario config: {exc}") from None

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return ScenarioConfig(**{**self.__dict__, "rng_seed": int(seed)})


def _rate_and_jitter(spec) -> Tuple[float, float]:
    if spec is None:
        return 0.0, 0.0
    if isinstance(spec, ScanSpec) and spec.burst_period > 0:
        return min(spec.packet_rate, spec.burst_floor), spec.packet_jitter
    return spec.packet_rate, spec.packet_jitter


def save_config(cfg: ScenarioConfig, path: Union[str, os.PathLike]) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_config(path: Union[str, os.PathLike]) -> ScenarioConfig:
    return ScenarioConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_scenario(seed: int = 0) -> ScenarioConfig:
    always = (0.0, 60.0)
    return ScenarioConfig(
        duration=60.0,
        processes=(
            ProcessSpec("bash", 1001, 0.5, *always),
            ProcessSpec("sshd", 1002, 1.0, *always),
            # The probing process stops before its ICMP replies finish arriving.
            ProcessSpec("nmap", 1003, 5.0, 15.0, 23.0),
            ProcessSpec("x-forward", 1004, 1.0, *always),
            ProcessSpec("scp", 1005, 3.0, 35.0, 50.0),
        ),
        scan=ScanSpec(15.0, 25.0, icmp_error_rate=8.0, packet_rate=500.0, packet_jitter=20.0,
                      burst_period=4.0, burst_floor=100.0),
        transfer=TransferSpec(35.0, 50.0, packet_rate=250.0, packet_jitter=120.0),
        baseline_packet_rate=20.0,
        baseline_jitter=2.0,
        rng_seed=seed,
    )


def _poisson_times(gen: np.random.Generator, rate: float, start: float, end: float) -> List[float]:
    if rate <= 0 or end <= start:
        return []
    times = []
    t = start
    while True:
        t += float(gen.exponential(1.0 / rate))
        if t >= end:
            return times
        times.append(t)


def _jitter(gen: np.random.Generator, amplitude: float) -> float:
    return amplitude * float(gen.uniform(-1.0, 1.0)) if amplitude > 0 else 0.0


def generate(cfg: ScenarioConfig) -> List[TraceRecord]:
    """Build a time-sorted trace; antigen precede telemetry at equal times."""
    streams = np.random.SeedSequence(cfg.rng_seed & (2**64 - 1)).spawn(len(cfg.processes) + 1)
    telemetry_gen = np.random.Generator(np.random.PCG64(streams[0]))
    records: List[Tuple[float, int, int, TraceRecord]] = []
    seq = 0
    for proc, ss in zip(cfg.processes, streams[1:]):
        gen = np.random.Generator(np.random.PCG64(ss))
        for t in _poisson_times(gen, proc.rate, proc.start, proc.end):
            records.append((round(t, _PRECISION), 0, seq, TraceRecord.antigen(round(t, _PRECISION), proc.pid, proc.label)))
            seq += 1
    n_ticks = math.ceil(cfg.duration)
    for k in range(n_ticks):
        t = float(k)
        packets = cfg.baseline_packet_rate + _jitter(telemetry_gen, cfg.baseline_jitter)
        icmp = 0.0
        scan, transfer = cfg.scan, cfg.transfer
        if scan and scan.start <= t <= scan.end:
            icmp = scan.icmp_error_rate
            packets += scan.scan_packets(t) + _jitter(telemetry_gen, scan.packet_jitter)
        if transfer and transfer.start <= t <= transfer.end:
            packets += transfer.packet_rate + _jitter(telemetry_gen, transfer.packet_jitter)
        packets = round(max(packets, 0.0), _PRECISION)
        records.append((t, 1, seq, TraceRecord.telemetry(t, icmp, packets)))
        seq += 1
    records.sort(key=lambda r: r[:3])
    return [r[3] for r in records]
