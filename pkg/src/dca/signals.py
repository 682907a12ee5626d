"""Raw host telemetry to normalized signal concentrations.

PAMP comes from the ICMP error rate, danger from the outbound packet rate,
and safe from how stable the packet rate is: the smoothed (moving-average)
packet rate is differenced tick to tick, and a small rate of change maps to
a high safe concentration.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

from .core import SignalVector, ValidationError


@dataclass(frozen=True)
class RawTelemetry:
    t: float
    icmp_errors_per_sec: float = 0.0
    packets_sent_per_sec: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"telemetry {name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class NormalizationConfig:
    pamp_cap: float = 10.0
    danger_cap: float = 500.0
    safe_cap: float = 50.0
    ma_window: float = 2.0
    tick: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be > 0, got {value!r}")


def moving_average(samples: Sequence[Tuple[float, float]], window: float, t_now: float) -> float:
    """Mean of the sample values with t in (t_now - window, t_now]; 0 if none."""
    if window <= 0:
        raise ValidationError(f"window must be > 0, got {window!r}")
    times = [t for t, _ in samples]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValidationError("moving_average samples are not time-ordered")
    lo = t_now - window
    selected = [v for t, v in samples if lo < t <= t_now]
    if not selected:
        return 0.0
    return math.fsum(selected) / len(selected)


def rate_of_change(ma_prev: float, ma_now: float, dt: float) -> float:
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt!r}")
    return (ma_now - ma_prev) / dt


def normalize(raw: RawTelemetry, roc: float, cfg: NormalizationConfig) -> SignalVector:
    if not math.isfinite(roc):
        raise ValidationError(f"rate of change is not finite: {roc!r}")
    pamp = 100.0 * min(raw.icmp_errors_per_sec / cfg.pamp_cap, 1.0)
    danger = 100.0 * min(raw.packets_sent_per_sec / cfg.danger_cap, 1.0)
    safe = 100.0 * max(0.0, 1.0 - abs(roc) / cfg.safe_cap)
    return SignalVector(pamp, danger, safe)


class SignalPipeline:
    """Stateful tissue client: ingests telemetry, emits one SignalVector per tick.

    Each tick uses the latest telemetry record at or before the tick time for
    PAMP and danger. The first tick has no previous average, so its rate of
    change is taken as 0.
    """

    def __init__(self, cfg: Optional[NormalizationConfig] = None):
        self.cfg = cfg or NormalizationConfig()
        self._times: List[float] = []
        self._rates: List[float] = []
        self._latest: Optional[RawTelemetry] = None
        self._prev_ma: Optional[float] = None
        self._prev_tick: Optional[float] = None

    def ingest(self, raw: RawTelemetry) -> None:
        if self._times and raw.t < self._times[-1]:
            raise ValidationError(f"telemetry at t={raw.t} arrived after t={self._times[-1]}")
        self._times.append(raw.t)
        self._rates.append(raw.packets_sent_per_sec)
        self._latest = raw

    def _window_mean(self, t_now: float) -> float:
        # Same rule as moving_average, using bisection over the stored history.
        hi = bisect_right(self._times, t_now)
        lo = bisect_right(self._times, t_now - self.cfg.ma_window)
        if hi <= lo:
            return 0.0
        return math.fsum(self._rates[lo:hi]) / (hi - lo)

    def tick(self, t_now: float) -> SignalVector:
        ma_now = self._window_mean(t_now)
        if self._prev_ma is None:
            roc = 0.0
        else:
            roc = rate_of_change(self._prev_ma, ma_now, t_now - self._prev_tick)
        self._prev_ma, self._prev_tick = ma_now, t_now
        raw = self._latest if self._latest is not None else RawTelemetry(t_now)
        return normalize(raw, roc, self.cfg)
