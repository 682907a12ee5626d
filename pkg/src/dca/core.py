"""Dendritic cell domain types and the single-cell lifecycle.

A cell accumulates three weighted outputs (costimulation, semi-mature and
mature cytokine) from every signal tick it sees while immature, stores the
antigen it samples, and migrates once costimulation reaches its threshold.
On migration every stored antigen is presented in the cell's context.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Mapping, Optional

SIGNALS = ("pamp", "danger", "safe")
OUTPUTS = ("csm", "semi", "mature")

DEFAULT_CAPACITY = 50


class ValidationError(ValueError):
    """Input data (signals, weights, telemetry, config) is malformed."""


class CellStateError(RuntimeError):
    """An operation was applied to a cell in the wrong lifecycle state."""


class CellState(enum.Enum):
    IMMATURE = "immature"
    PRESENTED_SEMI = "presented_semi"
    PRESENTED_MATURE = "presented_mature"


class Context(enum.Enum):
    SEMI_MATURE = "semi_mature"
    MATURE = "mature"


@dataclass(frozen=True)
class Antigen:
    """A monitored entity; identity is the id alone."""

    id: int
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if isinstance(self.id, bool) or not isinstance(self.id, int) or self.id < 0:
            raise ValidationError(f"antigen id must be a non-negative integer, got {self.id!r}")


@dataclass(frozen=True)
class SignalVector:
    pamp: float = 0.0
    danger: float = 0.0
    safe: float = 0.0

    def __post_init__(self):
        for name in SIGNALS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} signal is not finite: {value!r}")
            if not 0.0 <= value <= 100.0:
                raise ValidationError(f"{name} signal outside [0, 100]: {value!r}")

    def __add__(self, other: "SignalVector") -> "SignalVector":
        # Sums may exceed 100, so bypass range validation.
        out = object.__new__(SignalVector)
        for name in SIGNALS:
            object.__setattr__(out, name, getattr(self, name) + getattr(other, name))
        return out


@dataclass(frozen=True)
class WeightMatrix:
    """Coefficients w[input][output] for input in SIGNALS, output in OUTPUTS.

    Stored by output row, so ``csm`` is the tuple of (pamp, danger, safe)
    weights feeding costimulation.
    """

    csm: tuple = (2.0, 1.0, 2.0)
    semi: tuple = (0.0, 0.0, 1.0)
    mature: tuple = (2.0, 1.0, -1.0)

    def __post_init__(self):
        for row in OUTPUTS:
            values = tuple(float(v) for v in getattr(self, row))
            if len(values) != 3:
                raise ValidationError(f"weight row {row!r} needs 3 entries, got {len(values)}")
            if not all(math.isfinite(v) for v in values):
                raise ValidationError(f"non-finite weight in row {row!r}: {values}")
            object.__setattr__(self, row, values)
        if any(v < 0 for v in self.csm):
            raise ValidationError(f"csm weights must be >= 0, got {self.csm}")
        if self.mature[2] > 0:
            raise ValidationError(f"safe->mature weight must be <= 0, got {self.mature[2]}")

    def __getitem__(self, key):
        signal, output = key
        return getattr(self, output)[SIGNALS.index(signal)]

    @classmethod
    def from_flat(cls, values) -> "WeightMatrix":
        """Build from nine values in output-major order (csm, semi, mature rows)."""
        values = [float(v) for v in values]
        if len(values) != 9:
            raise ValidationError(f"expected 9 weights, got {len(values)}")
        return cls(tuple(values[0:3]), tuple(values[3:6]), tuple(values[6:9]))

    def flat(self) -> List[float]:
        return [*self.csm, *self.semi, *self.mature]

    def replace(self, **rows) -> "WeightMatrix":
        merged = {row: getattr(self, row) for row in OUTPUTS}
        merged.update(rows)
        return WeightMatrix(**merged)

    def as_dict(self) -> Mapping[str, List[float]]:
        return {row: list(getattr(self, row)) for row in OUTPUTS}


@dataclass
class CellOutputs:
    csm: float = 0.0
    semi: float = 0.0
    mature: float = 0.0


@dataclass(frozen=True)
class PresentedAntigen:
    antigen: Antigen
    context: Context
    t: float = 0.0


@dataclass
class DendriticCell:
    migration_threshold: float
    capacity: int = DEFAULT_CAPACITY
    outputs: CellOutputs = field(default_factory=CellOutputs)
    antigen_store: Deque[Antigen] = field(default_factory=deque)
    state: CellState = CellState.IMMATURE

    def __post_init__(self):
        if not (self.migration_threshold > 0 and math.isfinite(self.migration_threshold)):
            raise ValidationError(f"migration threshold must be > 0, got {self.migration_threshold!r}")
        if self.capacity < 1:
            raise ValidationError(f"antigen capacity must be >= 1, got {self.capacity}")

    def _require_immature(self, action: str) -> None:
        if self.state is not CellState.IMMATURE:
            raise CellStateError(f"cannot {action} in state {self.state.value}")

    def process_signals(self, s: SignalVector, w: WeightMatrix) -> None:
        """Add the weighted sum of ``s`` to each cumulative output."""
        self._require_immature("process signals")
        out = self.outputs
        x = (s.pamp, s.danger, s.safe)
        out.csm += w.csm[0] * x[0] + w.csm[1] * x[1] + w.csm[2] * x[2]
        out.semi += w.semi[0] * x[0] + w.semi[1] * x[1] + w.semi[2] * x[2]
        out.mature += w.mature[0] * x[0] + w.mature[1] * x[1] + w.mature[2] * x[2]

    def sample_antigen(self, a: Antigen) -> None:
        self._require_immature("sample antigen")
        if len(self.antigen_store) >= self.capacity:
            self.antigen_store.popleft()
        self.antigen_store.append(a)

    def context(self) -> Context:
        # Ties go to semi-mature.
        if self.outputs.mature > self.outputs.semi:
            return Context.MATURE
        return Context.SEMI_MATURE

    def check_maturation(self) -> Optional[Context]:
        """Return the migration context, or None if the cell keeps sampling."""
        self._require_immature("check maturation")
        if self.outputs.csm < self.migration_threshold:
            return None
        return self.context()

    def present(self, context: Context, t: float = 0.0) -> List[PresentedAntigen]:
        self._require_immature("present")
        self.state = (
            CellState.PRESENTED_MATURE if context is Context.MATURE else CellState.PRESENTED_SEMI
        )
        presented = [PresentedAntigen(a, context, t) for a in self.antigen_store]
        self.antigen_store.clear()
        return presented
