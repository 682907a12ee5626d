"""The tissue server: a fixed-size population of dendritic cells.

Signal ticks are broadcast to every cell; each antigen event is handed to
``antigen_fanout`` distinct cells chosen at random. After each tick the pool
is scanned in order, and every cell whose costimulation reached its
threshold presents its antigen and is replaced in place by a fresh cell.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .core import (
    DEFAULT_CAPACITY,
    Antigen,
    DendriticCell,
    PresentedAntigen,
    SignalVector,
    ValidationError,
    WeightMatrix,
)
from .rng import EngineRandom

logger = logging.getLogger(__name__)


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class TissueConfig:
    population_size: int = 100
    antigen_fanout: int = 1
    threshold_range: Tuple[float, float] = (100.0, 300.0)
    weights: WeightMatrix = field(default_factory=WeightMatrix)
    rng_seed: int = 0
    flush_at_end: bool = False
    antigen_capacity: int = DEFAULT_CAPACITY

    def __post_init__(self):
        object.__setattr__(self, "threshold_range", tuple(float(v) for v in self.threshold_range))
        if self.population_size < 1:
            raise ConfigError(f"population_size must be >= 1, got {self.population_size}")
        if not 1 <= self.antigen_fanout <= self.population_size:
            raise ConfigError(
                f"antigen_fanout must be in [1, {self.population_size}], got {self.antigen_fanout}"
            )
        t_min, t_max = self.threshold_range
        if not 0 < t_min <= t_max:
            raise ConfigError(f"threshold_range needs 0 < t_min <= t_max, got {self.threshold_range}")
        if self.antigen_capacity < 1:
            raise ConfigError(f"antigen_capacity must be >= 1, got {self.antigen_capacity}")
        if not isinstance(self.weights, WeightMatrix):
            raise ConfigError("weights must be a WeightMatrix")

    def as_dict(self) -> Dict:
        return {
            "population_size": self.population_size,
            "antigen_fanout": self.antigen_fanout,
            "threshold_range": list(self.threshold_range),
            "weights": self.weights.as_dict(),
            "rng_seed": self.rng_seed,
            "flush_at_end": self.flush_at_end,
            "antigen_capacity": self.antigen_capacity,
        }

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Tissue:
    """Engine state: the cell pool, the presented log, a clock and the rng."""

    def __init__(self, cfg: TissueConfig):
        self.cfg = cfg
        self.rng = EngineRandom(cfg.rng_seed)
        self.clock = 0.0
        self.presented: List[PresentedAntigen] = []
        self.pool: List[DendriticCell] = [self._fresh_cell() for _ in range(cfg.population_size)]
        self.signal_ticks = 0
        self.antigen_events = 0
        self.migrations = 0
        self._finalized = False

    def _fresh_cell(self) -> DendriticCell:
        return DendriticCell(
            migration_threshold=self.rng.threshold(*self.cfg.threshold_range),
            capacity=self.cfg.antigen_capacity,
        )

    def _advance(self, t: float) -> None:
        if t < self.clock:
            raise ValidationError(f"event at t={t} is earlier than engine clock {self.clock}")
        self.clock = t

    def on_signal_tick(self, s: SignalVector, t: float = None) -> None:
        if t is not None:
            self._advance(t)
        w = self.cfg.weights
        for cell in self.pool:
            cell.process_signals(s, w)
        for i, cell in enumerate(self.pool):
            context = cell.check_maturation()
            if context is None:
                continue
            self.presented.extend(cell.present(context, self.clock))
            self.pool[i] = self._fresh_cell()
            self.migrations += 1
        self.signal_ticks += 1

    def on_antigen(self, a: Antigen, t: float = None) -> None:
        if t is not None:
            self._advance(t)
        for i in self.rng.recipients(self.cfg.population_size, self.cfg.antigen_fanout):
            self.pool[i].sample_antigen(a)
        self.antigen_events += 1

    def finalize(self) -> List[PresentedAntigen]:
        """End the run; with flush_at_end every remaining cell presents as it stands."""
        if self.cfg.flush_at_end and not self._finalized:
            for cell in self.pool:
                self.presented.extend(cell.present(cell.context(), self.clock))
        elif not self._finalized:
            dropped = sum(len(c.antigen_store) for c in self.pool)
            if dropped:
                logger.debug("discarding %d antigen held by immature cells", dropped)
        self._finalized = True
        return self.presented

    def metadata(self) -> Dict:
        return {
            "seed": self.cfg.rng_seed,
            "config_hash": self.cfg.digest(),
            "signal_ticks": self.signal_ticks,
            "antigen_events": self.antigen_events,
            "migrations": self.migrations,
            "presented": len(self.presented),
        }
