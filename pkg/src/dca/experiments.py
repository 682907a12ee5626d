"""Repeated-run experiments over one trace and their comparison."""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .analysis import (
    Comparison,
    ExperimentSummary,
    McavReport,
    aggregate_runs,
    compare_summaries,
    compute_mcav,
)
from .core import ValidationError, WeightMatrix
from .signals import NormalizationConfig, SignalPipeline
from .tissue import Tissue, TissueConfig
from .trace import ReplayMode, TraceRecord, replay

logger = logging.getLogger(__name__)

EXPERIMENTS = ("exp1", "exp2", "exp3", "custom")


def preset_weights(experiment: str, base: Optional[WeightMatrix] = None) -> WeightMatrix:
    """exp1: no PAMP, safe->mature -1. exp2: PAMP, -1. exp3: PAMP, -2. custom: ``base``."""
    base = base or WeightMatrix()
    if experiment == "custom":
        return base
    if experiment not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    defaults = WeightMatrix()
    rows = {}
    for row in ("csm", "semi", "mature"):
        values = list(getattr(base, row))
        if experiment == "exp1":
            values[0] = 0.0
        elif values[0] == 0.0:
            # PAMP enabled: restore a zeroed PAMP weight to its default.
            values[0] = getattr(defaults, row)[0]
        rows[row] = tuple(values)
    safe_mature = -1.0 if experiment in ("exp1", "exp2") else -2.0
    rows["mature"] = rows["mature"][:2] + (safe_mature,)
    return base.replace(**rows)


@dataclass
class RunSpec:
    experiment: str = "custom"
    repeats: int = 10
    base_seed: int = 0
    tissue: TissueConfig = field(default_factory=TissueConfig)
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    mode: ReplayMode = ReplayMode.AS_FAST_AS_POSSIBLE
    speed: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.repeats < 1:
            raise ValidationError(f"repeats must be >= 1, got {self.repeats}")

    def seeds(self) -> List[int]:
        return [self.base_seed + i for i in range(self.repeats)]

    def tissue_config(self, seed: int) -> TissueConfig:
        weights = preset_weights(self.experiment, self.tissue.weights)
        return dataclasses.replace(self.tissue, weights=weights, rng_seed=seed)


def run_once(
    records: Sequence[TraceRecord],
    cfg: TissueConfig,
    normalization: Optional[NormalizationConfig] = None,
    mode: ReplayMode = ReplayMode.AS_FAST_AS_POSSIBLE,
    speed: float = 1.0,
) -> Tissue:
    engine = Tissue(cfg)
    return replay(list(records), SignalPipeline(normalization), engine, mode=mode, speed=speed)


def _run_report(args) -> Tuple[McavReport, Dict]:
    records, cfg, normalization, mode, speed = args
    engine = run_once(records, cfg, normalization, mode, speed)
    return compute_mcav(engine.presented), engine.metadata()


@dataclass
class ExperimentResult:
    summary: ExperimentSummary
    reports: List[McavReport]
    metadata: List[Dict]


def run_experiment(spec: RunSpec, trace: Sequence[TraceRecord]) -> ExperimentResult:
    """Replay ``trace`` through ``spec.repeats`` engines seeded base_seed+i."""
    records = list(trace)
    jobs = [
        (records, spec.tissue_config(seed), spec.normalization, spec.mode, spec.speed)
        for seed in spec.seeds()
    ]
    if spec.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_run_report, jobs))
    else:
        results = [_run_report(job) for job in jobs]
    reports = [r for r, _ in results]
    metadata = [m for _, m in results]
    summary = aggregate_runs(reports, spec.experiment, seeds=spec.seeds())
    logger.info("%s: %d runs, %d antigen types", spec.experiment, len(reports), len(summary.per_run))
    return ExperimentResult(summary, reports, metadata)


def compare_experiments(
    a: ExperimentSummary, b: ExperimentSummary, antigen_ids: Optional[Sequence[int]] = None
) -> List[Tuple[str, str, Comparison]]:
    return [(a.label, b.label, c) for c in compare_summaries(a, b, antigen_ids)]
