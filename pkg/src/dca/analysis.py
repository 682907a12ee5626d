"""Post-hoc scoring of presented antigen.

The anomaly score of an antigen type is its MCAV: the percentage of its
presentations that were made in the mature context. Repeated runs are
averaged per antigen, and experiment pairs are compared with a paired
t-test over matched runs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .core import Context, PresentedAntigen, ValidationError

SUMMARY_COLUMNS = ["experiment", "antigen_id", "label", "runs", "mean_mcav_percent", "per_run_values"]
SIGNIFICANCE_COLUMNS = ["experiment_a", "experiment_b", "antigen_id", "t", "df", "significant"]
NO_DATA = "no data"
MISSING = "NA"

# Two-tailed Student t critical values for df 1..30.
T_CRITICAL = {
    0.90: (6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812,
           1.796, 1.782, 1.771, 1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725,
           1.721, 1.717, 1.714, 1.711, 1.708, 1.706, 1.703, 1.701, 1.699, 1.697),
    0.95: (12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
           2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
           2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042),
    0.99: (63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499, 3.355, 3.250, 3.169,
           3.106, 3.055, 3.012, 2.977, 2.947, 2.921, 2.898, 2.878, 2.861, 2.845,
           2.831, 2.819, 2.807, 2.797, 2.787, 2.779, 2.771, 2.763, 2.756, 2.750),
}


def critical_value(df: int, confidence: float = 0.95) -> float:
    """Table lookup; df above 30 uses the df=30 row, which is conservative."""
    try:
        row = T_CRITICAL[confidence]
    except KeyError:
        raise ValidationError(
            f"no critical values for confidence {confidence}; choose from {sorted(T_CRITICAL)}"
        ) from None
    if df < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {df}")
    return row[min(df, len(row)) - 1]


@dataclass
class AntigenScore:
    presentations_total: int = 0
    presentations_mature: int = 0
    label: Optional[str] = None

    @property
    def mcav_percent(self) -> Optional[float]:
        if self.presentations_total == 0:
            return None
        return 100.0 * self.presentations_mature / self.presentations_total


@dataclass
class McavReport:
    scores: Dict[int, AntigenScore] = field(default_factory=dict)

    def mcav(self, antigen_id: int) -> Optional[float]:
        score = self.scores.get(antigen_id)
        return None if score is None else score.mcav_percent

    def total(self) -> int:
        return sum(s.presentations_total for s in self.scores.values())


def compute_mcav(log: Iterable[PresentedAntigen]) -> McavReport:
    report = McavReport()
    for entry in log:
        score = report.scores.setdefault(entry.antigen.id, AntigenScore())
        score.presentations_total += 1
        if entry.context is Context.MATURE:
            score.presentations_mature += 1
        if score.label is None and entry.antigen.label is not None:
            score.label = entry.antigen.label
    report.scores = dict(sorted(report.scores.items()))
    return report


@dataclass
class ExperimentSummary:
    """Per-antigen MCAV across runs. ``per_run[id][i]`` is None when run i had no data."""

    label: str
    repeats: int
    per_run: Dict[int, List[Optional[float]]] = field(default_factory=dict)
    labels: Dict[int, Optional[str]] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)

    def values(self, antigen_id: int) -> List[float]:
        return [v for v in self.per_run.get(antigen_id, []) if v is not None]

    def runs(self, antigen_id: int) -> int:
        return len(self.values(antigen_id))

    def mean(self, antigen_id: int) -> Optional[float]:
        values = self.values(antigen_id)
        if not values:
            return None
        return math.fsum(values) / len(values)

    def antigen_ids(self) -> List[int]:
        return sorted(self.per_run)


def aggregate_runs(reports: Sequence[McavReport], label: str, seeds: Sequence[int] = ()) -> ExperimentSummary:
    if not reports:
        raise ValidationError("aggregate_runs needs at least one report")
    summary = ExperimentSummary(label=label, repeats=len(reports), seeds=list(seeds))
    ids = sorted({i for r in reports for i in r.scores})
    for antigen_id in ids:
        summary.per_run[antigen_id] = [r.mcav(antigen_id) for r in reports]
        summary.labels[antigen_id] = next(
            (r.scores[antigen_id].label for r in reports
             if antigen_id in r.scores and r.scores[antigen_id].label is not None),
            None,
        )
    return summary


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    significant: bool
    critical: float

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.t)


def paired_t_test(a: Sequence[float], b: Sequence[float], confidence: float = 0.95) -> TTestResult:
    if len(a) != len(b):
        raise ValidationError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValidationError(f"paired t-test needs at least 2 pairs, got {n}")
    d = [x - y for x, y in zip(a, b)]
    df = n - 1
    crit = critical_value(df, confidence)
    mean = math.fsum(d) / n
    var = math.fsum((x - mean) ** 2 for x in d) / df
    # Constant differences leave rounding residue in var; treat it as zero.
    scale = max(1.0, max(abs(x) for x in d))
    if math.sqrt(var) <= 1e-12 * scale:
        if abs(mean) <= 1e-12 * scale:
            mean = 0.0
        if mean == 0.0:
            return TTestResult(0.0, df, False, crit)
        return TTestResult(math.copysign(math.inf, mean), df, True, crit)
    t = mean / math.sqrt(var / n)
    return TTestResult(t, df, abs(t) > crit, crit)


def fmt_number(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


def summary_rows(summary: ExperimentSummary) -> List[List[str]]:
    rows = []
    for antigen_id in summary.antigen_ids():
        mean = summary.mean(antigen_id)
        per_run = ";".join(MISSING if v is None else fmt_number(v) for v in summary.per_run[antigen_id])
        rows.append([
            summary.label,
            str(antigen_id),
            summary.labels.get(antigen_id) or "",
            str(summary.runs(antigen_id)),
            NO_DATA if mean is None else fmt_number(mean),
            per_run,
        ])
    return rows


def summary_csv(summaries: Iterable[ExperimentSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for summary in summaries:
        writer.writerows(summary_rows(summary))
    return buf.getvalue()


def read_summary_csv(text: str) -> Dict[str, ExperimentSummary]:
    """Parse a summary CSV back into one ExperimentSummary per experiment label."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != SUMMARY_COLUMNS:
        raise ValidationError(f"unexpected summary columns: {reader.fieldnames}")
    out: Dict[str, ExperimentSummary] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            values = [None if v == MISSING else float(v) for v in row["per_run_values"].split(";")]
            antigen_id = int(row["antigen_id"])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        summary = out.get(row["experiment"])
        if summary is None:
            summary = out[row["experiment"]] = ExperimentSummary(row["experiment"], len(values))
        if len(values) != summary.repeats:
            raise ValidationError(f"line {lineno}: expected {summary.repeats} per-run values, got {len(values)}")
        summary.per_run[antigen_id] = values
        summary.labels[antigen_id] = row["label"] or None
    return out


@dataclass(frozen=True)
class Comparison:
    antigen_id: int
    result: Optional[TTestResult]
    pairs: int


def compare_summaries(
    a: ExperimentSummary,
    b: ExperimentSummary,
    antigen_ids: Optional[Sequence[int]] = None,
    confidence: float = 0.95,
) -> List[Comparison]:
    """Paired t-test per antigen, pairing run i of ``a`` with run i of ``b``.

    Runs where either side has no data are dropped from the pairing; fewer
    than two remaining pairs yields a result of None ("no data").
    """
    if a.repeats != b.repeats:
        raise ValidationError(f"repeat counts differ: {a.repeats} vs {b.repeats}")
    if a.seeds and b.seeds and a.seeds != b.seeds:
        raise ValidationError("summaries were produced with different seeds")
    if antigen_ids is None:
        antigen_ids = sorted(set(a.per_run) | set(b.per_run))
    out = []
    for antigen_id in antigen_ids:
        xs = a.per_run.get(antigen_id, [None] * a.repeats)
        ys = b.per_run.get(antigen_id, [None] * b.repeats)
        pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
        if len(pairs) < 2:
            out.append(Comparison(antigen_id, None, len(pairs)))
            continue
        result = paired_t_test([p[0] for p in pairs], [p[1] for p in pairs], confidence)
        out.append(Comparison(antigen_id, result, len(pairs)))
    return out


def significance_csv(rows: Iterable[tuple]) -> str:
    """Rows are (experiment_a, experiment_b, Comparison)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SIGNIFICANCE_COLUMNS)
    for exp_a, exp_b, cmp in rows:
        if cmp.result is None:
            writer.writerow([exp_a, exp_b, cmp.antigen_id, NO_DATA, "", NO_DATA])
        else:
            r = cmp.result
            writer.writerow([exp_a, exp_b, cmp.antigen_id, fmt_number(r.t), r.df, str(r.significant).lower()])
    return buf.getvalue()
