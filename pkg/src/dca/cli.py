"""Command-line runner: scenario generation, replay, experiments, comparison.

Settings resolve as command-line flag, then ``--config`` JSON file, then the
built-in default. Every output file is written to a temporary name and
renamed into place.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .analysis import (
    ExperimentSummary,
    aggregate_runs,
    compute_mcav,
    read_summary_csv,
    significance_csv,
    summary_csv,
)
from .core import ValidationError, WeightMatrix
from .experiments import EXPERIMENTS, RunSpec, compare_experiments, run_experiment, run_once
from .scenario import default_scenario, generate, load_config, save_config
from .signals import NormalizationConfig
from .tissue import TissueConfig
from .trace import ReplayMode, read_trace, write_trace

logger = logging.getLogger("dca")

DEFAULTS = {
    "population_size": 100,
    "antigen_fanout": 1,
    "threshold_range": [100.0, 300.0],
    "weights": WeightMatrix().flat(),
    "antigen_capacity": 50,
    "flush_at_end": False,
    "seed": 0,
    "repeats": 10,
    "jobs": 1,
    "mode": "as_fast_as_possible",
    "speed": 1.0,
    "normalization": {},
}

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def load_settings(args: argparse.Namespace) -> Dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            file_settings = json.load(fh)
        unknown = set(file_settings) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        settings.update(file_settings)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _weights(value) -> WeightMatrix:
    if isinstance(value, dict):
        return WeightMatrix(**{k: tuple(v) for k, v in value.items()})
    return WeightMatrix.from_flat(value)


def tissue_config(settings: Dict) -> TissueConfig:
    return TissueConfig(
        population_size=int(settings["population_size"]),
        antigen_fanout=int(settings["antigen_fanout"]),
        threshold_range=tuple(settings["threshold_range"]),
        weights=_weights(settings["weights"]),
        rng_seed=int(settings["seed"]),
        flush_at_end=bool(settings["flush_at_end"]),
        antigen_capacity=int(settings["antigen_capacity"]),
    )


def _parse_weights(text: str) -> List[float]:
    parts = text.split(",")
    if len(parts) != 9:
        raise argparse.ArgumentTypeError("expected 9 comma-separated values (csm, semi, mature rows)")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_tissue_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of settings (flags override it)")
    p.add_argument("--weights", type=_parse_weights,
                   help="nine weights: csm(pamp,danger,safe),semi(...),mature(...)")
    p.add_argument("--threshold-range", dest="threshold_range", type=float, nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--population", dest="population_size", type=int)
    p.add_argument("--fanout", dest="antigen_fanout", type=int)
    p.add_argument("--capacity", dest="antigen_capacity", type=int)
    p.add_argument("--flush", dest="flush_at_end", action="store_const", const=True,
                   help="force-present immature cells at end of trace")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=[m.value for m in ReplayMode])
    p.add_argument("--speed", type=float, help="realtime speed-up factor")
    p.add_argument("--out-dir", dest="out_dir", default=".")


def _print_summaries(summaries: Sequence[ExperimentSummary], out=None) -> None:
    out = out or sys.stdout
    print(f"{'experiment':<10} {'antigen':>8} {'label':<10} {'runs':>4} {'mean MCAV %':>12}", file=out)
    for s in summaries:
        for antigen_id in s.antigen_ids():
            mean = s.mean(antigen_id)
            shown = "no data" if mean is None else f"{mean:.2f}"
            print(f"{s.label:<10} {antigen_id:>8} {(s.labels.get(antigen_id) or ''):<10} "
                  f"{s.runs(antigen_id):>4} {shown:>12}", file=out)


def cmd_gen_scenario(args) -> int:
    cfg = load_config(args.scenario) if args.scenario else default_scenario()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    records = generate(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace(records, out)
    if args.write_config:
        save_config(cfg, args.write_config)
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def _load_or_generate(trace_path: Optional[str], seed: int):
    if trace_path:
        return read_trace(trace_path)
    return generate(default_scenario(seed=seed))


def cmd_run_replay(args) -> int:
    settings = load_settings(args)
    cfg = tissue_config(settings)
    records = read_trace(args.trace)
    engine = run_once(records, cfg, NormalizationConfig(**settings["normalization"]),
                      ReplayMode(settings["mode"]), float(settings["speed"]))
    summary = aggregate_runs([compute_mcav(engine.presented)], args.label, seeds=[cfg.rng_seed])
    out_dir = Path(args.out_dir)
    atomic_write(out_dir / "mcav.csv", summary_csv([summary]))
    lines = ["t,antigen_id,label,context"] + [
        f"{p.t:.6f},{p.antigen.id},{p.antigen.label or ''},{p.context.value}" for p in engine.presented
    ]
    atomic_write(out_dir / "presented.csv", "\n".join(lines) + "\n")
    atomic_write(out_dir / "run.json", json.dumps(engine.metadata(), indent=2, sort_keys=True) + "\n")
    _print_summaries([summary])
    return EXIT_OK


def cmd_run_experiment(args) -> int:
    settings = load_settings(args)
    base = tissue_config(settings)
    records = _load_or_generate(args.trace, int(settings["seed"]))
    experiments = ["exp1", "exp2", "exp3"] if args.experiment == "all" else [args.experiment]
    out_dir = Path(args.out_dir)
    summaries = []
    for name in experiments:
        spec = RunSpec(
            experiment=name,
            repeats=int(settings["repeats"]),
            base_seed=int(settings["seed"]),
            tissue=base,
            normalization=NormalizationConfig(**settings["normalization"]),
            mode=ReplayMode(settings["mode"]),
            speed=float(settings["speed"]),
            jobs=int(settings["jobs"]),
        )
        result = run_experiment(spec, records)
        summaries.append(result.summary)
        atomic_write(out_dir / f"summary_{name}.csv", summary_csv([result.summary]))
        meta = {"experiment": name, "seeds": spec.seeds(), "weights": spec.tissue_config(0).weights.as_dict(),
                "runs": result.metadata}
        atomic_write(out_dir / f"summary_{name}.meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if len(summaries) > 1:
        atomic_write(out_dir / "summary.csv", summary_csv(summaries))
        rows = []
        for i in range(len(summaries)):
            for j in range(i + 1, len(summaries)):
                rows.extend(compare_experiments(summaries[i], summaries[j]))
        atomic_write(out_dir / "significance.csv", significance_csv(rows))
    _print_summaries(summaries)
    return EXIT_OK


def _pick(summaries: Dict[str, ExperimentSummary], label: Optional[str], path: str) -> ExperimentSummary:
    if label is not None:
        if label not in summaries:
            raise ValidationError(f"{path} has no experiment {label!r}")
        return summaries[label]
    if len(summaries) != 1:
        raise ValidationError(f"{path} holds {len(summaries)} experiments; pass the label to use")
    return next(iter(summaries.values()))


def _sidecar_seeds(path: str) -> List[int]:
    meta = Path(path).with_suffix(".meta.json")
    if meta.exists():
        return json.loads(meta.read_text(encoding="utf-8")).get("seeds", [])
    return []


def cmd_compare(args) -> int:
    a = _pick(read_summary_csv(Path(args.a).read_text(encoding="utf-8")), args.exp_a, args.a)
    b = _pick(read_summary_csv(Path(args.b).read_text(encoding="utf-8")), args.exp_b, args.b)
    a.seeds, b.seeds = a.seeds or _sidecar_seeds(args.a), b.seeds or _sidecar_seeds(args.b)
    ids = [int(x) for x in args.ids.split(",")] if args.ids else None
    rows = compare_experiments(a, b, ids)
    atomic_write(Path(args.out), significance_csv(rows))
    for exp_a, exp_b, cmp in rows:
        if cmp.result is None:
            print(f"{exp_a} vs {exp_b} antigen {cmp.antigen_id}: no data")
        else:
            r = cmp.result
            verdict = "significant" if r.significant else "not significant"
            print(f"{exp_a} vs {exp_b} antigen {cmp.antigen_id}: t={r.t:.3f} df={r.df} {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dca", description="Dendritic cell algorithm experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenario", help="write a synthetic port-scan trace")
    p.add_argument("--scenario", help="scenario config JSON (default: built-in port-scan session)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--write-config", dest="write_config", help="also save the effective scenario config")
    p.set_defaults(func=cmd_gen_scenario)

    p = sub.add_parser("run-replay", help="replay one trace through one engine")
    p.add_argument("--trace", required=True)
    p.add_argument("--label", default="custom")
    _add_tissue_flags(p)
    p.set_defaults(func=cmd_run_replay)

    p = sub.add_parser("run-experiment", help="repeated runs under an experiment preset")
    p.add_argument("--experiment", choices=[*EXPERIMENTS, "all"], default="all")
    p.add_argument("--trace", help="trace file (default: generate the built-in scenario with --seed)")
    p.add_argument("--repeats", type=int)
    p.add_argument("--jobs", type=int, help="worker processes for repeated runs")
    _add_tissue_flags(p)
    p.set_defaults(func=cmd_run_experiment)

    p = sub.add_parser("compare", help="paired t-tests between two experiment summaries")
    p.add_argument("--a", required=True, help="summary CSV")
    p.add_argument("--b", required=True, help="summary CSV")
    p.add_argument("--exp-a", dest="exp_a")
    p.add_argument("--exp-b", dest="exp_b")
    p.add_argument("--ids", help="comma-separated antigen ids (default: all)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
