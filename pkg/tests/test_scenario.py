import dataclasses

import pytest
from scipy import stats

from dca.core import ValidationError
from dca.scenario import (
    ProcessSpec,
    ScanSpec,
    ScenarioConfig,
    TransferSpec,
    default_scenario,
    generate,
    load_config,
    save_config,
)
from dca.signals import SignalPipeline
from dca.tissue import Tissue, TissueConfig
from dca.trace import ANTIGEN, TELEMETRY, dumps, loads, replay


def test_zero_duration_is_empty():
    assert generate(ScenarioConfig(duration=0)) == []


def test_icmp_only_during_scan():
    cfg = ScenarioConfig(duration=60, scan=ScanSpec(20, 30, 8, 100), baseline_packet_rate=10)
    for r in generate(cfg):
        assert r.icmp_errors_per_sec == (8 if 20 <= r.t <= 30 else 0)
        assert r.packets_sent_per_sec == (110 if 20 <= r.t <= 30 else 10)


def test_poisson_count_and_determinism():
    cfg = ScenarioConfig(duration=10, processes=[ProcessSpec("nmap", 3, 5.0, 0, 10)], rng_seed=17)
    events = [r for r in generate(cfg) if r.kind == ANTIGEN]
    lo, hi = stats.poisson.ppf(0.0005, 50), stats.poisson.ppf(0.9995, 50)
    assert lo <= len(events) <= hi
    assert generate(cfg) == generate(cfg)
    assert generate(cfg) != generate(cfg.with_seed(18))


@pytest.mark.parametrize("seed", range(5))
def test_default_scenario_properties(seed):
    cfg = default_scenario(seed)
    recs = generate(cfg)
    assert [r.t for r in recs] == sorted(r.t for r in recs)
    assert loads(dumps(recs)) == recs
    nmap = [r.t for r in recs if r.kind == ANTIGEN and r.label == "nmap"]
    assert nmap and all(15 <= t <= 25 for t in nmap)
    for r in recs:
        if r.kind != TELEMETRY:
            continue
        if cfg.scan.start <= r.t <= cfg.scan.end:
            assert r.icmp_errors_per_sec > 0
            assert r.packets_sent_per_sec > cfg.baseline_packet_rate
        else:
            assert r.icmp_errors_per_sec == 0
    labels = {r.label for r in recs if r.kind == ANTIGEN}
    assert labels == {"bash", "sshd", "nmap", "x-forward", "scp"}


def test_default_replays_to_nonempty_log():
    engine = replay(generate(default_scenario()), SignalPipeline(), Tissue(TissueConfig()))
    assert engine.presented


def test_burst_pattern():
    scan = ScanSpec(10, 20, 1, 500, burst_period=4, burst_floor=100)
    assert [scan.scan_packets(t) for t in range(10, 18)] == [500, 500, 100, 100] * 2


@pytest.mark.parametrize("change", [
    {"duration": -1},
    {"baseline_packet_rate": -5},
    {"scan": ScanSpec(50, 70, 1, 1)},
    {"transfer": TransferSpec(10, 5, 1)},
    {"transfer": TransferSpec(10, 20, 10, packet_jitter=20)},
    {"processes": (ProcessSpec("a", 1, 1, 0, 1), ProcessSpec("b", 1, 1, 0, 1))},
])
def test_invalid_config(change):
    with pytest.raises(ValidationError):
        dataclasses.replace(default_scenario(), **change)


def test_config_file_round_trip(tmp_path):
    cfg = default_scenario(seed=4)
    save_config(cfg, tmp_path / "s.json")
    assert load_config(tmp_path / "s.json") == cfg
