import pytest
from hypothesis import given
from hypothesis import strategies as st

from dca.core import ValidationError
from dca.signals import (
    NormalizationConfig,
    RawTelemetry,
    SignalPipeline,
    moving_average,
    normalize,
    rate_of_change,
)

CFG = NormalizationConfig()
rates = st.floats(min_value=0, max_value=1e6, allow_nan=False)


@pytest.mark.parametrize("samples, expected", [
    ([(1, 10), (2, 10)], 10),
    ([(1, 0), (2, 20)], 10),
    ([], 0),
    ([(0, 50), (1, 10), (2, 20)], 15),  # t=0 is outside (0, 2]
])
def test_moving_average(samples, expected):
    assert moving_average(samples, 2, 2) == pytest.approx(expected)


def test_moving_average_validation():
    with pytest.raises(ValidationError):
        moving_average([(2, 1), (1, 1)], 2, 2)
    with pytest.raises(ValidationError):
        moving_average([], 0, 2)


@pytest.mark.parametrize("args, expected", [((10, 10, 1), 0), ((0, 20, 1), 20), ((20, 0, 2), -10)])
def test_rate_of_change(args, expected):
    assert rate_of_change(*args) == expected


@pytest.mark.parametrize("dt", [0, -1])
def test_rate_of_change_rejects_dt(dt):
    with pytest.raises(ValidationError):
        rate_of_change(1, 2, dt)


def test_normalize_examples():
    s = normalize(RawTelemetry(0, 0, 0), 0, CFG)
    assert (s.pamp, s.danger, s.safe) == (0, 0, 100)
    s = normalize(RawTelemetry(0, CFG.pamp_cap, CFG.danger_cap), CFG.safe_cap * 3, CFG)
    assert (s.pamp, s.danger, s.safe) == (100, 100, 0)
    s = normalize(RawTelemetry(0, CFG.pamp_cap / 2, CFG.danger_cap / 2), -CFG.safe_cap / 2, CFG)
    assert (s.pamp, s.danger, s.safe) == pytest.approx((50, 50, 50))


@pytest.mark.parametrize("kwargs", [{"pamp_cap": 0}, {"ma_window": -1}, {"tick": float("nan")}])
def test_config_rejects_nonpositive(kwargs):
    with pytest.raises(ValidationError):
        NormalizationConfig(**kwargs)


def test_telemetry_rejects_negative():
    with pytest.raises(ValidationError):
        RawTelemetry(0, -1, 0)


@given(rates, rates, st.floats(min_value=-1e6, max_value=1e6))
def test_normalize_in_range(icmp, packets, roc):
    s = normalize(RawTelemetry(0, icmp, packets), roc, CFG)
    for v in (s.pamp, s.danger, s.safe):
        assert 0 <= v <= 100


@given(rates, rates, st.floats(min_value=0, max_value=1e4), st.floats(min_value=0, max_value=1e4))
def test_normalize_monotone(r1, r2, roc1, roc2):
    lo, hi = sorted((r1, r2))
    a = normalize(RawTelemetry(0, lo, lo), min(roc1, roc2), CFG)
    b = normalize(RawTelemetry(0, hi, hi), max(roc1, roc2), CFG)
    assert a.pamp <= b.pamp and a.danger <= b.danger and a.safe >= b.safe


@given(st.floats(min_value=0, max_value=CFG.pamp_cap / 2), st.floats(min_value=0, max_value=CFG.danger_cap / 2))
def test_normalize_linear_below_cap(icmp, packets):
    a = normalize(RawTelemetry(0, icmp, packets), 0, CFG)
    b = normalize(RawTelemetry(0, 2 * icmp, 2 * packets), 0, CFG)
    assert b.pamp == pytest.approx(2 * a.pamp)
    assert b.danger == pytest.approx(2 * a.danger)


def test_pipeline_matches_pure_functions():
    samples = [(0, 20), (1, 20), (2, 320), (3, 320), (4, 120)]
    pipe = SignalPipeline(CFG)
    prev = None
    for t, rate in samples:
        pipe.ingest(RawTelemetry(t, 1, rate))
        s = pipe.tick(t)
        ma = moving_average(samples[: t + 1], CFG.ma_window, t)
        roc = 0.0 if prev is None else rate_of_change(prev, ma, 1)
        prev = ma
        assert s == normalize(RawTelemetry(t, 1, rate), roc, CFG)


def test_pipeline_first_tick_is_stable_and_ticks_without_telemetry():
    pipe = SignalPipeline(CFG)
    assert pipe.tick(0).safe == 100
    pipe.ingest(RawTelemetry(1, 0, 400))
    s = pipe.tick(1)
    assert s.danger == 80 and s.safe == 0  # MA jumped 0 -> 400 in 1 s


def test_pipeline_rejects_out_of_order_telemetry():
    pipe = SignalPipeline(CFG)
    pipe.ingest(RawTelemetry(2, 0, 0))
    with pytest.raises(ValidationError):
        pipe.ingest(RawTelemetry(1, 0, 0))
