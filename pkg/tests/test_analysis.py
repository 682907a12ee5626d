import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import stats

from dca.analysis import (
    T_CRITICAL,
    ExperimentSummary,
    aggregate_runs,
    compare_summaries,
    compute_mcav,
    critical_value,
    paired_t_test,
    read_summary_csv,
    significance_csv,
    summary_csv,
)
from dca.core import Antigen, Context, PresentedAntigen, ValidationError

M, S = Context.MATURE, Context.SEMI_MATURE


def log_of(pairs):
    return [PresentedAntigen(Antigen(i), c) for i, c in pairs]


def test_mcav_examples():
    assert compute_mcav([]).scores == {}
    r = compute_mcav(log_of([(42, M), (42, S), (42, M), (7, S)]))
    assert r.mcav(42) == pytest.approx(66.67, abs=0.01)
    assert r.mcav(7) == 0
    assert r.mcav(99) is None
    r = compute_mcav(log_of([(1, M), (2, M), (2, M)]))
    assert r.mcav(1) == r.mcav(2) == 100


@given(st.lists(st.tuples(st.integers(0, 5), st.sampled_from([M, S])), max_size=60), st.randoms())
def test_mcav_totals_and_permutation(pairs, rnd):
    log = log_of(pairs)
    r = compute_mcav(log)
    assert r.total() == len(log)
    shuffled = list(log)
    rnd.shuffle(shuffled)
    r2 = compute_mcav(shuffled)
    assert {k: (v.presentations_total, v.presentations_mature) for k, v in r.scores.items()} == \
        {k: (v.presentations_total, v.presentations_mature) for k, v in r2.scores.items()}
    for score in r.scores.values():
        assert 0 <= score.mcav_percent <= 100


def report(**mcav):
    pairs = []
    for key, pct in mcav.items():
        i = int(key[1:])
        pairs += [(i, M)] * pct + [(i, S)] * (100 - pct)
    return compute_mcav(log_of(pairs))


def test_aggregate_runs():
    s = aggregate_runs([report(a42=30)], "x")
    assert s.mean(42) == 30
    s = aggregate_runs([report(a42=40), report(a42=60)], "x")
    assert s.mean(42) == 50
    s = aggregate_runs([report(a42=80), report(a7=10)], "x")
    assert s.mean(42) == 80 and s.runs(42) == 1
    assert s.per_run[42] == [80, None]
    with pytest.raises(ValidationError):
        aggregate_runs([], "x")


def test_t_test_examples():
    r = paired_t_test([1, 2, 3], [1, 2, 3])
    assert (r.t, r.df, r.significant) == (0, 2, False)
    r = paired_t_test([2, 4, 6], [1, 2, 3])
    assert r.t == pytest.approx(3.464, abs=1e-3) and r.df == 2 and not r.significant
    assert r.critical == 4.303
    r = paired_t_test([3, 4, 5, 6, 7], [1, 1, 1, 1, 1])
    assert r.t == pytest.approx(5.657, abs=1e-3) and r.df == 4 and r.significant
    assert r.critical == 2.776


def test_t_test_degenerate_and_errors():
    r = paired_t_test([3, 4, 5], [1, 2, 3])
    assert math.isinf(r.t) and r.significant and r.degenerate
    with pytest.raises(ValidationError):
        paired_t_test([1, 2], [1, 2, 3])
    with pytest.raises(ValidationError):
        paired_t_test([1], [1])
    with pytest.raises(ValidationError):
        paired_t_test([1, 2], [3, 4], confidence=0.8)


def test_t_test_matches_scipy():
    a = [12.5, 3.1, 7.7, 9.0, 4.4, 6.6]
    b = [10.0, 3.5, 5.0, 8.1, 1.2, 6.0]
    assert paired_t_test(a, b).t == pytest.approx(stats.ttest_rel(a, b).statistic, rel=1e-12)


@pytest.mark.parametrize("confidence", sorted(T_CRITICAL))
def test_critical_table_against_scipy(confidence):
    for df in range(1, 31):
        assert critical_value(df, confidence) == pytest.approx(
            stats.t.ppf(1 - (1 - confidence) / 2, df), abs=6e-4)
    assert critical_value(120, confidence) == critical_value(30, confidence)


samples = st.lists(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False), min_size=2, max_size=12)


@given(samples, st.data())
def test_t_test_antisymmetric(a, data):
    b = data.draw(st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=len(a), max_size=len(a)))
    ab, ba = paired_t_test(a, b), paired_t_test(b, a)
    assert ab.t == pytest.approx(-ba.t)
    assert ab.significant == ba.significant


@given(samples, st.data(), st.floats(min_value=-100, max_value=100))
def test_t_test_shift_invariant(a, data, c):
    b = data.draw(st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=len(a), max_size=len(a)))
    d = [x - y for x, y in zip(a, b)]
    # Keep differences well resolved so the shift does not merely add rounding noise.
    assume(max(d) - min(d) > 1e-3)
    base = paired_t_test(a, b).t
    shifted = paired_t_test([x + c for x in a], [y + c for y in b]).t
    assert shifted == pytest.approx(base, rel=1e-6, abs=1e-9)


def test_compare_summaries():
    a = ExperimentSummary("a", 5, {1: [3, 4, 5, 6, 7], 2: [1, None, 1, 1, 1]})
    b = ExperimentSummary("b", 5, {1: [1, 1, 1, 1, 1], 3: [2, 2, 2, 2, 2]})
    out = {c.antigen_id: c for c in compare_summaries(a, b)}
    assert out[1].result.significant
    assert out[2].result is None and out[3].result is None
    same = compare_summaries(a, a, [1])
    assert same[0].result.t == 0 and not same[0].result.significant
    with pytest.raises(ValidationError):
        compare_summaries(a, ExperimentSummary("c", 4))
    with pytest.raises(ValidationError):
        compare_summaries(ExperimentSummary("a", 2, seeds=[1, 2]), ExperimentSummary("b", 2, seeds=[3, 4]))


def test_summary_csv_round_trip():
    s = aggregate_runs([report(a42=80, a7=10), report(a7=20)], "exp1")
    s.labels[42] = "nmap"
    text = summary_csv([s])
    lines = text.splitlines()
    assert lines[0] == "experiment,antigen_id,label,runs,mean_mcav_percent,per_run_values"
    assert lines[1] == "exp1,7,,2,15.000000,10.000000;20.000000"
    assert lines[2] == "exp1,42,nmap,1,80.000000,80.000000;NA"
    back = read_summary_csv(text)["exp1"]
    assert back.per_run == s.per_run and back.repeats == 2
    assert back.labels[42] == "nmap"


def test_significance_csv_format():
    a = ExperimentSummary("exp2", 3, {5: [1, 2, 3]})
    b = ExperimentSummary("exp3", 3, {5: [0, 0, 0], 6: [1, 1, 1]})
    rows = [("exp2", "exp3", c) for c in compare_summaries(a, b)]
    assert significance_csv(rows).splitlines() == [
        "experiment_a,experiment_b,antigen_id,t,df,significant",
        "exp2,exp3,5,3.464102,2,false",
        "exp2,exp3,6,no data,,no data",
    ]
