import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwsi import channel as ch
from uwsi import stats
from uwsi.errors import DegeneratePath, InvalidArgument, NotFound


def test_pdp_constant_and_errors():
    c = 0.3 - 0.4j
    p = stats.pdp(np.full((4, 10), c))
    assert np.allclose(p.values, abs(c) ** 2) and p.sample_count == 10
    with pytest.raises(InvalidArgument):
        stats.pdp(np.zeros((4, 0)))


def test_pdp_white_track(rng):
    h = (rng.standard_normal((16, 10_000)) + 1j * rng.standard_normal((16, 10_000))) / np.sqrt(2)
    assert np.all(np.abs(stats.pdp(h).values - 1) < 0.05)


@pytest.mark.slow
def test_truth_pdp_separation_long_run():
    spec = ch.load_scenario(ch.builtin_scenario_path("lake-hyd1"))
    spec = ch.ChannelSpec(32, spec.paths[:2], seed=3)  # direct + first surface bin
    s = ch.realize_scir(spec, 4_000_000, stride=8)
    p = stats.pdp(s).values
    assert 10 * np.log10(p[15] / p[30]) == pytest.approx(9.3, abs=0.5)


def test_acf_constant_and_white(rng):
    a = stats.acf(np.full((2, 500), 2 + 1j), 1, 100)
    assert np.allclose(a.normalized, 1)
    assert stats.coherence_time(a).censored
    h = rng.standard_normal((1, 10_000)) + 1j * rng.standard_normal((1, 10_000))
    w = stats.acf(h, 0, 50)
    assert w.normalized[0] == 1 and np.all(w.normalized[1:] < 0.05)


def test_acf_matches_direct_sum(rng):
    h = rng.standard_normal((3, 300)) + 1j * rng.standard_normal((3, 300))
    a = stats.acf(h, 2, 40)
    x = h[2]
    for k in (0, 1, 17, 40):
        ref = np.sum(x[k:] * np.conj(x[: x.size - k])) / (x.size - k)
        assert abs(a.values[k] - ref) <= 1e-12 * abs(ref) + 1e-12


def test_acf_lag0_equals_pdp(rng):
    h = rng.standard_normal((5, 777)) + 1j * rng.standard_normal((5, 777))
    p = stats.pdp(h).values
    for m in range(5):
        assert abs(stats.acf(h, m, 10).values[0] - p[m]) <= 1e-12 * p[m]


def test_acf_valid_mask(rng):
    h = rng.standard_normal((1, 200)) + 1j * rng.standard_normal((1, 200))
    valid = np.ones(200, bool)
    valid[50:60] = False
    a = stats.acf(h, 0, 5, valid)
    x = h[0]
    k = 3
    pairs = [(n, n - k) for n in range(k, 200) if valid[n] and valid[n - k]]
    ref = sum(x[i] * np.conj(x[j]) for i, j in pairs) / len(pairs)
    assert abs(a.values[k] - ref) <= 1e-12
    assert a.values[0] == pytest.approx(np.mean(np.abs(x[valid]) ** 2))


def test_acf_errors():
    with pytest.raises(DegeneratePath):
        stats.acf(np.zeros((2, 10)), 0, 3)
    with pytest.raises(InvalidArgument):
        stats.acf(np.ones((2, 10)), 2, 3)
    with pytest.raises(InvalidArgument):
        stats.acf(np.ones((2, 10)), 0, 10)


@pytest.mark.slow
def test_ar1_acf_and_cot():
    a = ch.GaussMarkov(360).coefficient
    g = ch.gauss_markov_process(a, 4_000_000, np.random.default_rng(3))
    r = stats.acf(g[None, :], 0, 400)
    assert r.normalized[180] == pytest.approx(0.8, abs=0.03)
    c = stats.coherence_time(r)
    assert c.cot_samples == pytest.approx(360, rel=0.10)
    assert c.seconds(5000) == pytest.approx(0.072, rel=0.10)
    # doubling the length moves the estimate by less than 5 %
    half = stats.coherence_time(stats.acf(g[None, :2_000_000], 0, 400))
    assert abs(half.cot_samples - c.cot_samples) / c.cot_samples < 0.05


def test_cot_interpolation_on_analytic_curve():
    a = 0.8 ** (2 / 360)
    lags = np.arange(400)
    r = stats.AcfResult(0, lags, a**lags + 0j, a**lags, 1)
    c = stats.coherence_time(r, 0.8)
    assert abs(c.cot_samples / 2 - math.log(0.8) / math.log(a)) <= 0.5
    with pytest.raises(InvalidArgument):
        stats.coherence_time(r, 1.0)
    with pytest.raises(InvalidArgument):
        stats.coherence_time(r, 0.0)


def test_cot_censored_bound_and_resolution():
    r = stats.AcfResult(0, np.arange(11) * 512, np.ones(11, complex), np.ones(11), 512)
    c = stats.coherence_time(r)
    assert c.censored and c.cot_samples == 2 * 5120 and c.resolution_samples == 512


def test_accumulated_power():
    single = stats.PdpEstimate(np.eye(8)[3] * 2.0, "x", 1)
    acc = stats.accumulated_power(single)
    assert np.array_equal(acc.fractions, [0, 0, 0, 0, 1, 1, 1, 1, 1])
    uni = stats.accumulated_power(stats.PdpEstimate(np.ones(8), "x", 1))
    assert np.array_equal(uni.fractions, np.arange(9) / 8)
    assert uni.p_acc[-1] == uni.total == 1.0
    with pytest.raises(DegeneratePath):
        stats.accumulated_power(stats.PdpEstimate(np.zeros(4), "x", 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=40).filter(lambda v: sum(v) > 0),
       st.floats(1e-6, 1e6))
def test_accumulated_properties(values, scale):
    p = np.asarray(values)
    a = stats.accumulated_power(stats.PdpEstimate(p, "x", 1))
    b = stats.accumulated_power(stats.PdpEstimate(p * scale, "x", 1))
    assert a.p_acc[0] == 0 and np.all(np.diff(a.p_acc) >= 0)
    assert a.fractions[-1] == pytest.approx(1.0)
    assert np.allclose(a.fractions, b.fractions, rtol=1e-9, atol=1e-12)


def test_truth_fractions_on_reference_scenario():
    spec = ch.load_scenario(ch.builtin_scenario_path("lake-hyd1"))
    acc = stats.accumulated_power(stats.PdpEstimate(spec.mean_pdp(), "config", 1))
    assert acc.fraction_through([15]) == pytest.approx(0.72, abs=0.01)
    assert acc.fraction_through(spec.delays("surface")) == pytest.approx(0.88, abs=0.01)


def test_find_paths():
    spec = ch.load_scenario(ch.builtin_scenario_path("lake-hyd1"))
    sel = stats.find_paths(stats.PdpEstimate(spec.mean_pdp(), "t", 1), 2, 5)
    assert sel.delays == [15, 30] and not sel.shortfall
    one = stats.find_paths(stats.PdpEstimate(np.eye(10)[4], "t", 1), 2, 1)
    assert one.delays == [4] and one.shortfall
    tie = stats.find_paths(stats.PdpEstimate(np.array([0, 1, 0, 0, 1, 0.0]), "t", 1), 1, 1)
    assert tie.delays == [1]
    both = stats.find_paths(stats.PdpEstimate(np.array([0, 1, 0, 0, 1, 0.0]), "t", 1), 2, 2)
    assert both.delays == [1, 4]
    with pytest.raises(InvalidArgument):
        stats.find_paths(stats.PdpEstimate(np.ones(3), "t", 1), 0, 1)


def test_report_round_trip(rng):
    h = rng.standard_normal((8, 600)) + 1j * rng.standard_normal((8, 600))
    h[2] *= 10
    rep = stats.build_report(h, "td", 5000.0, count=1, max_lag_s=0.01)
    assert rep.paths.delays == [2]
    assert rep.acf_for(2).max_lag == 50
    back = stats.StatReport.from_dict(rep.to_dict())
    assert np.array_equal(back.pdp.values, rep.pdp.values)
    assert back.cots[2] == rep.cots[2]
    assert np.allclose(back.acfs[2].values, rep.acfs[2].values)
    with pytest.raises(NotFound):
        back.acf_for(3)
