import math

import numpy as np
import pytest

from oracles import double_loop_tv_convolve
from uwsi import channel as ch
from uwsi.errors import InvalidArgument, LengthMismatch
from uwsi.signal import SampleBuffer, convolve_linear
from uwsi.stats import acf, coherence_time


def spec_of(paths, **kw):
    return ch.ChannelSpec(kw.pop("channel_len", 64), tuple(paths), **kw)


def test_static_unit_path():
    s = ch.realize_scir(spec_of([ch.PathSpec(0, 0.0)]), 100)
    assert np.allclose(np.abs(s.taps[0]) ** 2, 1)
    assert np.all(s.taps[0] == s.taps[0, 0])
    assert not s.taps[1:].any()


def test_rejects_bad_specs():
    with pytest.raises(InvalidArgument):
        spec_of([ch.PathSpec(3, 0.0), ch.PathSpec(3, -1.0)])
    with pytest.raises(InvalidArgument):
        spec_of([ch.PathSpec(64, 0.0)])
    with pytest.raises(InvalidArgument):
        ch.GaussMarkov(0)
    with pytest.raises(InvalidArgument):
        ch.realize_scir(spec_of([ch.PathSpec(0, 0.0)]), 0)


def test_realize_scir_scales_the_ar1_stream():
    spec = spec_of([ch.PathSpec(5, -9.3, ch.GaussMarkov(360))], seed=4)
    h = ch.realize_scir(spec, 5000).taps[5]
    g = ch.gauss_markov_process(ch.GaussMarkov(360).coefficient, 5000, ch._path_rngs(spec)[0])
    assert np.allclose(h, np.sqrt(10 ** -0.93) * g, rtol=1e-15, atol=0)


@pytest.mark.slow
def test_gauss_markov_power_and_cot():
    # a coherence of 360 samples leaves ~N/800 effectively independent draws,
    # so lengths are chosen for a >5 sigma margin on both tolerances
    a = ch.GaussMarkov(360).coefficient
    g = ch.gauss_markov_process(a, 8_000_000, np.random.default_rng(21))
    assert 10 * np.log10(np.mean(np.abs(g) ** 2)) == pytest.approx(0.0, abs=0.2)
    cot = coherence_time(acf(g[None, :4_000_000], 0, 400))
    assert cot.cot_samples / 2 == pytest.approx(180, rel=0.10)


def test_gauss_markov_stationary_windows():
    # short coherence so that a 1e4-sample window averages many independent stretches
    spec = spec_of([ch.PathSpec(0, 0.0, ch.GaussMarkov(20))], seed=8)
    h = ch.realize_scir(spec, 200_000).taps[0]
    p = 10 * np.log10(np.mean(np.abs(h.reshape(20, 10_000)) ** 2, axis=1))
    assert p.max() - p.min() < 1.0


def test_gauss_markov_coefficient():
    assert ch.GaussMarkov(360).coefficient ** 180 == pytest.approx(0.8)


def test_determinism_and_seed_decorrelation():
    gm = ch.GaussMarkov(50)
    a = ch.realize_scir(spec_of([ch.PathSpec(1, 0.0, gm)], seed=1), 100_000)
    b = ch.realize_scir(spec_of([ch.PathSpec(1, 0.0, gm)], seed=1), 100_000)
    c = ch.realize_scir(spec_of([ch.PathSpec(1, 0.0, gm)], seed=2), 100_000)
    assert np.array_equal(a.taps, b.taps)
    x, y = a.taps[1], c.taps[1]
    rho = abs(np.vdot(x, y)) / np.sqrt(np.vdot(x, x).real * np.vdot(y, y).real)
    assert rho < 0.05


def test_apply_channel_identity_and_static_oracle(rng):
    x = SampleBuffer(rng.standard_normal(500) + 1j * rng.standard_normal(500), 5000.0)
    ident = ch.realize_scir(spec_of([ch.PathSpec(0, 0.0)]), 500)
    ident = ch.Scir(np.where(ident.taps != 0, 1.0 + 0j, 0), 1)
    assert np.array_equal(ch.apply_channel(x, ident).samples, x.samples)
    s = ch.realize_scir(spec_of([ch.PathSpec(0, 0.0), ch.PathSpec(7, -3.0)], seed=9), 500)
    ref = convolve_linear(x, s.taps[:, 0]).samples
    assert np.max(np.abs(ch.apply_channel(x, s).samples - ref)) <= 1e-12


def test_time_varying_toy():
    x = SampleBuffer(np.ones(3), 1.0)
    s = ch.apply_channel(x, ch.Scir(np.array([[0, 1, 2]], dtype=complex)))
    assert np.array_equal(s.samples, [0, 1, 2])


@pytest.mark.parametrize("stride", [1, 3, 8])
def test_tv_convolution_matches_double_loop(rng, stride):
    T, M = 200, 12
    ncols = -(-T // stride)
    taps = rng.standard_normal((M, ncols)) + 1j * rng.standard_normal((M, ncols))
    taps[4] = 0
    x = rng.standard_normal(T) + 1j * rng.standard_normal(T)
    out = ch.apply_channel(SampleBuffer(x, 1.0), ch.Scir(taps, stride)).samples
    assert np.max(np.abs(out - double_loop_tv_convolve(x, taps, stride))) <= 1e-12
    with pytest.raises(LengthMismatch):
        ch.apply_channel(SampleBuffer(np.ones(T + stride), 1.0), ch.Scir(taps, stride))


def test_noise():
    s = SampleBuffer(np.arange(5) * (1 + 1j), 1.0)
    assert np.array_equal(ch.add_noise(s, 0.0, 1).samples, s.samples)
    with pytest.raises(InvalidArgument):
        ch.add_noise(s, -1.0, 1)
    y = ch.add_noise(s, 0.3, 77)
    w = ch.noise_realization(5, 0.3, 77)
    assert np.array_equal(y.samples, s.samples + w)
    # floating-point subtraction is exact to rounding of the larger operand
    assert np.allclose(y.samples - w, s.samples, rtol=0, atol=4 * np.finfo(float).eps * np.abs(y.samples).max())


@pytest.mark.slow
def test_noise_statistics():
    w = ch.noise_realization(1_000_000, 1.0, 5)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(1.0, rel=0.01)
    assert abs(np.corrcoef(w.real, w.imag)[0, 1]) < 0.01


def test_impairments(rng):
    y = SampleBuffer(rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000), 5000.0)
    assert np.array_equal(ch.apply_impairments(y, 0, 0).samples, y.samples)
    back = ch.apply_impairments(ch.apply_impairments(y, 0.3, 0), -0.3, 0)
    assert np.linalg.norm(back.samples - y.samples) / np.linalg.norm(y.samples) <= 1e-9
    with pytest.raises(InvalidArgument):
        ch.apply_impairments(y, 0, 1500)


def test_sro_round_trip_on_band_limited_signal():
    # the paper-scale offset: 5 Hz at 512 kHz
    ppm = 5 / 512e3 * 1e6
    n = np.arange(10_000)
    # linear interpolation is accurate on oversampled content only
    x = np.exp(2j * np.pi * 0.004 * n) + 0.5 * np.exp(-2j * np.pi * 0.006 * n)
    y = SampleBuffer(x, 5000.0)
    back = ch.apply_impairments(ch.apply_impairments(y, 0, ppm), 0, -ppm)
    core = slice(0, 9_990)  # the last samples are edge-held after resampling
    err = np.linalg.norm(back.samples[core] - x[core]) / np.linalg.norm(x[core])
    assert err <= 1e-4


def test_scenario_files_and_schema(tmp_path):
    spec = ch.load_scenario(ch.builtin_scenario_path("lake-hyd1"))
    assert spec.channel_len == 256
    assert spec.delays("direct") == [15]
    assert 30 in spec.delays("surface")
    bottom = spec.delays("bottom")
    assert len(bottom) == 6 and min(bottom) >= 70 and max(bottom) <= 175
    p = spec.mean_pdp()
    tot = p.sum()
    assert p[15] / tot == pytest.approx(0.72, abs=0.005)
    assert p[spec.delays("surface")].sum() / tot == pytest.approx(0.16, abs=0.005)
    assert 10 * np.log10(p[15] / p[30]) == pytest.approx(9.3)
    assert spec.noise_power == pytest.approx(1e-4 * tot, rel=1e-3)  # 40 dB SI-to-noise
    again = ch.ChannelSpec.from_dict(spec.to_dict())
    assert again == spec
    ch.load_scenario(ch.builtin_scenario_path("lake-hyd2"))
    with pytest.raises(InvalidArgument):
        ch.builtin_scenario_path("nope")


def test_scir_export(tmp_path):
    s = ch.realize_scir(spec_of([ch.PathSpec(2, 0.0, ch.GaussMarkov(10))]), 64, stride=4)
    s.export(tmp_path / "scir")
    t = ch.Scir.load(tmp_path / "scir")
    assert t.geotime_stride == 4 and np.array_equal(t.taps, s.taps)
