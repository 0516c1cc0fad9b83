"""Acceptance criteria, one test per criterion.

Each test prints ``CRITERION n: PASS|FAIL - detail`` and the lines are
repeated in the terminal summary. The reference run is the built-in
lake-hyd1 scenario, 200 blocks, master seed 0, TD at M = 256, L_win = 512,
stride 1.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import double_loop_tv_convolve, naive_dft, rel_err
from uwsi import channel as ch
from uwsi import estimate_fd, estimate_td, fileio, kernels, ofdm, pipeline, signal
from uwsi.stats import PdpEstimate

B = 5000.0
DIRECT, SURFACE = 15, 30


@pytest.fixture(scope="module")
def reference(tmp_path_factory):
    cfg = pipeline.load_config(ch.builtin_scenario_path("lake-hyd1"))
    cfg = replace(cfg, output_dir=tmp_path_factory.mktemp("lake-hyd1"))
    t0 = time.perf_counter()
    result = pipeline.run_pipeline(cfg)
    return cfg, result, time.perf_counter() - t0


def _pdp_check(rep) -> tuple[bool, str]:
    p = rep.pdp.values
    sep = 10 * math.log10(p[DIRECT] / p[SURFACE])
    ok = rep.paths.delays == [DIRECT, SURFACE] and abs(sep - 9.3) <= 1.0
    return ok, f"{rep.source}: peaks {rep.paths.delays}, separation {sep:.2f} dB"


def _cot_check(rep) -> tuple[bool, str]:
    if SURFACE not in rep.cots or DIRECT not in rep.acfs:
        return False, f"{rep.source}: paths {rep.paths.delays} do not include bins {DIRECT} and {SURFACE}"
    cot_ms = 1e3 * rep.cots[SURFACE].seconds(B)
    direct = rep.acfs[DIRECT]
    span_ms = 1e3 * direct.max_lag / B
    dmin = float(direct.normalized.min())
    ok = abs(cot_ms - 72.0) <= 0.15 * 72.0 and dmin > 0.95 and span_ms >= 1000.0
    return ok, (f"{rep.source}: surface COT {cot_ms:.1f} ms (72 +/- 10.8), "
                f"direct ACF min {dmin:.3f} over {span_ms:.0f} ms")


def test_criterion_1_estimator_exactness(record):
    t0 = time.perf_counter()
    frame = ofdm.generate_frame(ofdm.OfdmConfig(256, 256, 4, B, seed=3))
    x = frame.time_signal
    h = np.zeros(256, complex)
    h[[0, 7, 40]] = [1.0, -0.4 + 0.3j, 0.1j]
    y = ch.apply_channel(x, ch.Scir(np.repeat(h[:, None], len(x), axis=1)))
    fd = estimate_fd.estimate_fd(y, frame)
    fd_err = max(rel_err(fd.taps[:, i], h) for i in range(fd.num_blocks))
    td = estimate_td.estimate_td(y, x, 256, 512)
    j = td.first_full_column
    td_err = max(rel_err(td.taps[:, n], h) for n in range(j, td.taps.shape[1]))
    elapsed = time.perf_counter() - t0
    ok = fd_err <= 1e-8 and td_err <= 1e-8 and bool(td.valid[j:].all()) and elapsed < 10
    record(1, ok, f"FD max rel err {fd_err:.1e}, TD max rel err {td_err:.1e} over "
                  f"{td.taps.shape[1] - j} windows, {elapsed:.1f} s")
    assert ok


def test_criterion_2_fd_td_agreement(reference, record):
    _, result, elapsed = reference
    fd = result.reports["fd"].pdp.values
    td = result.reports["td"].pdp.values
    peak = fd.max()
    bins = np.flatnonzero((fd >= peak * 1e-3) | (td >= peak * 1e-3))
    diff = np.abs(10 * np.log10(fd[bins] / td[bins]))
    worst = int(bins[np.argmax(diff)])
    ok = float(diff.max()) <= 1.0 and elapsed < 300
    record(2, ok, f"{bins.size} bins above -30 dB, max |FD-TD| {diff.max():.2f} dB at bin {worst}, "
                  f"pipeline {elapsed:.0f} s")
    assert ok


def test_criterion_3_pdp_structure(reference, record):
    _, result, _ = reference
    checks = [_pdp_check(result.reports[k]) for k in ("fd", "td")]
    ok = all(c[0] for c in checks)
    record(3, ok, "; ".join(c[1] for c in checks))
    assert ok


def test_criterion_4_cot(reference, record):
    _, result, _ = reference
    ok, detail = _cot_check(result.reports["td"])
    truth = result.reports["truth"]
    t_cot = 1e3 * truth.cots[SURFACE].seconds(B)
    record(4, ok, f"{detail} (truth realization {t_cot:.1f} ms)")
    assert ok


def test_criterion_5_accumulated_fractions(reference, record):
    cfg, result, _ = reference
    ds = cfg.subset_delays(["direct", "surface"])
    ok, parts = True, []
    for k in ("truth", "td"):
        acc = result.reports[k].accumulated
        fd_, fds = acc.fraction_through([DIRECT]), acc.fraction_through(ds)
        ok &= abs(fd_ - 0.72) <= 0.03 and abs(fds - 0.88) <= 0.03
        parts.append(f"{k}: direct {fd_:.3f}, direct+surface {fds:.3f}")
    record(5, ok, "; ".join(parts))
    assert ok


def test_criterion_6_short_window(reference, record, tmp_path):
    cfg, result, _ = reference
    out = result.output_dir
    frame = ofdm.load_frame(out / "frame")
    y = fileio.read_samples(out / "received")
    short = estimate_td.estimate_td(y, frame.time_signal, 90, 180)
    rep, _ = pipeline.characterize(cfg, "td_short", short, result.seeds, tmp_path)
    del short
    ok3, d3 = _pdp_check(rep)
    ok4, d4 = _cot_check(rep)
    record(6, ok3 and ok4, f"M=90, L_win=180: [3] {'ok' if ok3 else 'fails'} ({d3}); "
                           f"[4] {'ok' if ok4 else 'fails'} ({d4})")
    assert ok3 and ok4


def test_criterion_7_cancellation_depth(reference, record):
    _, result, _ = reference
    c = result.cancellation
    excess = c["truth"].excess_over_noise_db
    d1, d2 = c["truth:direct"].depth_db, c["truth:direct+surface"].depth_db
    t1, t2 = 10 * math.log10(1 / 0.28), 10 * math.log10(1 / 0.12)
    ok = abs(excess) <= 0.5 and abs(d1 - t1) <= 1.0 and abs(d2 - t2) <= 1.0
    record(7, ok, f"truth residual {excess:+.2f} dB vs noise, direct-only {d1:.2f} dB "
                  f"(target {t1:.2f}), direct+surface {d2:.2f} dB (target {t2:.2f})")
    assert ok


def test_criterion_8_oracle_suites(record):
    rng = np.random.default_rng(8)
    dft_err = 0.0
    for K in (1, 2, 7, 64, 256, 512):
        v = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        dft_err = max(dft_err, rel_err(signal.dft(v), naive_dft(v)))
    ls_err = 0.0
    for i in range(100):
        M = (8, 32, 90, 256)[i % 4]
        X = np.sign(rng.standard_normal((2 * M, M))) + 0j
        y = rng.standard_normal(2 * M) + 1j * rng.standard_normal(2 * M)
        h, _ = estimate_td.solve_ls(X, y)
        ls_err = max(ls_err, rel_err(h, estimate_td.solve_ls_oracle(X, y)))
    x = rng.standard_normal(400) + 1j * rng.standard_normal(400)
    taps = rng.standard_normal((16, 100)) + 1j * rng.standard_normal((16, 100))
    conv = np.empty(400, complex)
    kernels.tv_convolve(x, taps, 4, conv)
    conv_err = rel_err(conv, double_loop_tv_convolve(x, taps, 4))
    ok = dft_err <= 1e-10 and ls_err <= 1e-8 and conv_err <= 1e-12
    record(8, ok, f"DFT {dft_err:.1e}, LS {ls_err:.1e} (100 instances), "
                  f"tv-convolution {conv_err:.1e} ({kernels.BACKEND} backend)")
    assert ok


def test_criterion_9_determinism(record, tmp_path):
    cfg = pipeline.load_config(ch.builtin_scenario_path("lake-hyd1"))
    cfg = replace(cfg, ofdm=replace(cfg.ofdm, num_blocks=8))
    a = pipeline.run_pipeline(replace(cfg, output_dir=tmp_path / "a"))
    b = pipeline.run_pipeline(replace(cfg, output_dir=tmp_path / "b"))
    same = a.manifest.read_bytes() == b.manifest.read_bytes()
    nfiles = len(fileio.read_json(a.manifest)["files"])
    record(9, same, f"two seed-0 runs, {nfiles} files, manifests {'identical' if same else 'differ'}")
    assert same
