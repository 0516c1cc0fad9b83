"""Statistics of SCIR tracks: delay profile, tap autocorrelation, coherence
time, accumulated SI power and dominant-path selection.

A track is a ``(delay, geotime)`` matrix. Anything with ``taps`` and
``geotime_stride`` attributes (ground truth, FD or TD estimates) is accepted
as well as a bare array, which is taken to be per-sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegeneratePath, InvalidArgument, NotFound
from .signal import ComplexArray

DEFAULT_MU = 0.8


def track_matrix(track: Any) -> tuple[ComplexArray, int]:
    """``(taps, geotime_stride)`` for an estimate object or a bare matrix."""
    if hasattr(track, "taps"):
        taps = np.asarray(track.taps, dtype=np.complex128)
        stride = int(getattr(track, "geotime_stride", 1))
    else:
        taps = np.asarray(track, dtype=np.complex128)
        stride = 1
    if taps.ndim != 2:
        raise InvalidArgument(f"a track is a (delay, geotime) matrix, got shape {taps.shape}")
    return taps, stride


def _valid_mask(track: Any, valid: np.ndarray | None, ncols: int) -> np.ndarray | None:
    if valid is None:
        valid = getattr(track, "valid", None)
    if valid is None:
        return None
    valid = np.asarray(valid, dtype=bool)
    if valid.shape != (ncols,):
        raise InvalidArgument(f"valid mask needs {ncols} entries, got {valid.shape}")
    return None if valid.all() else valid


# -- delay profile ------------------------------------------------------------


@dataclass(frozen=True)
class PdpEstimate:
    values: np.ndarray
    source: str
    sample_count: int

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidArgument("a PDP is a finite nonnegative vector")
        object.__setattr__(self, "values", v)

    @property
    def channel_len(self) -> int:
        return self.values.size

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.values)


def pdp(track: Any, source: str = "truth", valid: np.ndarray | None = None) -> PdpEstimate:
    """Mean squared magnitude of every delay bin over the valid columns."""
    taps, _ = track_matrix(track)
    if taps.size == 0:
        raise InvalidArgument("empty track")
    mask = _valid_mask(track, valid, taps.shape[1])
    if mask is not None:
        if not mask.any():
            raise InvalidArgument("no valid columns in the track")
        taps = taps[:, mask]
    # row-major so the reduction order (and the rounding) ignores the input layout
    power = np.ascontiguousarray(taps.real**2 + taps.imag**2)
    return PdpEstimate(power.mean(axis=1), source, taps.shape[1])


# -- autocorrelation and coherence time ---------------------------------------


@dataclass(frozen=True)
class AcfResult:
    """ACF of one delay bin; ``lags`` are geotime samples (column lag x stride)."""

    path_delay: int
    lags: np.ndarray
    values: ComplexArray
    normalized: np.ndarray
    resolution_samples: int = 1

    @property
    def max_lag(self) -> int:
        return int(self.lags[-1])


def _autocorr(h: np.ndarray, max_lag: int) -> np.ndarray:
    """``r[k] = sum_n h[n] conj(h[n-k])`` for ``k = 0..max_lag``."""
    nfft = 1 << (2 * h.size - 1).bit_length()
    F = np.fft.fft(h, nfft)
    return np.fft.ifft(F * F.conj())[: max_lag + 1]


def acf(track: Any, m: int, max_lag: int, valid: np.ndarray | None = None) -> AcfResult:
    """Per-tap autocorrelation up to ``max_lag`` columns.

    Each lag averages over the index pairs that lie inside the track (and
    whose columns are both valid), so lag ``k`` of a fully valid track is
    divided by ``N - k`` rather than ``N``. The normalized series is
    ``|q[k]| / q[0]``, capped at 1: the unbiased estimate can overshoot by
    sampling noise at long lags where few pairs remain.
    """
    taps, stride = track_matrix(track)
    M, N = taps.shape
    if not 0 <= m < M:
        raise InvalidArgument(f"delay bin {m} outside 0..{M - 1}")
    if not 0 <= max_lag < N:
        raise InvalidArgument(f"max_lag must be in [0, {N - 1}], got {max_lag}")
    mask = _valid_mask(track, valid, N)
    h = taps[m]
    if mask is None:
        q0 = float(np.mean(h.real**2 + h.imag**2))
        pairs = N - np.arange(max_lag + 1)
    else:
        h = np.where(mask, h, 0)
        q0 = float(np.mean(h[mask].real ** 2 + h[mask].imag ** 2)) if mask.any() else 0.0
        pairs = np.rint(_autocorr(mask.astype(np.float64), max_lag).real)
        if np.any(pairs < 1):
            raise InvalidArgument("some lags have no pair of valid columns")
    if q0 == 0.0:
        raise DegeneratePath(f"delay bin {m} carries no energy")
    q = _autocorr(h, max_lag) / pairs
    q[0] = q0
    norm = np.minimum(np.abs(q) / q0, 1.0)
    lags = np.arange(max_lag + 1) * stride
    return AcfResult(m, lags, q, norm, stride)


@dataclass(frozen=True)
class CotResult:
    path_delay: int
    cot_samples: float
    threshold: float
    resolution_samples: int
    censored: bool = False

    def seconds(self, sample_rate_hz: float) -> float:
        return self.cot_samples / sample_rate_hz


def coherence_time(result: AcfResult, mu: float = DEFAULT_MU) -> CotResult:
    """Twice the first lag at which the normalized ACF drops below ``mu``.

    The crossing is interpolated linearly between adjacent lags. When the
    ACF never drops below ``mu`` the result is censored and carries the
    lower bound ``2 * max_lag``.
    """
    if not 0.0 < mu < 1.0:
        raise InvalidArgument(f"threshold must lie in (0, 1), got {mu}")
    q = result.normalized
    below = np.flatnonzero(q < mu)
    if below.size == 0:
        return CotResult(result.path_delay, 2.0 * result.max_lag, mu, result.resolution_samples, True)
    k = int(below[0])  # k >= 1 since q[0] == 1
    frac = (q[k - 1] - mu) / (q[k - 1] - q[k])
    lag = result.lags[k - 1] + frac * (result.lags[k] - result.lags[k - 1])
    return CotResult(result.path_delay, 2.0 * float(lag), mu, result.resolution_samples)


# -- accumulated power --------------------------------------------------------


@dataclass(frozen=True)
class AccumulatedPower:
    """``p_acc[j] = (1/M) * sum_{m<j} p[m]`` for ``j = 0..M``."""

    p_acc: np.ndarray
    total: float

    @property
    def fractions(self) -> np.ndarray:
        return self.p_acc / self.total

    def fraction_through(self, delays) -> float:
        """Fraction of the SI power carried by every bin up to ``max(delays)``."""
        j = int(max(delays)) + 1
        if not 0 < j < self.p_acc.size:
            raise InvalidArgument(f"delay {j - 1} outside the profile")
        return float(self.fractions[j])


def accumulated_power(profile: PdpEstimate) -> AccumulatedPower:
    p = profile.values
    M = p.size
    if M == 0 or not p.sum() > 0:
        raise DegeneratePath("the delay profile carries no power")
    acc = np.concatenate([[0.0], np.cumsum(p)]) / M
    return AccumulatedPower(acc, float(acc[-1]))


def group_fraction(profile: PdpEstimate, delays) -> float:
    """Share of the profile's power in the listed bins."""
    p = profile.values
    if not p.sum() > 0:
        raise DegeneratePath("the delay profile carries no power")
    return float(p[np.asarray(list(delays), dtype=int)].sum() / p.sum())


# -- path selection -----------------------------------------------------------


@dataclass(frozen=True)
class PathSelection:
    delays: list[int]
    requested: int

    @property
    def shortfall(self) -> bool:
        return len(self.delays) < self.requested


def find_paths(profile: PdpEstimate, count: int, min_separation: int = 1) -> PathSelection:
    """Greedy pick of the strongest bins at least ``min_separation`` apart.

    Only bins with positive power qualify; equal powers go to the smaller
    delay. Returned delays are sorted.
    """
    if count < 1:
        raise InvalidArgument(f"count must be positive, got {count}")
    if min_separation < 1:
        raise InvalidArgument(f"min_separation must be positive, got {min_separation}")
    p = profile.values
    order = np.lexsort((np.arange(p.size), -p))
    chosen: list[int] = []
    for m in order:
        if p[m] <= 0 or len(chosen) == count:
            break
        if all(abs(int(m) - c) >= min_separation for c in chosen):
            chosen.append(int(m))
    return PathSelection(sorted(chosen), count)


# -- report -------------------------------------------------------------------


@dataclass
class StatReport:
    """Everything derived from one track, plus where it came from."""

    source: str
    sample_rate_hz: float
    geotime_stride: int
    pdp: PdpEstimate
    accumulated: AccumulatedPower
    paths: PathSelection
    acfs: dict[int, AcfResult] = field(default_factory=dict)
    cots: dict[int, CotResult] = field(default_factory=dict)
    tap_tracks: dict[int, ComplexArray] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        B = self.sample_rate_hz
        return {
            "source": self.source,
            "sample_rate_hz": B,
            "geotime_stride": self.geotime_stride,
            "pdp": {"values": self.pdp.values.tolist(), "sample_count": self.pdp.sample_count},
            "accumulated": {"p_acc": self.accumulated.p_acc.tolist(), "total": self.accumulated.total},
            "paths": {"delays": self.paths.delays, "requested": self.paths.requested,
                      "shortfall": self.paths.shortfall},
            "acf": {
                str(m): {"lags": a.lags.tolist(), "normalized": a.normalized.tolist(),
                         "re": a.values.real.tolist(), "im": a.values.imag.tolist(),
                         "resolution_samples": a.resolution_samples}
                for m, a in sorted(self.acfs.items())
            },
            "cot": {
                str(m): {"cot_samples": c.cot_samples, "cot_ms": 1e3 * c.seconds(B), "threshold": c.threshold,
                         "resolution_samples": c.resolution_samples,
                         "resolution_ms": 1e3 * c.resolution_samples / B, "censored": c.censored}
                for m, c in sorted(self.cots.items())
            },
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> StatReport:
        profile = PdpEstimate(np.asarray(d["pdp"]["values"]), d["source"], int(d["pdp"]["sample_count"]))
        acc = AccumulatedPower(np.asarray(d["accumulated"]["p_acc"]), float(d["accumulated"]["total"]))
        paths = PathSelection([int(x) for x in d["paths"]["delays"]], int(d["paths"]["requested"]))
        acfs = {
            int(m): AcfResult(int(m), np.asarray(a["lags"]), np.asarray(a["re"]) + 1j * np.asarray(a["im"]),
                              np.asarray(a["normalized"]), int(a["resolution_samples"]))
            for m, a in d.get("acf", {}).items()
        }
        cots = {
            int(m): CotResult(int(m), float(c["cot_samples"]), float(c["threshold"]),
                              int(c["resolution_samples"]), bool(c["censored"]))
            for m, c in d.get("cot", {}).items()
        }
        return cls(d["source"], float(d["sample_rate_hz"]), int(d["geotime_stride"]), profile, acc, paths,
                   acfs, cots, {}, dict(d.get("provenance", {})))

    def acf_for(self, m: int) -> AcfResult:
        if m not in self.acfs:
            raise NotFound(f"no ACF for delay bin {m} in this report")
        return self.acfs[m]


def build_report(track: Any, source: str, sample_rate_hz: float, *, paths: list[int] | None = None,
                 count: int = 2, min_separation: int = 5, max_lag_s: float = 1.0, mu: float = DEFAULT_MU,
                 valid: np.ndarray | None = None, provenance: dict[str, Any] | None = None) -> StatReport:
    """PDP, accumulated power, path pick and per-path ACF/COT for one track.

    ``paths`` overrides the automatic selection. ``max_lag_s`` is clipped to
    the track length.
    """
    taps, stride = track_matrix(track)
    mask = _valid_mask(track, valid, taps.shape[1])
    profile = pdp(taps, source, mask)
    selection = find_paths(profile, count, min_separation)
    analyze = list(paths) if paths is not None else selection.delays
    max_lag = min(taps.shape[1] - 1, int(math.ceil(max_lag_s * sample_rate_hz / stride)))
    acfs: dict[int, AcfResult] = {}
    cots: dict[int, CotResult] = {}
    for m in analyze:
        a = acf(track, m, max_lag, mask)
        acfs[m] = a
        cots[m] = coherence_time(a, mu)
    tracks = {m: taps[m].copy() for m in analyze}
    return StatReport(source, sample_rate_hz, stride, profile, accumulated_power(profile), selection,
                      acfs, cots, tracks, dict(provenance or {}))
