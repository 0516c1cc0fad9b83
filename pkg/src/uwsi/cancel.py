"""SI reconstruction from an SCIR track and digital cancellation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Iterable

import numpy as np

from . import kernels
from .errors import InvalidArgument, LengthMismatch
from .signal import SampleBuffer, power_db
from .stats import track_matrix

# M + L_win at the reference operating point (256 taps, 512-sample window)
DEFAULT_WARMUP = 768


def reconstruct_si(x: SampleBuffer, track: Any, stride: int | None = None,
                   keep_delays: Iterable[int] | None = None) -> SampleBuffer:
    """``s_hat[n] = sum_m h[m, n] x[n - m]`` with zero-order hold across the stride.

    ``keep_delays`` zeroes every other delay row first, which reconstructs
    only the chosen paths.
    """
    taps, native = track_matrix(track)
    stride = native if stride is None else int(stride)
    if stride < 1:
        raise InvalidArgument(f"stride must be positive, got {stride}")
    if taps.shape[1] * stride < len(x):
        raise LengthMismatch("track does not cover the signal span", len(x), taps.shape[1] * stride)
    if keep_delays is not None:
        keep = np.asarray(sorted(set(int(d) for d in keep_delays)), dtype=int)
        if keep.size and (keep[0] < 0 or keep[-1] >= taps.shape[0]):
            raise InvalidArgument(f"delays {keep.tolist()} outside 0..{taps.shape[0] - 1}")
        masked = np.zeros_like(taps)
        masked[keep] = taps[keep]
        taps = masked
    out = np.empty(len(x), dtype=np.complex128)
    kernels.tv_convolve(x.samples, np.ascontiguousarray(taps), stride, out)
    return x.with_samples(out, "reconstructed SI")


@dataclass(frozen=True)
class CancellationReport:
    residual_power: float
    received_power: float
    noise_power: float | None
    depth_db: float
    excess_over_noise_db: float | None
    span: tuple[int, int]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["span"] = list(self.span)
        return d


def cancel(y: SampleBuffer, s_hat: SampleBuffer, noise_power: float | None = None, *,
           span: tuple[int, int] | None = None,
           warmup: int = DEFAULT_WARMUP) -> tuple[SampleBuffer, CancellationReport]:
    """Residual ``e = y - s_hat`` and its power statistics.

    Powers are measured over ``span`` (start, stop); by default from
    ``warmup`` to the end, skipping the estimator's start-up transient.
    ``noise_power`` is the absolute noise variance if known.
    """
    if len(y) != len(s_hat):
        raise LengthMismatch("reconstructed SI must match the received length", len(y), len(s_hat))
    if span is None:
        span = (min(max(0, warmup), len(y)), len(y))
    start, stop = int(span[0]), int(span[1])
    if not 0 <= start < stop <= len(y):
        raise InvalidArgument(f"evaluation span {span} outside a buffer of {len(y)} samples")
    e = y.with_samples(y.samples - s_hat.samples, "residual")
    res = e.power(start, stop)
    rec = y.power(start, stop)
    depth = math.inf if res == 0 else power_db(rec) - power_db(res)
    excess = None
    if noise_power is not None:
        if noise_power < 0:
            raise InvalidArgument("noise_power must be nonnegative")
        excess = -math.inf if res == 0 else (math.inf if noise_power == 0 else power_db(res) - power_db(noise_power))
    return e, CancellationReport(res, rec, noise_power, depth, excess, (start, stop))
