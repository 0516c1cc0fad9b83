"""Complex baseband buffers, transforms and small numeric helpers.

Conventions used everywhere in the package:

* the forward DFT is unnormalized, the inverse carries ``1/K``, so that a
  perfect frequency response inverts to the exact impulse response;
* samples before index 0 are zero (cold start) for every convolution;
* all samples are complex128.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgument

ComplexArray = NDArray[np.complex128]


def as_complex(values: ArrayLike) -> ComplexArray:
    return np.ascontiguousarray(values, dtype=np.complex128)


@dataclass(frozen=True)
class SampleBuffer:
    """Contiguous complex baseband samples with their sample rate.

    The sample array is copied on construction and flagged read-only.
    """

    samples: ComplexArray
    sample_rate_hz: float
    description: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.complex128, copy=True).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("samples must be finite")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise InvalidArgument(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def power(self, start: int = 0, stop: int | None = None) -> float:
        """Mean squared magnitude over ``samples[start:stop]``."""
        seg = self.samples[start:stop]
        if seg.size == 0:
            raise InvalidArgument("empty power evaluation span")
        return float(np.mean(seg.real**2 + seg.imag**2))

    def with_samples(self, samples: ArrayLike, description: str | None = None) -> SampleBuffer:
        """New buffer at the same sample rate."""
        desc = self.description if description is None else description
        return SampleBuffer(np.asarray(samples), self.sample_rate_hz, desc)


def _check_nonempty(x: ComplexArray) -> None:
    if x.ndim == 0 or x.shape[-1] == 0:
        raise InvalidArgument("transform input must have at least one element")


def dft(block: ArrayLike) -> ComplexArray:
    """Unnormalized DFT along the last axis, ``X[k] = sum_m x[m] exp(-2j pi k m / K)``."""
    x = as_complex(block)
    _check_nonempty(x)
    return np.fft.fft(x, axis=-1)


def idft(spectrum: ArrayLike) -> ComplexArray:
    """Inverse DFT along the last axis with the ``1/K`` factor."""
    X = as_complex(spectrum)
    _check_nonempty(X)
    return np.fft.ifft(X, axis=-1)


def convolve_linear(signal: SampleBuffer, taps: ArrayLike) -> SampleBuffer:
    """Causal convolution truncated to the input length.

    ``out[n] = sum_m taps[m] * signal[n - m]`` with zero pre-signal history.
    """
    h = as_complex(taps).reshape(-1)
    if h.size == 0:
        raise InvalidArgument("taps must be nonempty")
    x = signal.samples
    if x.size == 0:
        return signal.with_samples(x)
    out = np.convolve(x, h)[: x.size]
    return signal.with_samples(out)


def power_db(value: float) -> float:
    """10*log10(value); ``-inf`` for 0."""
    if value < 0 or math.isnan(value):
        raise InvalidArgument(f"power must be nonnegative, got {value}")
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)
