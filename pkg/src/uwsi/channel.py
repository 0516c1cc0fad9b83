"""Ground-truth time-varying SI channel: scenario specs, tap processes, application.

A scenario is a list of discrete paths on the baseband delay grid. Each path
is either static (fixed complex gain with a seeded random phase) or a
first-order complex Gauss-Markov process whose correlation coefficient is
chosen so that the normalized ACF equals 0.8 at half the configured coherence
time::

    a = 0.8 ** (2 / coherence_time_samples)
    g[n] = a * g[n-1] + sqrt(1 - a**2) * u[n]

Every path draws from its own child of the spec seed, so adding a path does
not perturb the others.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np
from scipy.signal import lfilter

from . import fileio, kernels
from .errors import InvalidArgument, LengthMismatch
from .signal import ComplexArray, SampleBuffer, db_to_linear

COT_THRESHOLD = 0.8
MAX_SRO_PPM = 1000.0


@dataclass(frozen=True)
class Static:
    pass


@dataclass(frozen=True)
class GaussMarkov:
    coherence_time_samples: float

    def __post_init__(self) -> None:
        if not self.coherence_time_samples > 0:
            raise InvalidArgument("coherence_time_samples must be positive")

    @property
    def coefficient(self) -> float:
        return COT_THRESHOLD ** (2.0 / self.coherence_time_samples)


Fading = Union[Static, GaussMarkov]


@dataclass(frozen=True)
class PathSpec:
    delay_samples: int
    mean_power_db: float
    fading: Fading = field(default_factory=Static)
    label: str = ""

    def __post_init__(self) -> None:
        if int(self.delay_samples) != self.delay_samples or self.delay_samples < 0:
            raise InvalidArgument(f"delay_samples must be a nonnegative integer, got {self.delay_samples}")
        if not math.isfinite(self.mean_power_db):
            raise InvalidArgument("mean_power_db must be finite")

    @property
    def mean_power(self) -> float:
        return db_to_linear(self.mean_power_db)


@dataclass(frozen=True)
class Impairments:
    cfo_hz: float = 0.0
    sro_ppm: float = 0.0


@dataclass(frozen=True)
class ChannelSpec:
    """Declarative scenario.

    ``noise_power`` is relative to a unit-power transmit signal: the absolute
    noise variance added by :func:`simulate` is ``noise_power * P_x``.
    """

    channel_len: int
    paths: tuple[PathSpec, ...]
    noise_power: float = 0.0
    impairments: Impairments | None = None
    seed: int = 0
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(self.paths))
        if int(self.channel_len) != self.channel_len or self.channel_len < 1:
            raise InvalidArgument(f"channel_len must be a positive integer, got {self.channel_len}")
        if not self.paths:
            raise InvalidArgument("a channel needs at least one path")
        delays = [p.delay_samples for p in self.paths]
        if len(set(delays)) != len(delays):
            raise InvalidArgument(f"path delays must be distinct, got {delays}")
        if max(delays) >= self.channel_len:
            raise InvalidArgument(f"path delay {max(delays)} outside channel_len {self.channel_len}")
        if not sum(p.mean_power for p in self.paths) > 0:
            raise InvalidArgument("total path power must be positive")
        if self.noise_power < 0:
            raise InvalidArgument("noise_power must be nonnegative")

    @property
    def total_power(self) -> float:
        return sum(p.mean_power for p in self.paths)

    def delays(self, label: str | None = None) -> list[int]:
        return sorted(p.delay_samples for p in self.paths if label is None or p.label == label)

    def mean_pdp(self) -> np.ndarray:
        """Configured per-bin mean power, length ``channel_len``."""
        p = np.zeros(self.channel_len)
        for path in self.paths:
            p[path.delay_samples] = path.mean_power
        return p

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        paths = []
        for p in self.paths:
            if isinstance(p.fading, GaussMarkov):
                fading = {"type": "gauss_markov", "coherence_time_samples": p.fading.coherence_time_samples}
            else:
                fading = {"type": "static"}
            entry = {"delay_samples": p.delay_samples, "mean_power_db": p.mean_power_db, "fading": fading}
            if p.label:
                entry["label"] = p.label
            paths.append(entry)
        d: dict[str, Any] = {
            "name": self.name,
            "channel_len": self.channel_len,
            "noise_power": self.noise_power,
            "seed": self.seed,
            "paths": paths,
            "impairments": None,
        }
        if self.impairments is not None:
            d["impairments"] = {"cfo_hz": self.impairments.cfo_hz, "sro_ppm": self.impairments.sro_ppm}
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ChannelSpec:
        if "channel" in d and isinstance(d["channel"], dict):
            d = d["channel"]
        paths = []
        for entry in d["paths"]:
            fad = entry.get("fading", {"type": "static"})
            kind = fad.get("type", "static")
            if kind == "static":
                fading: Fading = Static()
            elif kind == "gauss_markov":
                fading = GaussMarkov(float(fad["coherence_time_samples"]))
            else:
                raise InvalidArgument(f"unknown fading type {kind!r}")
            paths.append(
                PathSpec(int(entry["delay_samples"]), float(entry["mean_power_db"]), fading, entry.get("label", ""))
            )
        imp = d.get("impairments")
        impairments = None
        if imp:
            impairments = Impairments(float(imp.get("cfo_hz", 0.0)), float(imp.get("sro_ppm", 0.0)))
        return cls(
            channel_len=int(d["channel_len"]),
            paths=tuple(paths),
            noise_power=float(d.get("noise_power", 0.0)),
            impairments=impairments,
            seed=int(d.get("seed", 0)),
            name=d.get("name", ""),
        )


def load_scenario(path: str | os.PathLike) -> ChannelSpec:
    """Load a scenario JSON (top-level spec or a ``"channel"`` section)."""
    return ChannelSpec.from_dict(fileio.read_json(path))


def builtin_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"lake-hyd1"``."""
    stem = name[:-5] if name.endswith(".json") else name
    path = Path(__file__).with_name("scenarios") / f"{stem}.json"
    if not path.exists():
        raise InvalidArgument(f"no built-in scenario named {name!r}")
    return path


@dataclass(frozen=True)
class Scir:
    """Time-varying impulse response ``taps[m, j]`` with column ``j`` at geotime ``j * stride``."""

    taps: ComplexArray
    geotime_stride: int = 1

    def __post_init__(self) -> None:
        if self.taps.ndim != 2:
            raise InvalidArgument("taps must be a (delay, geotime) matrix")
        if self.geotime_stride < 1:
            raise InvalidArgument("geotime_stride must be positive")

    @property
    def channel_len(self) -> int:
        return self.taps.shape[0]

    @property
    def num_columns(self) -> int:
        return self.taps.shape[1]

    @property
    def span(self) -> int:
        return self.num_columns * self.geotime_stride

    def export(self, stem: str | os.PathLike, **meta: Any) -> list[Path]:
        return fileio.write_matrix(
            stem, self.taps, kind="scir", M=self.channel_len, columns=self.num_columns,
            stride=self.geotime_stride, **meta,
        )

    @classmethod
    def load(cls, stem: str | os.PathLike) -> Scir:
        taps, meta = fileio.read_matrix(stem)
        return cls(taps, int(meta.get("stride", 1)))


def _path_rngs(spec: ChannelSpec) -> list[np.random.Generator]:
    children = np.random.SeedSequence(spec.seed).spawn(len(spec.paths))
    return [np.random.default_rng(c) for c in children]


def gauss_markov_process(a: float, num_samples: int, rng: np.random.Generator) -> ComplexArray:
    """Unit-power stationary complex AR(1) sequence with coefficient ``a``."""
    u = (rng.standard_normal(num_samples) + 1j * rng.standard_normal(num_samples)) / math.sqrt(2.0)
    g0 = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
    # g[0] drawn from the stationary law, then g[n] = a g[n-1] + sqrt(1-a^2) u[n]
    drive = math.sqrt(1.0 - a * a) * u
    drive[0] = g0
    return lfilter([1.0], [1.0, -a], drive)


def realize_scir(spec: ChannelSpec, num_samples: int, stride: int = 1) -> Scir:
    """Draw one realization of the scenario over ``num_samples`` geotime samples."""
    if num_samples <= 0:
        raise InvalidArgument(f"num_samples must be positive, got {num_samples}")
    if stride < 1:
        raise InvalidArgument("stride must be positive")
    ncols = -(-num_samples // stride)
    taps = np.zeros((spec.channel_len, ncols), dtype=np.complex128)
    for path, rng in zip(spec.paths, _path_rngs(spec)):
        amp = math.sqrt(path.mean_power)
        if isinstance(path.fading, GaussMarkov):
            g = gauss_markov_process(path.fading.coefficient, num_samples, rng)
            taps[path.delay_samples] = amp * g[::stride]
        else:
            phase = rng.uniform(0.0, 2.0 * math.pi)
            taps[path.delay_samples] = amp * complex(math.cos(phase), math.sin(phase))
    return Scir(taps, stride)


def apply_channel(x: SampleBuffer, scir: Scir) -> SampleBuffer:
    """``s[n] = sum_m h[m, n] x[n - m]`` with zero-order hold across the stride."""
    n = len(x)
    if scir.span < n:
        raise LengthMismatch("SCIR does not cover the signal span", n, scir.span)
    out = np.empty(n, dtype=np.complex128)
    kernels.tv_convolve(x.samples, scir.taps, scir.geotime_stride, out)
    return x.with_samples(out, "self-interference")


def noise_realization(num_samples: int, noise_power: float, seed: int) -> ComplexArray:
    if noise_power < 0:
        raise InvalidArgument(f"noise_power must be nonnegative, got {noise_power}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(num_samples) + 1j * rng.standard_normal(num_samples)
    return w * math.sqrt(noise_power / 2.0)


def add_noise(s: SampleBuffer, noise_power: float, seed: int) -> SampleBuffer:
    """Add circularly-symmetric complex Gaussian noise of absolute power ``noise_power``."""
    if noise_power < 0:
        raise InvalidArgument(f"noise_power must be nonnegative, got {noise_power}")
    if noise_power == 0:
        return s.with_samples(s.samples, "received")
    return s.with_samples(s.samples + noise_realization(len(s), noise_power, seed), "received")


def apply_impairments(y: SampleBuffer, cfo_hz: float, sro_ppm: float) -> SampleBuffer:
    """Rotate by a carrier offset and resample by ``1 + sro_ppm * 1e-6``.

    Linear interpolation, edge values held. Calling again with negated
    arguments undoes the impairment up to interpolation error.
    """
    if not abs(sro_ppm) < MAX_SRO_PPM:
        raise InvalidArgument(f"|sro_ppm| must be below {MAX_SRO_PPM}, got {sro_ppm}")
    out = y.samples
    n = np.arange(len(y), dtype=np.float64)
    if sro_ppm != 0 and len(y) > 1:
        t = n * (1.0 + sro_ppm * 1e-6)
        out = np.interp(t, n, out.real) + 1j * np.interp(t, n, out.imag)
    if cfo_hz != 0:
        out = out * np.exp(2j * np.pi * cfo_hz * n / y.sample_rate_hz)
    return y.with_samples(out)


def transmit_power(x: SampleBuffer) -> float:
    return x.power() if len(x) else 0.0
