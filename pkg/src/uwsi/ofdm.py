"""BPSK-OFDM sounding frames with a full-length cyclic prefix."""

from __future__ import annotations

import csv
import os
from io import StringIO
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from . import fileio
from .errors import InvalidArgument, LengthMismatch
from .signal import ComplexArray, SampleBuffer, as_complex, idft


@dataclass(frozen=True)
class OfdmConfig:
    subcarriers: int = 256
    cp_len: int = 256
    num_blocks: int = 720
    bandwidth_hz: float = 5000.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("subcarriers", "cp_len", "num_blocks"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidArgument(f"{name} must be a positive integer, got {value}")
        if self.cp_len > self.subcarriers:
            raise InvalidArgument("cp_len cannot exceed the number of subcarriers")
        if not self.bandwidth_hz > 0:
            raise InvalidArgument(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")

    @property
    def block_len(self) -> int:
        return self.subcarriers + self.cp_len

    @property
    def num_samples(self) -> int:
        return self.num_blocks * self.block_len

    @property
    def block_duration_s(self) -> float:
        return self.block_len / self.bandwidth_hz

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> OfdmConfig:
        return cls(
            subcarriers=int(d["subcarriers"]),
            cp_len=int(d["cp_len"]),
            num_blocks=int(d["num_blocks"]),
            bandwidth_hz=float(d["bandwidth_hz"]),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class OfdmFrame:
    config: OfdmConfig
    symbols: ComplexArray  # (N, K), entries +-1
    time_signal: SampleBuffer

    def blocks(self) -> ComplexArray:
        """Transmitted blocks ``b_i`` as an ``(N, L_blk)`` view."""
        c = self.config
        return self.time_signal.samples.reshape(c.num_blocks, c.block_len)


def bpsk_symbols(config: OfdmConfig) -> ComplexArray:
    rng = np.random.default_rng(config.seed)
    bits = rng.integers(0, 2, size=(config.num_blocks, config.subcarriers))
    return (1.0 - 2.0 * bits).astype(np.complex128)


def generate_frame(config: OfdmConfig, symbols: ArrayLike | None = None) -> OfdmFrame:
    """Build the serialized frame ``x[i*L_blk + l] = b_i[l]``.

    ``symbols`` overrides the seeded BPSK draw; it must be ``(N, K)``.
    """
    K, cp = config.subcarriers, config.cp_len
    if symbols is None:
        D = bpsk_symbols(config)
    else:
        D = as_complex(symbols)
        if D.shape != (config.num_blocks, K):
            raise InvalidArgument(f"symbols must have shape {(config.num_blocks, K)}, got {D.shape}")
    d = idft(D)
    b = np.concatenate([d[:, K - cp :], d], axis=1)
    x = SampleBuffer(b.reshape(-1), config.bandwidth_hz, "ofdm transmit frame")
    D = D.copy()
    D.flags.writeable = False
    return OfdmFrame(config, D, x)


def parse_blocks(received: SampleBuffer, config: OfdmConfig) -> ComplexArray:
    """Cut the first ``N*L_blk`` samples into an ``(N, L_blk)`` block matrix."""
    need = config.num_samples
    if len(received) < need:
        raise LengthMismatch("received buffer too short for the frame", need, len(received))
    return received.samples[:need].reshape(config.num_blocks, config.block_len).copy()


def strip_cp(block: ArrayLike, config: OfdmConfig) -> ComplexArray:
    """Drop the cyclic prefix; works on one block or on a stack of blocks."""
    b = as_complex(block)
    if b.shape[-1] != config.block_len:
        raise InvalidArgument(f"block length must be {config.block_len}, got {b.shape[-1]}")
    return b[..., config.cp_len :].copy()


def export_frame(frame: OfdmFrame, stem: str | os.PathLike, with_symbols_csv: bool = True) -> list[Path]:
    """Write the time signal (raw format), a JSON header and optionally the symbol CSV."""
    stem = Path(stem)
    paths = fileio.write_samples(stem, frame.time_signal)
    header = {"ofdm": frame.config.to_dict(), "seed": frame.config.seed, "signal": paths[0].name}
    paths.append(fileio.write_json(stem.with_name(stem.name + ".header.json"), header))
    if with_symbols_csv:
        rows = [[int(v) for v in row.real] for row in frame.symbols]
        csv_path = stem.with_name(stem.name + ".symbols.csv")
        buf = StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        paths.append(fileio.atomic_write_bytes(csv_path, buf.getvalue().encode()))
    return paths


def load_frame(stem: str | os.PathLike) -> OfdmFrame:
    """Rebuild a frame from its header; symbols come from the CSV when present."""
    stem = Path(stem)
    header = fileio.read_json(stem.with_name(stem.name + ".header.json"))
    config = OfdmConfig.from_dict(header["ofdm"])
    csv_path = stem.with_name(stem.name + ".symbols.csv")
    symbols = None
    if csv_path.exists():
        symbols = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    return generate_frame(config, symbols)


def load_symbols_csv(path: str | os.PathLike) -> ComplexArray:
    return np.loadtxt(path, delimiter=",", ndmin=2).astype(np.complex128)
