"""Per-block frequency-domain SCIR estimation."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .errors import DegenerateSymbol
from .ofdm import OfdmConfig, OfdmFrame, parse_blocks, strip_cp
from .signal import ComplexArray, SampleBuffer, dft, idft

SYMBOL_FLOOR = 1e-12


@dataclass(frozen=True)
class FdEstimate:
    """``taps[m, i]`` is the delay-``m`` estimate for block ``i`` (geotime ``i * L_blk``)."""

    taps: ComplexArray
    block_len: int

    @property
    def num_blocks(self) -> int:
        return self.taps.shape[1]

    @property
    def geotime_stride(self) -> int:
        return self.block_len

    def geotime_of_block(self, i: int) -> int:
        return i * self.block_len

    def export(self, stem: str | os.PathLike, config: OfdmConfig) -> list[Path]:
        return fileio.write_matrix(
            stem, self.taps, kind="fd_estimate", K=config.subcarriers, N=self.num_blocks,
            L_blk=self.block_len, stride=self.block_len, geotime="column i at sample i*L_blk (block start)",
        )

    @classmethod
    def load(cls, stem: str | os.PathLike) -> FdEstimate:
        taps, meta = fileio.read_matrix(stem)
        return cls(taps, int(meta["L_blk"]))


def estimate_fd(received: SampleBuffer, frame: OfdmFrame) -> FdEstimate:
    config = frame.config
    D = frame.symbols
    if np.any(np.abs(D) < SYMBOL_FLOOR):
        raise DegenerateSymbol("a known symbol is below the division floor")
    d_hat = strip_cp(parse_blocks(received, config), config)
    H = dft(d_hat) / D
    h = idft(H)
    return FdEstimate(np.ascontiguousarray(h.T), config.block_len)
