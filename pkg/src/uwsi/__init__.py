"""Self-interference channel sounding, estimation and statistics for
underwater acoustic in-band full-duplex links.

The package simulates a time-varying SI channel at complex baseband, sounds
it with a BPSK-OFDM frame, estimates the channel impulse response per block
(frequency domain) or per sample (sliding-window least squares), and reduces
the estimates to delay profiles, tap autocorrelations, coherence times and
cancellation depth.
"""

from __future__ import annotations

from .channel import ChannelSpec, GaussMarkov, PathSpec, Scir, Static, load_scenario, realize_scir
from .errors import (
    DegeneratePath,
    DegenerateSymbol,
    InvalidArgument,
    LengthMismatch,
    NotFound,
    StageError,
    UwsiError,
)
from .estimate_fd import FdEstimate
from .estimate_td import TdEstimate
from .kernels import BACKEND
from .ofdm import OfdmConfig, OfdmFrame, generate_frame
from .signal import SampleBuffer, dft, idft

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelSpec",
    "DegeneratePath",
    "DegenerateSymbol",
    "FdEstimate",
    "GaussMarkov",
    "InvalidArgument",
    "LengthMismatch",
    "NotFound",
    "OfdmConfig",
    "OfdmFrame",
    "PathSpec",
    "SampleBuffer",
    "Scir",
    "StageError",
    "Static",
    "TdEstimate",
    "UwsiError",
    "dft",
    "generate_frame",
    "idft",
    "load_scenario",
    "realize_scir",
]
