"""On-disk formats.

Every binary payload is little-endian interleaved float64 pairs (re, im),
i.e. numpy ``<c16``, written next to a JSON sidecar with the same stem:

* sample buffers: ``<stem>.c128`` + ``<stem>.json`` with ``sample_rate_hz``,
  ``sample_count`` and ``description``;
* complex matrices (SCIR tracks, estimates, symbol grids): row-major payload,
  sidecar with ``rows``, ``cols`` and arbitrary extra metadata.

All writes go through a temporary file followed by an atomic rename.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidArgument, NotFound
from .signal import SampleBuffer

RAW_DTYPE = np.dtype("<c16")
RAW_FORMAT = "cf64le-interleaved"
PAYLOAD_SUFFIX = ".c128"


@contextmanager
def atomic_writer(path: str | os.PathLike):
    """Binary file handle whose content replaces ``path`` only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> Path:
    with atomic_writer(path) as fh:
        fh.write(data)
    return Path(path)


def write_json(path: str | os.PathLike, obj: Any) -> Path:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    return atomic_write_bytes(path, text.encode("utf-8"))


def read_json(path: str | os.PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise NotFound(f"no such file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def _stem(path: str | os.PathLike) -> Path:
    path = Path(path)
    if path.suffix in (PAYLOAD_SUFFIX, ".json"):
        path = path.with_suffix("")
    return path


def payload_path(path: str | os.PathLike) -> Path:
    return _stem(path).with_suffix(PAYLOAD_SUFFIX)


def sidecar_path(path: str | os.PathLike) -> Path:
    return _stem(path).with_suffix(".json")


def write_samples(path: str | os.PathLike, buf: SampleBuffer) -> list[Path]:
    """Write a buffer; returns ``[payload, sidecar]``."""
    data = np.asarray(buf.samples, dtype=RAW_DTYPE).tobytes()
    meta = {
        "format": RAW_FORMAT,
        "sample_rate_hz": buf.sample_rate_hz,
        "sample_count": len(buf),
        "description": buf.description,
    }
    return [atomic_write_bytes(payload_path(path), data), write_json(sidecar_path(path), meta)]


def read_samples(path: str | os.PathLike) -> SampleBuffer:
    meta = read_json(sidecar_path(path))
    raw = payload_path(path)
    if not raw.exists():
        raise NotFound(f"no such file: {raw}")
    samples = np.fromfile(raw, dtype=RAW_DTYPE)
    if samples.size != int(meta["sample_count"]):
        raise InvalidArgument(
            f"{raw}: sidecar says {meta['sample_count']} samples, payload holds {samples.size}"
        )
    return SampleBuffer(samples, float(meta["sample_rate_hz"]), meta.get("description", ""))


def write_matrix(path: str | os.PathLike, matrix: np.ndarray, **meta: Any) -> list[Path]:
    """Write a 2-D complex matrix with its shape and ``meta`` in the sidecar."""
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise InvalidArgument(f"expected a 2-D matrix, got shape {m.shape}")
    side = {"format": RAW_FORMAT, "rows": int(m.shape[0]), "cols": int(m.shape[1]), **meta}
    payload = payload_path(path)
    # row blocks keep the temporary copy small for large column-major tracks
    step = max(1, (1 << 22) // max(1, m.shape[1]))
    with atomic_writer(payload) as fh:
        for r in range(0, m.shape[0], step):
            fh.write(np.ascontiguousarray(m[r : r + step], dtype=RAW_DTYPE).data)
    return [payload, write_json(sidecar_path(path), side)]


def read_matrix(path: str | os.PathLike) -> tuple[np.ndarray, dict[str, Any]]:
    meta = read_json(sidecar_path(path))
    raw = payload_path(path)
    if not raw.exists():
        raise NotFound(f"no such file: {raw}")
    flat = np.fromfile(raw, dtype=RAW_DTYPE)
    rows, cols = int(meta["rows"]), int(meta["cols"])
    if flat.size != rows * cols:
        raise InvalidArgument(f"{raw}: expected {rows}x{cols} entries, payload holds {flat.size}")
    return flat.reshape(rows, cols).astype(np.complex128), meta
