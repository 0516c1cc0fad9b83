"""End-to-end run: generate, simulate, estimate, characterize, cancel.

Seed derivation
---------------
The master seed feeds ``numpy.random.SeedSequence(master).spawn(3)``; the
three children, in order, seed the OFDM symbols, the channel realization
and the receiver noise. Each child is reduced to an integer with
``generate_state(1, uint64)[0]`` so the stage seeds can be written to the
manifest and reused with the standalone subcommands.

Every file the run writes is listed in ``manifest.json`` with its SHA-256.
The manifest carries no timestamps or host details, so two runs with the
same configuration and seed produce identical manifests.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np

from . import cancel as si_cancel
from . import channel as chan
from . import estimate_fd, estimate_td, fileio, ofdm, stats
from .errors import InvalidArgument, NotFound, StageError
from .signal import power_db

T = TypeVar("T")

ESTIMATORS = ("fd", "td", "both")
MANIFEST = "manifest.json"


def derive_seeds(master_seed: int) -> dict[str, int]:
    children = np.random.SeedSequence(master_seed).spawn(3)
    names = ("symbols", "channel", "noise")
    return {name: int(c.generate_state(1, np.uint64)[0]) for name, c in zip(names, children)}


@dataclass(frozen=True)
class TdSettings:
    channel_len: int = 256
    window_len: int = 512
    stride: int = 1

    def check(self) -> None:
        if self.channel_len < 1 or self.stride < 1:
            raise InvalidArgument("estimator-td: channel_len and stride must be positive")
        if self.window_len < self.channel_len:
            raise InvalidArgument(
                f"estimator-td: window length L_win={self.window_len} must be at least "
                f"the channel length M={self.channel_len}"
            )


@dataclass(frozen=True)
class StatsSettings:
    paths: tuple[int, ...] | None = None
    count: int = 2
    min_separation: int = 5
    max_lag_ms: float = 1000.0
    mu: float = stats.DEFAULT_MU


@dataclass(frozen=True)
class CancelSettings:
    """``mode`` is ``"full"`` or ``"off"``; ``subsets`` name partial reconstructions.

    A subset lists delays (integers) and/or path labels from the scenario.
    """

    mode: str = "full"
    subsets: dict[str, tuple[Any, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    ofdm: ofdm.OfdmConfig
    channel: chan.ChannelSpec
    estimator: str = "both"
    td: TdSettings = field(default_factory=TdSettings)
    stats: StatsSettings = field(default_factory=StatsSettings)
    cancel: CancelSettings = field(default_factory=CancelSettings)
    output_dir: Path = Path("runs/out")
    master_seed: int = 0
    channel_source: str = "inline"

    def check(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise InvalidArgument(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.estimator in ("td", "both"):
            self.td.check()
        if self.cancel.mode not in ("full", "off"):
            raise InvalidArgument(f"cancel mode must be 'full' or 'off', got {self.cancel.mode!r}")
        for name, items in self.cancel.subsets.items():
            self.subset_delays(items)

    def subset_delays(self, items) -> list[int]:
        delays: set[int] = set()
        for item in items:
            if isinstance(item, str):
                found = self.channel.delays(item)
                if not found:
                    raise InvalidArgument(f"no path labelled {item!r} in the scenario")
                delays.update(found)
            else:
                delays.add(int(item))
        return sorted(delays)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ofdm": self.ofdm.to_dict(),
            "channel": self.channel.to_dict(),
            "channel_source": self.channel_source,
            "estimator": self.estimator,
            "td": {"channel_len": self.td.channel_len, "window_len": self.td.window_len, "stride": self.td.stride},
            "stats": {
                "paths": None if self.stats.paths is None else list(self.stats.paths),
                "count": self.stats.count,
                "min_separation": self.stats.min_separation,
                "max_lag_ms": self.stats.max_lag_ms,
                "mu": self.stats.mu,
            },
            "cancel": {"mode": self.cancel.mode, "subsets": {k: list(v) for k, v in self.cancel.subsets.items()}},
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir: Path | None = None) -> PipelineConfig:
        """Build from a config/scenario dict; a string ``channel`` is a path relative to ``base_dir``."""
        base_dir = base_dir or Path.cwd()
        ch = d.get("channel")
        source = "inline"
        if isinstance(ch, str):
            path = Path(ch) if Path(ch).is_absolute() else base_dir / ch
            if not path.exists():
                raise NotFound(f"channel scenario not found: {path}")
            spec = chan.load_scenario(path)
            source = str(ch)
        elif isinstance(ch, dict):
            spec = chan.ChannelSpec.from_dict(ch)
        else:
            raise InvalidArgument("config needs a 'channel' section (inline object or file path)")
        td = d.get("td", {})
        st = d.get("stats", {})
        cc = d.get("cancel", {})
        if isinstance(cc, str):
            cc = {"mode": cc}
        return cls(
            ofdm=ofdm.OfdmConfig.from_dict(d["ofdm"]) if "ofdm" in d else ofdm.OfdmConfig(),
            channel=spec,
            estimator=d.get("estimator", "both"),
            td=TdSettings(int(td.get("channel_len", 256)), int(td.get("window_len", 512)), int(td.get("stride", 1))),
            stats=StatsSettings(
                tuple(int(m) for m in st["paths"]) if st.get("paths") is not None else None,
                int(st.get("count", 2)),
                int(st.get("min_separation", 5)),
                float(st.get("max_lag_ms", 1000.0)),
                float(st.get("mu", stats.DEFAULT_MU)),
            ),
            cancel=CancelSettings(cc.get("mode", "full"),
                                  {k: tuple(v) for k, v in cc.get("subsets", {}).items()}),
            output_dir=Path(d.get("output_dir", "runs/out")),
            master_seed=int(d.get("master_seed", 0)),
            channel_source=source,
        )


def load_config(path: str | os.PathLike) -> PipelineConfig:
    path = Path(path)
    return PipelineConfig.from_dict(fileio.read_json(path), base_dir=path.parent)


@dataclass
class PipelineResult:
    output_dir: Path
    seeds: dict[str, int]
    reports: dict[str, stats.StatReport]
    cancellation: dict[str, si_cancel.CancellationReport]
    files: list[Path]
    manifest: Path


def _stage(name: str, fn: Callable[[], T]) -> T:
    try:
        return fn()
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage named
        raise StageError(name, exc) from exc


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_pipeline(config: PipelineConfig, threads: int | None = None) -> PipelineResult:
    """Run every stage and write artifacts plus ``manifest.json`` to ``config.output_dir``."""
    _stage("config", config.check)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = derive_seeds(config.master_seed)
    files: list[Path] = []
    B = config.ofdm.bandwidth_hz

    # generate
    ocfg = replace(config.ofdm, seed=seeds["symbols"])
    frame = _stage("generate", lambda: ofdm.generate_frame(ocfg))
    files += _stage("generate", lambda: ofdm.export_frame(frame, out / "frame"))
    x = frame.time_signal

    # simulate
    spec = replace(config.channel, seed=seeds["channel"])

    def simulate():
        scir = chan.realize_scir(spec, len(x))
        s = chan.apply_channel(x, scir)
        noise_abs = spec.noise_power * chan.transmit_power(x)
        y = chan.add_noise(s, noise_abs, seeds["noise"])
        if spec.impairments is not None:
            imp = spec.impairments
            # the front end measures and removes the offsets before estimation
            y = chan.apply_impairments(y, imp.cfo_hz, imp.sro_ppm)
            y = chan.apply_impairments(y, -imp.cfo_hz, -imp.sro_ppm)
        return scir, y, noise_abs

    scir, y, noise_abs = _stage("simulate", simulate)
    files += _stage("simulate", lambda: scir.export(out / "truth_scir"))
    files += _stage("simulate", lambda: fileio.write_samples(out / "received", y))

    # estimate
    full_tracks: dict[str, Any] = {"truth": scir}
    if config.estimator in ("fd", "both"):
        fd = _stage("estimate-fd", lambda: estimate_fd.estimate_fd(y, frame))
        files += _stage("estimate-fd", lambda: fd.export(out / "fd_estimate", ocfg))
        full_tracks["fd"] = fd
    if config.estimator in ("td", "both"):
        t = config.td
        td = _stage("estimate-td", lambda: estimate_td.estimate_td(
            y, x, t.channel_len, t.window_len, t.stride, threads=threads))
        files += _stage("estimate-td", lambda: td.export(out / "td_estimate"))
        full_tracks["td"] = td

    # stats
    reports: dict[str, stats.StatReport] = {}
    for name, track in full_tracks.items():
        rep, written = _stage("stats", lambda: characterize(config, name, track, seeds, out))
        reports[name] = rep
        files += written

    # cancel
    cancellation: dict[str, si_cancel.CancellationReport] = {}
    if config.cancel.mode == "full":
        warmup = config.td.channel_len + config.td.window_len

        def do_cancel(label: str, track: Any, keep: list[int] | None) -> None:
            s_hat = si_cancel.reconstruct_si(x, track, keep_delays=keep)
            e, rep = si_cancel.cancel(y, s_hat, noise_abs, warmup=warmup)
            cancellation[label] = rep
            if keep is None:
                files.extend(fileio.write_samples(out / f"residual_{label}", e))

        for name, track in full_tracks.items():
            _stage("cancel", lambda: do_cancel(name, track, None))
            for sub, items in config.cancel.subsets.items():
                keep = config.subset_delays(items)
                _stage("cancel", lambda: do_cancel(f"{name}:{sub}", track, keep))
        files.append(fileio.write_json(out / "cancel_report.json",
                                       {k: v.to_dict() for k, v in sorted(cancellation.items())}))

    files.append(fileio.write_json(out / "config.json", config.to_dict()))
    manifest = write_manifest(out, files, seeds, config)
    return PipelineResult(out, seeds, reports, cancellation, files, manifest)


def characterize(config: PipelineConfig, name: str, track: Any, seeds: dict[str, int],
                 out: Path) -> tuple[stats.StatReport, list[Path]]:
    """Statistics of one track plus its JSON report and plot tables.

    FD estimates are cut to the scenario's channel length; TD estimates
    drop the partial-support warm-up and exclude singular windows.
    """
    B = config.ofdm.bandwidth_hz
    st = config.stats
    prov: dict[str, Any] = {"source": name, "master_seed": config.master_seed, "seeds": seeds,
                            "scenario": config.channel.name, "channel_source": config.channel_source}
    valid = None
    M = config.channel.channel_len
    if isinstance(track, estimate_fd.FdEstimate) and track.taps.shape[0] > M:
        track = estimate_fd.FdEstimate(track.taps[:M], track.block_len)
    elif isinstance(track, estimate_td.TdEstimate):
        j = track.first_full_column
        prov.update(window_len=track.window_len, channel_len=track.channel_len,
                    first_column_geotime=j * track.stride, invalid_columns=int((~track.valid[j:]).sum()))
        track = estimate_td.TdEstimate(track.taps[:, j:], track.window_len, track.stride, track.valid[j:], 0)
        valid = track.valid
    rep = stats.build_report(
        track, name, B, paths=list(st.paths) if st.paths is not None else None, count=st.count,
        min_separation=st.min_separation, max_lag_s=st.max_lag_ms / 1e3, mu=st.mu,
        valid=valid, provenance=prov)
    files = [fileio.write_json(out / f"stats_{name}.json", rep.to_dict())]
    for which in ("pdp", "accumulated"):
        files.append(export_plot_data(rep, which, out / f"plot_{name}_{which}.csv"))
    for m in sorted(rep.acfs):
        files.append(export_plot_data(rep, "acf", out / f"plot_{name}_acf_{m}.csv", path_delay=m))
        files.append(export_plot_data(rep, "tap-track", out / f"plot_{name}_track_{m}.csv", path_delay=m))
    return rep, files


def write_manifest(out: Path, files: list[Path], seeds: dict[str, int], config: PipelineConfig) -> Path:
    entries = []
    for f in sorted(set(Path(p) for p in files)):
        entries.append({"path": f.relative_to(out).as_posix(), "sha256": sha256_file(f), "bytes": f.stat().st_size})
    body = {"format": "uwsi-manifest/1", "master_seed": config.master_seed, "seeds": seeds, "files": entries}
    return fileio.write_json(out / MANIFEST, body)


# -- plot tables --------------------------------------------------------------

PLOT_KINDS = ("pdp", "acf", "accumulated", "tap-track")


def _fmt(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else ("-inf" if v < 0 else "inf")


def export_plot_data(report: stats.StatReport, which: str, path: str | os.PathLike,
                     path_delay: int | None = None) -> Path:
    """CSV table behind one figure, in physical units (ms, dB)."""
    if which not in PLOT_KINDS:
        raise InvalidArgument(f"plot kind must be one of {PLOT_KINDS}, got {which!r}")
    B = report.sample_rate_hz
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if which == "pdp":
        w.writerow(["delay_ms", "power_db"])
        for m, p in enumerate(report.pdp.values):
            w.writerow([_fmt(1e3 * m / B), _fmt(power_db(float(p)))])
    elif which == "accumulated":
        w.writerow(["j", "delay_ms", "p_acc", "fraction"])
        for j, (p, f) in enumerate(zip(report.accumulated.p_acc, report.accumulated.fractions)):
            w.writerow([j, _fmt(1e3 * j / B), _fmt(p), _fmt(f)])
    elif which == "acf":
        if path_delay is None:
            raise InvalidArgument("acf export needs a path delay")
        a = report.acf_for(path_delay)
        w.writerow(["lag_ms", "normalized_acf"])
        for lag, q in zip(a.lags, a.normalized):
            w.writerow([_fmt(1e3 * lag / B), _fmt(q)])
    else:
        if path_delay is None:
            raise InvalidArgument("tap-track export needs a path delay")
        if path_delay not in report.tap_tracks:
            raise NotFound(f"no tap track for delay bin {path_delay} in this report")
        h = report.tap_tracks[path_delay]
        w.writerow(["time_ms", "re", "im"])
        step = report.geotime_stride
        for n, v in enumerate(h):
            w.writerow([_fmt(1e3 * n * step / B), _fmt(v.real), _fmt(v.imag)])
    return fileio.atomic_write_bytes(path, buf.getvalue().encode())
