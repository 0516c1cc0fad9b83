"""Command-line entry point.

Stages share one working directory (``--out``) with fixed artifact names,
so each subcommand can be re-run on its own::

    uwsi generate    --config lake-hyd1 --out run/       # frame.*
    uwsi simulate    --config lake-hyd1 --out run/       # truth_scir.*, received.*
    uwsi estimate-fd --out run/                          # fd_estimate.*
    uwsi estimate-td --out run/ --stride 8               # td_estimate.*
    uwsi stats       --config lake-hyd1 --out run/ --estimator td
    uwsi cancel      --config lake-hyd1 --out run/ --estimator td --keep direct surface
    uwsi pipeline    --config lake-hyd1 --out run/ --estimator both

``--config`` takes a JSON file or the name of a built-in scenario. Stage
seeds derive from ``--seed`` exactly as in ``pipeline``, so running the
stages one by one reproduces the pipeline's files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import cancel as si_cancel
from . import channel as chan
from . import estimate_fd, estimate_td, fileio, kernels, ofdm, pipeline
from .errors import UwsiError


def _load_config(ref: str | None, args: argparse.Namespace) -> pipeline.PipelineConfig:
    if ref is None:
        ref = "lake-hyd1"
    path = Path(ref)
    if not path.exists():
        path = chan.builtin_scenario_path(ref)
    cfg = pipeline.load_config(path)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "blocks", None) is not None:
        changes["ofdm"] = replace(cfg.ofdm, num_blocks=args.blocks)
    if getattr(args, "estimator", None) in pipeline.ESTIMATORS:
        changes["estimator"] = args.estimator
    td = cfg.td
    if getattr(args, "preset", None):
        p = estimate_td.PRESETS[args.preset]
        td = replace(td, channel_len=p["channel_len"], window_len=p["window_len"])
    if getattr(args, "channel_len", None) is not None:
        td = replace(td, channel_len=args.channel_len)
    if getattr(args, "window_len", None) is not None:
        td = replace(td, window_len=args.window_len)
    if getattr(args, "stride", None) is not None:
        td = replace(td, stride=args.stride)
    changes["td"] = td
    if getattr(args, "out", None) is not None:
        changes["output_dir"] = Path(args.out)
    return replace(cfg, **changes)


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args)
    seeds = pipeline.derive_seeds(cfg.master_seed)
    frame = ofdm.generate_frame(replace(cfg.ofdm, seed=seeds["symbols"]))
    paths = ofdm.export_frame(frame, cfg.output_dir / "frame")
    _print({"written": [str(p) for p in paths], "samples": len(frame.time_signal)})
    return 0


def _noise_abs(cfg: pipeline.PipelineConfig, x) -> float:
    return cfg.channel.noise_power * chan.transmit_power(x)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args)
    out = cfg.output_dir
    frame = ofdm.load_frame(out / "frame")
    x = frame.time_signal
    seeds = pipeline.derive_seeds(cfg.master_seed)
    spec = replace(cfg.channel, seed=seeds["channel"])
    scir = chan.realize_scir(spec, len(x))
    y = chan.add_noise(chan.apply_channel(x, scir), _noise_abs(cfg, x), seeds["noise"])
    if spec.impairments is not None:
        imp = spec.impairments
        y = chan.apply_impairments(y, imp.cfo_hz, imp.sro_ppm)
        y = chan.apply_impairments(y, -imp.cfo_hz, -imp.sro_ppm)
    paths = scir.export(out / "truth_scir") + fileio.write_samples(out / "received", y)
    _print({"written": [str(p) for p in paths]})
    return 0


def cmd_estimate_fd(args: argparse.Namespace) -> int:
    out = Path(args.out)
    frame = ofdm.load_frame(out / "frame")
    y = fileio.read_samples(out / "received")
    est = estimate_fd.estimate_fd(y, frame)
    paths = est.export(out / "fd_estimate", frame.config)
    _print({"written": [str(p) for p in paths], "blocks": est.num_blocks})
    return 0


def cmd_estimate_td(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args)
    out = cfg.output_dir
    cfg.td.check()
    frame = ofdm.load_frame(out / "frame")
    y = fileio.read_samples(out / "received")
    est = estimate_td.estimate_td(y, frame.time_signal, cfg.td.channel_len, cfg.td.window_len, cfg.td.stride)
    paths = est.export(out / "td_estimate")
    _print({"written": [str(p) for p in paths], "columns": int(est.taps.shape[1]),
            "invalid_columns": int((~est.valid).sum()), "backend": kernels.BACKEND})
    return 0


def _load_track(out: Path, which: str):
    if which == "truth":
        return chan.Scir.load(out / "truth_scir")
    if which == "fd":
        return estimate_fd.FdEstimate.load(out / "fd_estimate")
    return estimate_td.TdEstimate.load(out / "td_estimate")


def _sources(estimator: str | None) -> list[str]:
    if estimator in (None, "both"):
        return ["fd", "td"]
    return [estimator]


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args)
    out = cfg.output_dir
    B = cfg.ofdm.bandwidth_hz
    seeds = pipeline.derive_seeds(cfg.master_seed)
    summary = {}
    for name in _sources(args.estimator):
        rep, _ = pipeline.characterize(cfg, name, _load_track(out, name), seeds, out)
        summary[name] = {
            "paths": rep.paths.delays,
            "cot_ms": {str(m): 1e3 * c.seconds(B) for m, c in rep.cots.items()},
            "censored": {str(m): c.censored for m, c in rep.cots.items()},
        }
    _print(summary)
    return 0


def cmd_cancel(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args)
    out = cfg.output_dir
    frame = ofdm.load_frame(out / "frame")
    x = frame.time_signal
    y = fileio.read_samples(out / "received")
    keep = None
    if args.keep:
        keep = cfg.subset_delays([int(k) if k.isdigit() else k for k in args.keep])
    warmup = cfg.td.channel_len + cfg.td.window_len if args.warmup is None else args.warmup
    reports = {}
    for name in _sources(args.estimator):
        track = _load_track(out, name)
        s_hat = si_cancel.reconstruct_si(x, track, keep_delays=keep)
        e, rep = si_cancel.cancel(y, s_hat, _noise_abs(cfg, x), warmup=warmup)
        label = name if keep is None else f"{name}:{'+'.join(map(str, args.keep))}"
        reports[label] = rep.to_dict()
        fileio.write_samples(out / f"residual_{label.replace(':', '_').replace('+', '-')}", e)
    fileio.write_json(out / "cancel_report.json", reports)
    _print(reports)
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args)
    result = pipeline.run_pipeline(cfg)
    B = cfg.ofdm.bandwidth_hz
    _print({
        "manifest": str(result.manifest),
        "seeds": result.seeds,
        "paths": {k: r.paths.delays for k, r in result.reports.items()},
        "cot_ms": {k: {str(m): 1e3 * c.seconds(B) for m, c in r.cots.items()} for k, r in result.reports.items()},
        "depth_db": {k: r.depth_db for k, r in result.cancellation.items()},
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uwsi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, seed=True):
        if config:
            sp.add_argument("--config", help="config/scenario JSON or built-in scenario name (default lake-hyd1)")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", required=True, help="working directory for artifacts")

    sp = sub.add_parser("generate", help="write the OFDM sounding frame")
    common(sp)
    sp.add_argument("--blocks", type=int, help="number of OFDM blocks (overrides the config)")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("simulate", help="pass the frame through the scenario channel")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate-fd", help="per-block frequency-domain estimate")
    common(sp, config=False, seed=False)
    sp.set_defaults(func=cmd_estimate_fd)

    sp = sub.add_parser("estimate-td", help="sliding-window least-squares estimate")
    common(sp, seed=False)
    sp.add_argument("--stride", type=int, help="geotime step between estimates (default 1)")
    sp.add_argument("--preset", choices=sorted(estimate_td.PRESETS))
    sp.add_argument("--channel-len", type=int)
    sp.add_argument("--window-len", type=int)
    sp.set_defaults(func=cmd_estimate_td)

    sp = sub.add_parser("stats", help="PDP, ACF, coherence time and accumulated power")
    common(sp)
    sp.add_argument("--estimator", choices=["fd", "td", "both", "truth"], default="both")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("cancel", help="reconstruct and subtract the SI")
    common(sp, seed=False)
    sp.add_argument("--estimator", choices=["fd", "td", "both", "truth"], default="both")
    sp.add_argument("--keep", nargs="+", help="delays or path labels to reconstruct (default all)")
    sp.add_argument("--warmup", type=int, help="samples excluded from the evaluation span (default M + L_win)")
    sp.set_defaults(func=cmd_cancel)

    sp = sub.add_parser("pipeline", help="run every stage and write a manifest")
    common(sp)
    sp.add_argument("--estimator", choices=list(pipeline.ESTIMATORS))
    sp.add_argument("--stride", type=int)
    sp.add_argument("--preset", choices=sorted(estimate_td.PRESETS))
    sp.add_argument("--blocks", type=int)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UwsiError as exc:
        print(f"uwsi: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
