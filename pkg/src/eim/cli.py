"""Command-line front end.

Usage:
    eim design --preset modulation1 --out out/
    eim run --preset modulation1 --set jitter_sigma_us=1.3
    eim sweep jitter_sigma --preset modulation1 --values 0.5,1,2,4,8
    eim calibrate --preset modulation1
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats
from .calibration import (SER_LIMIT, SWEEP_PARAMETERS, estimate_Td, estimate_Tr,
                          feasibility_threshold, run_experiment, sweep)
from .channel import simulate
from .codebook import Codebook, bitrate_general, sweep_M
from .config import PRESETS, ExperimentConfig
from .demodulator import demodulate
from .modulator import encode, to_edge_schedule

logger = logging.getLogger("eim")

CONFIG_HELP = "config keys (defaults):\n" + "\n".join(
    f"  {line}" for line in ExperimentConfig().to_text().splitlines()
)


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.preset(args.preset) if args.preset else ExperimentConfig()
    if args.config:
        cfg = ExperimentConfig.from_text(Path(args.config).read_text(), base=cfg)
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return cfg.updated(overrides)


def _out(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _emit(args, name: str, text: str) -> Path:
    path = _out(args, name)
    path.write_text(text)
    return path


def _summary(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_design(args, cfg: ExperimentConfig) -> int:
    cb = cfg.codebook()
    a = cb.alphabet
    _emit(args, "codebook.txt", cb.to_text())
    summary = {"T_r_ns": a.T_r, "T_d_ns": a.T_d, "M": a.M, "N_star": cb.block_length,
               "L": cb.payload_bits, "bitrate_bps": round(bitrate_general(cb), 3)}
    if args.sweep_m:
        lo, hi = (int(v) for v in args.sweep_m.split(":"))
        res = sweep_M(a.T_r, a.T_d, range(lo, hi + 1), cfg.n_max, cfg.epsilon, args.threads)
        _emit(args, "sweep_m.csv", formats.format_m_sweep(res))
        summary.update(best_M=res.best_M, selected_M=res.selected_M)
    _emit(args, "design.json", json.dumps(summary, sort_keys=True) + "\n")
    _summary(summary)
    return 0


def _codebook(args, cfg) -> Codebook:
    if getattr(args, "codebook", None):
        return Codebook.from_text(Path(args.codebook).read_text())
    return cfg.codebook()


def cmd_modulate(args, cfg) -> int:
    cb = _codebook(args, cfg)
    bits = formats.parse_bits(Path(args.bits).read_text()) if args.bits else np.zeros(0, np.uint8)
    intervals = encode(bits, cb)
    schedule = to_edge_schedule(intervals, cfg.pulse_width())
    _emit(args, "schedule.csv", formats.format_schedule(schedule))
    _summary({"bits": len(bits), "intervals": len(intervals), "edges": len(schedule)})
    return 0


def cmd_simulate(args, cfg) -> int:
    schedule = formats.parse_schedule(Path(args.schedule).read_text())
    stream = simulate(schedule, cfg.channel())
    _emit(args, "events.csv", formats.format_events(stream))
    _summary({"edges": len(schedule), "events": len(stream)})
    return 0


def cmd_demodulate(args, cfg) -> int:
    cb = _codebook(args, cfg)
    stream = formats.parse_events(Path(args.events).read_text())
    res = demodulate(stream, cb, cfg.demod())
    _emit(args, "decoded.hex", formats.bits_to_hex(res.bits) + "\n")
    diag = dict(res.diagnostics.as_dict(), bits=len(res.bits))
    _emit(args, "diagnostics.json", json.dumps(diag, sort_keys=True) + "\n")
    _summary(diag)
    return 0


def cmd_run(args, cfg) -> int:
    cb = _codebook(args, cfg)
    rep = run_experiment(cb, cfg.channel(), cfg.demod(), cfg.n_symbols, cfg.seed, cfg.pulse_width())
    lo, hi = rep.ser_interval()
    summary = dict(rep.as_dict(), ser_ci95=[lo, hi], bitrate_bps=round(bitrate_general(cb), 3),
                   feasible=bool(rep.ser < SER_LIMIT))
    _emit(args, "report.json", json.dumps(summary, sort_keys=True) + "\n")
    _summary(summary)
    return 0


def _sweep_values(param: str, text: str) -> list[float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("--values is empty")
    # durations are given in microseconds on the command line
    scale = 1000.0 if param in ("jitter_sigma", "lowpass_tau") else 1.0
    return [v * scale for v in vals]


def cmd_sweep(args, cfg) -> int:
    cb = _codebook(args, cfg)
    values = _sweep_values(args.param, args.values)
    rows = sweep(args.param, values, cb, cfg.channel(), cfg.demod(), cfg.n_symbols,
                 cfg.seed, args.threads, args.cycles)
    path = _emit(args, f"sweep_{args.param}.csv", formats.format_sweep(rows))
    summary = {"param": args.param, "rows": len(rows), "csv": str(path)}
    if args.param != "frequency":
        thr = feasibility_threshold(rows)
        name, div = formats.SWEEP_UNITS[args.param]
        summary[f"max_feasible_{name}"] = None if thr is None else thr / div
    _summary(summary)
    return 0


def cmd_calibrate(args, cfg) -> int:
    ch, dm = cfg.channel(), cfg.demod()
    step = int(round(cfg.cal_period_step_us * 1000))
    periods = range(int(round(cfg.cal_period_min_us * 1000)),
                    int(round(cfg.cal_period_max_us * 1000)) + 1, step)
    t_r = estimate_Tr(ch, dm, periods, cfg.cal_trials, cfg.cal_stability)
    probe = t_r if cfg.cal_probe_us is None else int(round(cfg.cal_probe_us * 1000))
    hist, t_d = estimate_Td(ch, dm, probe, cfg.cal_trials, cfg.cal_margin)
    _emit(args, "histogram.csv", formats.format_histogram(hist.counts()))
    summary = {"T_r_ns": t_r, "probe_ns": probe, "T_upper_ns": hist.T_Upper,
               "T_lower_ns": hist.T_Lower, "T_d_ns": t_d, "samples": len(hist.samples)}
    _emit(args, "calibration.json", json.dumps(summary, sort_keys=True) + "\n")
    _summary(summary)
    return 0


COMMANDS = {
    "design": cmd_design, "modulate": cmd_modulate, "simulate": cmd_simulate,
    "demodulate": cmd_demodulate, "run": cmd_run, "sweep": cmd_sweep, "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", metavar="DIR")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="eim", description="Event interval modulation toolkit",
        epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    kw = dict(parents=[common], epilog=CONFIG_HELP,
              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = sub.add_parser("design", help="build a codebook and report its rate", **kw)
    p.add_argument("--sweep-m", metavar="LO:HI", help="also sweep M over LO..HI")

    for name, hlp in (("modulate", "bits to an edge schedule CSV"),
                      ("demodulate", "event CSV to decoded bits"),
                      ("run", "end-to-end Monte-Carlo SER experiment")):
        p = sub.add_parser(name, help=hlp, **kw)
        p.add_argument("--codebook", metavar="PATH", help="codebook file from 'design'")
        if name == "modulate":
            p.add_argument("--bits", metavar="PATH", help="text file of 0/1 characters")
        if name == "demodulate":
            p.add_argument("--events", metavar="PATH", required=True)

    p = sub.add_parser("simulate", help="edge schedule CSV to event CSV", **kw)
    p.add_argument("--schedule", metavar="PATH", required=True)

    p = sub.add_parser("sweep", help="SER (or frequency response) over one parameter", **kw)
    p.add_argument("param", choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True,
                   help="comma-separated; us for jitter_sigma/lowpass_tau, events/s for noise_rate, Hz for frequency")
    p.add_argument("--codebook", metavar="PATH")
    p.add_argument("--cycles", type=int, default=1000, help="square-wave cycles per frequency")

    sub.add_parser("calibrate", help="estimate T_r and T_d on the simulated channel", **kw)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (ValueError, OSError, RuntimeError) as e:
        msg = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
