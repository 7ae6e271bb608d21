"""Command-line entry point: ``pfc-sim run|sweep|waveforms|size-bank``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .bank import Connection, binary_weights, size_binary_bank
from .controller import Mode
from .errors import DomainError, RangeError, ValidationError
from .phasor import SupplySpec
from .scenario import binary_scenario, load_scenario, paper_scenario
from .sim import dump_waveforms, frange, run_scenario, sweep, write_records, write_sweep

OUTPUT_DIR_ENV = "PFC_SIM_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RANGE = 3


def _default_path(name: str) -> Path | None:
    base = os.environ.get(OUTPUT_DIR_ENV)
    return Path(base) / name if base else None


def _open_out(out: str | None, default_name: str):
    """Return (stream, path); stdout when neither --out nor the env dir is set."""
    path = Path(out) if out else _default_path(default_name)
    if path is None:
        return sys.stdout, None
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline=""), path


def _emit(write, out, default_name):
    stream, path = _open_out(out, default_name)
    try:
        write(stream)
    finally:
        if path is not None:
            stream.close()
            print(f"wrote {path}", file=sys.stderr)


def _base_scenario(args):
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    mode = getattr(args, "mode", None) or "lookup"
    if mode == Mode.GREEDY.value:
        return binary_scenario(args.qmax, args.steps)
    return paper_scenario()


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    records = run_scenario(cfg)
    _emit(lambda s: write_records(records, s), args.out, Path(args.scenario).stem + ".csv")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _base_scenario(args)
    if args.mode and cfg.controller.mode.value != args.mode:
        raise ValidationError(f"--mode {args.mode} conflicts with the scenario's "
                              f"{cfg.controller.mode.value} mode")
    rows = sweep(frange(args.start, args.stop, args.step), args.compensate, cfg)
    _emit(lambda s: write_sweep(rows, s), args.out, "sweep.csv")
    errors = [r for r in rows if r.error]
    for r in errors:
        print(f"error at {r.current:g} A: {r.error}", file=sys.stderr)
    return EXIT_RANGE if errors else EXIT_OK


def cmd_waveforms(args) -> int:
    cfg = _base_scenario(args)
    dumps = dump_waveforms(args.current, cfg, args.fs, args.cycles, args.compensated)
    stem = f"waveforms_{args.current:g}A"
    _emit(lambda s: s.write(dumps["uncompensated"]), args.out, stem + ".csv")
    if "compensated" in dumps:
        if args.out:
            p = Path(args.out)
            comp_out = str(p.with_name(p.stem + "_compensated" + p.suffix))
        else:
            comp_out = None
        _emit(lambda s: s.write(dumps["compensated"]), comp_out, stem + "_compensated.csv")
    return EXIT_OK


def cmd_size_bank(args) -> int:
    supply = SupplySpec(args.voltage, args.frequency)
    units = size_binary_bank(args.qmax, args.steps, supply, args.connection)
    print("step,var,capacitance_uf,connection")
    for k, (q, u) in enumerate(zip(binary_weights(args.qmax, args.steps), units)):
        print(f"{k},{q:.6g},{u.capacitance_uf:.6g},{u.connection.value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfc-sim",
        description="PLC power-factor correction simulator. "
                    f"Output files default to ${OUTPUT_DIR_ENV} when set, else stdout.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file and write its record CSV")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    def bank_opts(p):
        p.add_argument("--scenario", help="take supply, motor, bank and controller from a scenario file")
        p.add_argument("--qmax", type=float, default=2700.0, help="binary bank size for --mode greedy")
        p.add_argument("--steps", type=int, default=4)
        p.add_argument("--out")

    p = sub.add_parser("sweep", help="constant-load table, with or without compensation")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--compensate", action="store_true")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    bank_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("waveforms", help="dump voltage/current/phase-detector waveforms")
    p.add_argument("--current", type=float, required=True)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--compensated", action="store_true")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    bank_opts(p)
    p.set_defaults(func=cmd_waveforms)

    p = sub.add_parser("size-bank", help="binary-weighted capacitor steps for a VAr range")
    p.add_argument("--qmax", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--connection", choices=[c.value for c in Connection], default="star")
    p.add_argument("--voltage", type=float, default=400.0)
    p.add_argument("--frequency", type=float, default=50.0)
    p.set_defaults(func=cmd_size_bank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        problems = getattr(exc, "problems", [str(exc)])
        for msg in problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except RangeError as exc:
        print(f"range error: {exc}", file=sys.stderr)
        return EXIT_RANGE


if __name__ == "__main__":
    sys.exit(main())
