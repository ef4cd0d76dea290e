"""Command-line front end: ``reramsim {perf,train,char,check}``.

Exit codes: 0 success, 1 usage error, 2 input or format error, 3 failed
constraint check under ``check --strict``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import charlab, perfmodel, train
from .device import load_device
from .errors import ConfigError, DomainError, FormatError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CONSTRAINT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# perf ------------------------------------------------------------------------------


def _reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(perfmodel.CSV_HEADER)
    for rep in reports:
        for row in rep.to_csv_rows():
            w.writerow(row[:4] + (repr(float(row[4])),) + row[5:])
    return buf.getvalue()


def _ratios_csv(ratios: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("bits", "metric", "value"))
    for bits, vals in ratios.items():
        for k, v in vals.items():
            w.writerow((bits, k, repr(float(v))))
    return buf.getvalue()


def cmd_perf(args) -> int:
    overrides = perfmodel.load_overrides(args.config) if args.config else {}
    if args.all:
        reports = perfmodel.all_reports(overrides)
        ratios = {}
        for b in perfmodel.BITS:
            ratios[str(b)] = perfmodel.headline_ratios(
                reports[("analog-reram", b)], reports[("digital-reram", b)], reports[("sram", b)])
        ext = args.format
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            for (v, b), rep in reports.items():
                text = _dump_json(rep.to_dict()) if ext == "json" else _reports_csv([rep])
                (out / f"{v}-{b}bit.{ext}").write_text(text)
            (out / f"ratios.{ext}").write_text(_dump_json(ratios) if ext == "json" else _ratios_csv(ratios))
        elif ext == "json":
            _emit(_dump_json({"reports": [r.to_dict() for r in reports.values()], "ratios": ratios}), None)
        else:
            _emit(_reports_csv(reports.values()) + "\n" + _ratios_csv(ratios), None)
        return EXIT_OK
    if not args.arch or not args.bits:
        raise UsageError("perf needs --arch and --bits, or --all")
    rep = perfmodel.cost_report(args.arch, perfmodel.make_config(args.bits, overrides))
    _emit(_dump_json(rep.to_dict()) if args.format == "json" else _reports_csv([rep]), args.out)
    return EXIT_OK


# train -----------------------------------------------------------------------------------


def cmd_train(args) -> int:
    if args.epochs < 0:
        raise UsageError("--epochs must be >= 0")
    try:
        data = train.load_mnist(args.mnist)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cfg = train.NetworkConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                              train_subset=args.train_subset, test_subset=args.test_subset)
    device = load_device(args.device) if args.device else train.reference_device()
    xcfg = train.CrossbarConfig(step_calibration=args.step_calibration)
    progress = None
    if args.verbose:
        def progress(ep, h):
            print(f"epoch {ep}: train {h[1]:.4f} test {h[2]:.4f}", file=sys.stderr)
    if args.backend == "numeric":
        res = train.train_numeric(cfg, data, progress)
    elif args.backend == "crossbar":
        res = train.train_crossbar(cfg, data, device, args.mode, xcfg, progress)
    else:
        pc = train.PeriodicCarryConfig(args.devices_per_weight, args.base, args.carry_interval,
                                       args.carry_threshold, args.program_tolerance)
        res = train.train_periodic_carry(cfg, data, train.ablation_device(device, args.mode), pc, xcfg, progress)
    summary = {
        "backend": args.backend,
        "mode": args.mode,
        "seed": args.seed,
        "epochs": args.epochs,
        "learning_rate": args.lr,
        "train_samples": len(data.train_x[:args.train_subset]),
        "device": args.device or "built-in reference device",
        **res.summary(),
    }
    if args.baseline and args.backend != "numeric":
        base = train.train_numeric(cfg, data)
        summary["numeric_final_test_acc"] = base.final_test_acc
        summary["accuracy_gap"] = base.final_test_acc - res.final_test_acc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "history.csv").write_text(train.history_csv(res))
    (out / "summary.json").write_text(_dump_json(summary))
    if args.checkpoint and isinstance(res.net, train.CrossbarNet):
        for li, layer in enumerate(res.net.cores):
            for ci, core in enumerate(layer):
                core.save(out / f"layer{li}_core{ci}.json")
    print(_dump_json(summary), end="")
    return EXIT_OK


# char --------------------------------------------------------------------------------------


def cmd_char(args) -> int:
    if args.bins < 2:
        raise UsageError("--bins must be >= 2")
    if bool(args.trace) == bool(args.fit_voltage):
        raise UsageError("give exactly one of --trace or --fit-voltage")
    if args.fit_voltage:
        rep = charlab.fit_voltage_response(charlab.parse_points(args.fit_voltage), dg_unit=args.dg_unit,
                                           floor=args.floor)
        _emit(_dump_json(rep.to_dict()), args.out)
        return EXIT_OK
    trace = charlab.parse_trace(args.trace)
    tables = charlab.build_tables(trace, args.bins, args.samples_per_cdf)
    if len(tables) == 1:
        _emit(_dump_json(next(iter(tables.values())).to_dict()), args.out)
        return EXIT_OK
    if not args.out:
        raise UsageError("trace holds several pulse configurations; --out is required")
    base = Path(args.out)
    for (vs, vr, w), tab in sorted(tables.items()):
        name = f"{base.stem}_set{vs:g}V_reset{vr:g}V_{w:g}ns{base.suffix or '.json'}"
        _emit(_dump_json(tab.to_dict()), str(base.with_name(name)))
    return EXIT_OK


# check ---------------------------------------------------------------------------------------


def cmd_check(args) -> int:
    overrides = perfmodel.load_overrides(args.config) if args.config else {}
    rep = perfmodel.constraint_report(overrides)
    _emit(_dump_json(rep), args.out)
    if args.strict and not rep["passed"]:
        return EXIT_CONSTRAINT
    return EXIT_OK


# entry point ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="reramsim", description="Analog ReRAM training accelerator models.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    pp = sub.add_parser("perf", help="area / latency / energy reports")
    pp.add_argument("--arch", choices=perfmodel.VARIANTS)
    pp.add_argument("--bits", type=int, choices=perfmodel.BITS)
    pp.add_argument("--all", action="store_true", help="all variants and bit widths plus ratios")
    pp.add_argument("--config", help="JSON overrides of the reference parameters")
    pp.add_argument("--format", choices=("csv", "json"), default="json")
    pp.add_argument("--out", help="output file (directory with --all); stdout if omitted")
    pp.set_defaults(func=cmd_perf)

    pt = sub.add_parser("train", help="MNIST training run")
    pt.add_argument("--backend", choices=("numeric", "crossbar", "periodic-carry"), default="numeric")
    pt.add_argument("--mode", choices=[m.value for m in train.AblationMode if m.value != "numeric"],
                    default="full")
    pt.add_argument("--device", help="device model or conductance table JSON")
    pt.add_argument("--mnist", help=f"MNIST directory (default ${train.MNIST_ENV} or data/mnist)")
    pt.add_argument("--epochs", type=int, default=20)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--lr", type=float, default=0.1)
    pt.add_argument("--train-subset", type=int)
    pt.add_argument("--test-subset", type=int)
    pt.add_argument("--step-calibration", choices=("range-average", "midpoint"), default="range-average")
    pt.add_argument("--devices-per-weight", type=int, default=3)
    pt.add_argument("--base", type=float, default=8.0)
    pt.add_argument("--carry-interval", type=int, default=1000)
    pt.add_argument("--carry-threshold", type=float, default=0.8)
    pt.add_argument("--program-tolerance", type=float, default=0.02)
    pt.add_argument("--baseline", action="store_true",
                    help="also train the numeric network at the same seed and report the gap")
    pt.add_argument("--checkpoint", action="store_true", help="also save core snapshots")
    pt.add_argument("--out", default="out/train")
    pt.add_argument("-v", "--verbose", action="store_true")
    pt.set_defaults(func=cmd_train)

    pc = sub.add_parser("char", help="device characterisation")
    pc.add_argument("--trace", help="pulse trace CSV (gzip accepted)")
    pc.add_argument("--bins", type=int, default=64)
    pc.add_argument("--samples-per-cdf", type=int, default=101)
    pc.add_argument("--fit-voltage", help="voltage_V,mean_dg CSV to fit")
    pc.add_argument("--dg-unit", type=float, default=1.0)
    pc.add_argument("--floor", type=float, default=1e-6)
    pc.add_argument("--out")
    pc.set_defaults(func=cmd_char)

    pk = sub.add_parser("check", help="electromigration and endurance constraints")
    pk.add_argument("--config", help="JSON overrides for the checks")
    pk.add_argument("--strict", action="store_true", help="exit 3 if any constraint fails")
    pk.add_argument("--out")
    pk.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"reramsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ConfigError, DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"reramsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
