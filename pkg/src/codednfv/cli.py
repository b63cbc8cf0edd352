"""Command line driver: sweeps, matrix design, MFR queries, codec debugging.

Sweep options come from defaults, then a config file, then command line
flags, later sources winning.  The default worker count can be set with the
CODEDNFV_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .convcode import ConvCode, Termination, encode, parse_taps, viterbi_decode
from .designer import ErasureModel, measure_f, reports_to_jsonl, search_gnfv
from .gf2 import BitVec
from .schemes import mfr_witness, parse_scheme
from .sweep import (
    ConfigError,
    PartialSweep,
    SweepConfig,
    rows_to_csv,
    rows_to_json,
    run_sweep,
)


def _add_sweep_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, help="flat key = value config file")
    sp.add_argument("--taps", help="octal tap patterns, e.g. 171,133")
    sp.add_argument("--constraint-length", dest="constraint_length")
    sp.add_argument("--k", help="message bits per frame")
    sp.add_argument("--termination", choices=[t.value for t in Termination])
    sp.add_argument("--n-servers", dest="n_servers")
    sp.add_argument("--n-frames", dest="n_frames")
    sp.add_argument("--schemes", help="comma list: diversity, coded, matrix:<rows>")
    sp.add_argument("--p", help="comma list or logspace:start,stop,count")
    sp.add_argument("--q", help="comma list or logspace:start,stop,count")
    sp.add_argument("--trials", help="Monte Carlo trials per point")
    sp.add_argument("--seed", help="master seed")
    sp.add_argument("--detection", choices=["genie", "crc16"])
    sp.add_argument("--estimators", help="comma list: exact_enum, closed_form, full_mc")
    sp.add_argument("--workers", help="worker processes (default $CODEDNFV_WORKERS)")
    sp.add_argument("--output", type=Path, help="output file (default stdout)")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")


def _build_config(args: argparse.Namespace) -> SweepConfig:
    config = SweepConfig()
    if args.config is not None:
        config = SweepConfig.from_text(args.config.read_text())
    overrides = {
        key: getattr(args, key)
        for key in (
            "taps",
            "constraint_length",
            "k",
            "termination",
            "n_servers",
            "n_frames",
            "schemes",
            "p",
            "q",
            "trials",
            "seed",
            "detection",
            "estimators",
            "workers",
        )
    }
    return config.with_overrides(overrides)


def _write_output(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        config = _build_config(args)
        complete = True
        try:
            rows = run_sweep(config)
        except PartialSweep as exc:
            complete = False
            rows = exc.rows
            print(f"error: {exc}", file=sys.stderr)
        text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
        _write_output(text, args.output)
        if not complete and args.output is not None:
            args.output.with_suffix(args.output.suffix + ".partial").write_text(
                "sweep incomplete; see stderr\n"
            )
        return 0 if complete else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def _cmd_design(args: argparse.Namespace) -> int:
    code = ConvCode(args.constraint_length, parse_taps(args.taps))
    f_table = measure_f(
        code, args.p, d_max=args.n_frames, trials=args.trials, seed=args.seed, k=args.k
    )
    model = ErasureModel(args.q, f_table)
    reports = search_gnfv(
        args.n_frames, args.n_servers, model, budget=args.budget, seed=args.seed
    )
    _write_output(reports_to_jsonl(reports), args.output)
    if args.output is not None:
        print(f"wrote {len(reports)} candidates to {args.output}", file=sys.stderr)
    return 0


def _cmd_mfr(args: argparse.Namespace) -> int:
    scheme = parse_scheme(args.scheme, args.n_servers, args.n_frames)
    count, removal = mfr_witness(scheme)
    servers = ", ".join(str(j + 1) for j in removal)
    print(f"mfr: {count}")
    print(f"witness: removing server(s) {servers} defeats recovery")
    return 0


def _code_from_args(args: argparse.Namespace) -> ConvCode:
    return ConvCode(
        args.constraint_length, parse_taps(args.taps), Termination(args.termination)
    )


def _cmd_encode(args: argparse.Namespace) -> int:
    print(encode(_code_from_args(args), BitVec.from01(args.bits)).to01())
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    print(viterbi_decode(_code_from_args(args), BitVec.from01(args.bits)).to01())
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="codednfv",
        description="Fault-tolerant distributed channel decoding simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="error probability over a (scheme, p, q) grid")
    _add_sweep_args(sp)
    sp.set_defaults(func=_cmd_sweep)

    dp = sub.add_parser("design", help="search combining matrices under erasures")
    dp.add_argument("--n-frames", type=int, required=True)
    dp.add_argument("--n-servers", type=int, required=True)
    dp.add_argument("--p", type=float, required=True, help="channel crossover")
    dp.add_argument("--q", type=float, required=True, help="server failure probability")
    dp.add_argument("--trials", type=int, default=20000, help="trials per f(d) entry")
    dp.add_argument("--budget", type=int, default=100000, help="max candidates")
    dp.add_argument("--seed", type=int, default=1)
    dp.add_argument("--taps", default="171,133")
    dp.add_argument("--constraint-length", dest="constraint_length", type=int, default=7)
    dp.add_argument("--k", type=int, default=70)
    dp.add_argument("--output", type=Path, help="JSON-lines report (default stdout)")
    dp.set_defaults(func=_cmd_design)

    mp = sub.add_parser("mfr", help="minimum failure removal of a scheme")
    mp.add_argument("scheme", help="diversity | coded | matrix:<rows>")
    mp.add_argument("--n-servers", type=int, default=3)
    mp.add_argument("--n-frames", type=int, default=2)
    mp.set_defaults(func=_cmd_mfr)

    for name, func, hlp in (
        ("encode", _cmd_encode, "encode a 0/1 message string"),
        ("decode", _cmd_decode, "Viterbi-decode a 0/1 received string"),
    ):
        cp = sub.add_parser(name, help=hlp)
        cp.add_argument("bits")
        cp.add_argument("--taps", default="171,133")
        cp.add_argument("--constraint-length", dest="constraint_length", type=int, default=7)
        cp.add_argument("--termination", default="unterminated",
                        choices=[t.value for t in Termination])
        cp.set_defaults(func=func)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
