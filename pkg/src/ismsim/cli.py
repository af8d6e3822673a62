"""Command line entry point: ``ismsim simulate | rerun | gain | selftest``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .errors import IsmError
from .montecarlo import gain_at_ber, resolve_workers, run_sweep, with_overrides
from .scenario_io import load_scenarios, read_csv, scenario_from_manifest, write_csv

log = logging.getLogger("ismsim")


def _run(scenarios, args) -> int:
    out = Path(args.out)
    workers = resolve_workers(args.workers)
    for sc in scenarios:
        kw = {}
        if args.seed is not None:
            kw["master_seed"] = args.seed
        if args.max_blocks is not None:
            kw["max_blocks"] = args.max_blocks
        if kw:
            sc = with_overrides(sc, **kw)
        curve = run_sweep(sc, workers=workers)
        dest = out / f"{sc.label}.csv"
        write_csv(curve, dest)
        print(f"{sc.label}: eta={sc.spectral_efficiency} bits/s/Hz -> {dest}")
        for p in curve.points:
            print(f"  {p.snr_db:7.2f} dB  ber={p.ber:.3e}  errors={p.bit_errors:>6d}  "
                  f"blocks={p.blocks_sent}")
    return 0


def cmd_simulate(args) -> int:
    scenarios = load_scenarios(args.config)
    if args.scenario:
        wanted = set(args.scenario)
        unknown = wanted - {s.name for s in scenarios}
        if unknown:
            raise IsmError(f"no scenario named {', '.join(sorted(unknown))} in {args.config}")
        scenarios = [s for s in scenarios if s.name in wanted]
    return _run(scenarios, args)


def cmd_rerun(args) -> int:
    return _run([scenario_from_manifest(m) for m in args.manifest], args)


def cmd_gain(args) -> int:
    a = read_csv(args.curve_a)
    b = read_csv(args.curve_b)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        g = gain_at_ber(a, b, args.ber)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"{g:.3f}")
    return 0


def cmd_selftest(args) -> int:
    from . import selftest

    return 0 if selftest.run() else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ismsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log per-point progress")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--out", default="results", help="output directory (default: results)")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--workers", type=int,
                        help="worker processes (default: $ISMSIM_WORKERS or 1); never changes results")
        sp.add_argument("--max-blocks", type=int, help="override the per-point block cap")

    s = sub.add_parser("simulate", help="run the scenarios in a config file")
    s.add_argument("config")
    s.add_argument("--scenario", action="append", metavar="NAME",
                   help="run only this scenario (repeatable)")
    run_opts(s)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("rerun", help="re-run scenarios from their JSON manifests")
    r.add_argument("manifest", nargs="+")
    run_opts(r)
    r.set_defaults(func=cmd_rerun)

    g = sub.add_parser("gain", help="SNR gain of curve A over curve B at a target BER")
    g.add_argument("--curve-a", required=True)
    g.add_argument("--curve-b", required=True)
    g.add_argument("--ber", type=float, required=True)
    g.set_defaults(func=cmd_gain)

    t = sub.add_parser("selftest", help="run the built-in property checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        return args.func(args)
    except (IsmError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
