"""Command line entry point: ``nlch validate|run|sweep-eps|sweep-delta|consistency``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfgmod
from . import harness
from .errors import NLCHError


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlch", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("validate", "run the operator and entropy identity suite"),
        ("run", "run one simulation"),
        ("sweep-eps", "nonlocal runs over eps against the local limit"),
        ("sweep-delta", "regularized runs over delta against the degenerate run"),
        ("consistency", "order study of the nonlocal operators vs their local limits"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--eps", default=None, help="comma separated eps list, e.g. 0.2,0.1,0.05")
        p.add_argument("--delta", default=None, help="comma separated delta list, e.g. 0.2,0.1,0.05")
    return ap


def _print_rows(rows) -> None:
    for r in rows:
        print("  ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in vars(r).items()))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        spec = cfgmod.load(args.config)
        if args.command == "validate":
            checks = harness.validate_suite(spec)
            for c in checks:
                print(c.line())
            ok = all(c.passed for c in checks)
            print("ALL PASS" if ok else "SOME CHECKS FAILED")
            if out is not None:
                out.mkdir(parents=True, exist_ok=True)
                harness.write_json(out / "report.json", dict(config=spec, checks=[vars(c) for c in checks]))
            return 0 if ok else 1
        if args.command == "run":
            rep = harness.cmd_run(spec, out or Path("nlch_out"))
            print(f"steps={rep['steps']} accepts={rep['accepts']} rejects={rep['rejects']} "
                  f"energy_ledger={rep['energy_ledger']:.3e} mass_drift={rep['mass_drift']:.3e}")
            return 0
        if args.command == "sweep-eps":
            eps = harness.parse_list(args.eps, harness.DEFAULT_EPS)
            _print_rows(harness.cmd_sweep_eps(spec, eps, out or Path("nlch_out")))
            return 0
        if args.command == "sweep-delta":
            deltas = harness.parse_list(args.delta, harness.DEFAULT_DELTA)
            _print_rows(harness.cmd_sweep_delta(spec, deltas, out or Path("nlch_out")))
            return 0
        if args.command == "consistency":
            eps = harness.parse_list(args.eps, harness.DEFAULT_EPS)
            _print_rows(harness.cmd_consistency(spec, eps, out))
            return 0
    except NLCHError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 1


if __name__ == "__main__":
    sys.exit(main())
