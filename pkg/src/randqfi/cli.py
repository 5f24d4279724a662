"""``randqfi`` command line.

Exit codes: 0 success, 2 config error, 3 numerical failure (non-convergence
or failed self-audit), 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from randqfi import __version__
from randqfi.config import ConfigError, echo, load_config
from randqfi.experiments import NumericalFailure, rows_to_csv, run, summary_json
from randqfi.pipeline import FitError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

SUBCOMMANDS = {
    "ramsey-time": "ramsey_qfi_vs_time",
    "ramsey-phi": "ramsey_qfi_vs_phi",
    "ghz-sweep": "ghz_sweep",
    "scaling": "manybody_scaling",
    "time-evolution": "manybody_time_evolution",
    "estimate-from-records": "estimate_from_records",
}

log = logging.getLogger("randqfi")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="flat key = value scenario file")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--quiet", action="store_true", help="do not echo the resolved config")
    parser = argparse.ArgumentParser(prog="randqfi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.json")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    scenario = SUBCOMMANDS[args.command]
    overrides = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_CONFIG
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_path"] = args.out
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if cfg["scenario"] != scenario:
        print(
            f"config error: {args.config}: scenario {cfg['scenario']!r} does not match subcommand {args.command!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    if not args.quiet:
        sys.stderr.write("# resolved config\n" + echo(cfg))
    try:
        result = run(cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFailure, FitError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out = cfg["output_path"]
    try:
        if args.format == "json":
            text = summary_json(result, include_rows=True)
            if out:
                Path(out).write_text(text)
            else:
                sys.stdout.write(text)
        else:
            text = rows_to_csv(result.rows)
            if out:
                Path(out).write_text(text)
                _summary_path(Path(out)).write_text(summary_json(result))
            else:
                sys.stdout.write(text)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    flagged = [r for r in result.rows if r.flag]
    if flagged:
        log.warning("%d rows flagged: %s", len(flagged), sorted({r.flag for r in flagged}))
    if not result.audit_passed:
        a = result.audit
        print(
            f"self-audit failed: {a['within']}/{a['checked']} rows within {a['sigmas']:g} sigma",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
