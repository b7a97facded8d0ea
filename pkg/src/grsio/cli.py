"""Command-line entry point: `grsio <subcommand> --config path [...]`.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 configuration
error (unreadable config, invalid values, unknown subcommand).
"""

from __future__ import annotations

import argparse
import sys

from .harness import COMMANDS, ConfigError, ExperimentConfig, write_report


def _parse_n_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --N-list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grsio", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file; flags override file values")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory for report.json and CSVs")
        sp.add_argument("--n", type=int, default=None, choices=(2, 3))
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--N-list", dest="n_list", default=None, help="comma-separated, e.g. 8,16,32")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig().validate()
        cfg = cfg.override(
            seed=args.seed,
            out=args.out,
            n=args.n,
            alpha=args.alpha,
            N_list=_parse_n_list(args.n_list) if args.n_list else None,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = COMMANDS[args.command](cfg)
    for line in report.summary_lines():
        print(line)
    if cfg.out:
        write_report(report, cfg.out)
        print(f"report written to {cfg.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
