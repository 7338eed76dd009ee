"""Command-line interface for running, sweeping, and checking scenarios.

Exit codes: 0 on success, 2 for configuration problems (the message names
the offending file location or config key), 3 when the integrator fails
(the message reports how far it got relative to the horizon).
"""

from __future__ import annotations

import argparse
import sys

from .errors import EntbathError, NumericalFailureError
from .scenarios import (
    SWEEP_AXES,
    SWEEP_SUMMARY_NAME,
    ConfigError,
    check_scenario,
    load_config,
    run_scenario,
    sweep_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entbath",
        description="Simulate bath-mediated entanglement of two uncoupled resonators.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="integrate a scenario and write CSV + manifest")
    run.add_argument("--config", required=True, help="scenario config (JSON) or manifest")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument(
        "--truncation", type=int, default=None, help="Fock truncation (overrides config)"
    )
    run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry by dotted path (repeatable)",
    )

    sweep = commands.add_parser("sweep", help="run one curve per value of a parameter")
    sweep.add_argument("--config", required=True, help="scenario config (JSON) or manifest")
    sweep.add_argument(
        "--axis",
        required=True,
        help=f"parameter to vary: one of {', '.join(sorted(set(SWEEP_AXES.values())))}",
    )
    sweep.add_argument(
        "--values",
        required=True,
        nargs="+",
        help="axis values (space- or comma-separated); temperatures in kelvin",
    )
    sweep.add_argument("--out", default=None, help="output directory (overrides config)")
    sweep.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry by dotted path (repeatable)",
    )

    check = commands.add_parser(
        "check", help="validate a config and print the generator term audit"
    )
    check.add_argument("--config", required=True, help="scenario config (JSON) or manifest")
    return parser


def _parse_values(tokens: list[str]) -> list[float]:
    values = []
    for token in tokens:
        for piece in token.split(","):
            piece = piece.strip()
            if not piece:
                continue
            try:
                values.append(float(piece))
            except ValueError as exc:
                raise ConfigError("", f"cannot parse sweep value {piece!r}") from exc
    if not values:
        raise ConfigError("", "no sweep values given")
    return values


def _cmd_run(args) -> int:
    config = load_config(args.config, overrides=tuple(args.overrides))
    result = run_scenario(config, out_dir=args.out, truncation=args.truncation)
    for label, filename in sorted(result.manifest["outputs"].items()):
        print(f"wrote {result.output_dir / filename}  [{label}]")
    print(f"wrote {result.output_dir / 'manifest.json'}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = load_config(args.config, overrides=tuple(args.overrides))
    values = _parse_values(args.values)
    result = sweep_scenario(config, args.axis, values, out_dir=args.out)
    for row in result.rows:
        print(
            f"{row['axis']}={row['value']:g}: peak_EN={row['peak_EN']:.6g}"
            f" late_EN={row['late_EN']:.6g} margin={row['dominance_margin']:.6g}"
        )
    print(f"wrote {result.output_dir / SWEEP_SUMMARY_NAME}")
    return EXIT_OK


def _cmd_check(args) -> int:
    config = load_config(args.config)
    report = check_scenario(config)
    print(f"scenario: {report['scenario']}  ({report['record_count']} record times)")
    for label, entry in report["curves"].items():
        print(f"curve {label}: trace error {entry['initial_trace_error']:.3e}")
        for term in entry["terms"]:
            bath = term["bath"] or "-"
            freq = "-" if term["frequency"] is None else f"{term['frequency']:+.6g}"
            print(
                f"  term {term['label']:<12} bath={bath:<7} freq={freq:<12}"
                f" alpha_order={term['alpha_order']} rate={term['rate']:.6e}"
            )
        rates = entry.get("effective_rates")
        if rates:
            dom = rates["dominance"]
            print(
                f"  cooling_dominance={dom['dominant']}"
                f" margin={dom['margin']:.6g} pair_ratio={dom['pair_ratio']:.6g}"
            )
    for message in report["warnings"]:
        print(f"warning: {message}")
    print("ok")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "check": _cmd_check}
    try:
        return handlers[args.command](args)
    except NumericalFailureError as exc:
        reached = getattr(exc, "t_reached", None)
        where = f" (reached t={reached:g})" if reached is not None else ""
        print(f"error: integration failed{where}: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except EntbathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
