"""Command-line front end.

Four commands: ``locking-demo`` (build the counterexample and run its
attack), ``criteria`` (evaluate every criterion on an ensemble file),
``bounds-sweep`` (randomized inequality campaigns), ``extremal`` (spike
constructions).  All randomness flows through the single --seed flag and
every report embeds tool version, command line and seed, so identical
invocations produce byte-identical JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import __version__, bounds, distributions, ensembles, locking, operators
from .errors import Error

FORMATS = ("json", "csv", "text")


def _envelope(command: str, argv: list[str], seed: int) -> dict:
    return {
        "tool": "qseclab",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "seed": seed,
    }


def _clean(value):
    """Make a report JSON-ready: plain floats, ints, strings, dicts, lists."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return float(value)
    if hasattr(value, "item"):
        return value.item()
    return str(value)


def _dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _dump_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            value = obj[key]
            if isinstance(value, (dict, list)):
                lines.append(f"{pad}{key}:")
                lines.append(_dump_text(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {value}")
    elif isinstance(obj, list):
        for value in obj:
            if isinstance(value, (dict, list)):
                lines.append(_dump_text(value, indent + 1))
            else:
                lines.append(f"{pad}- {value}")
    else:
        lines.append(f"{pad}{obj}")
    return "\n".join(line for line in lines if line)


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {number}")
    return number


def _add_common(parser, formats=FORMATS):
    parser.add_argument("--seed", type=int, default=0, help="seed recorded in the report")
    parser.add_argument("--format", choices=formats, default="json")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")


def cmd_locking_demo(args, argv) -> int:
    le = locking.build_locking_ensemble(args.variant)
    report = locking.locking_report(le, trials=args.trials, seed=args.seed)
    if args.emit_ensemble:
        ensembles.save_ensemble(le.ensemble, args.emit_ensemble)
    payload = _envelope("locking-demo", argv, args.seed)
    payload.update(report.to_dict())
    payload["trials"] = args.trials
    # hard invariants of the demo; a miss is an internal failure, not a report
    per_key = payload["ideal_reference_per_key"]
    pattern_keys = ("11", "10", "01") if args.variant == "as_printed" else tuple(per_key)
    for key in pattern_keys:
        if abs(per_key[key] - 0.5) > 1e-10:
            raise Error(f"ideal reference for key {key} is {per_key[key]}, not 1/2")
    if not payload["criteria"]["d"] < 1.0 - 1e-6:
        raise Error("trace criterion unexpectedly reached 1")
    text = _dump_json(payload) if args.format == "json" else _dump_text(_clean(payload)) + "\n"
    _emit(text, args.out)
    return 0


def cmd_criteria(args, argv) -> int:
    e = ensembles.load_ensemble(args.ensemble)
    record = ensembles.criteria_record(e)
    payload = _envelope("criteria", argv, args.seed)
    payload["criteria"] = record.to_dict()
    payload["n_bits"] = e.n_bits
    payload["state_dim"] = e.state_dim
    payload["forms_agreement_residual"] = (
        None if record.d_joint is None else abs(record.d_joint - record.d)
    )
    ideal = ensembles.conditional_distances(
        e, reference=operators.maximally_mixed(e.state_dim)
    )
    payload["ideal_reference_mean"] = float(e.prior @ ideal)
    text = _dump_json(payload) if args.format == "json" else _dump_text(_clean(payload)) + "\n"
    _emit(text, args.out)
    return 0


def cmd_bounds_sweep(args, argv) -> int:
    kinds = tuple(args.kinds.split(",")) if args.kinds else bounds.RECIPE_KINDS
    recipes = bounds.default_recipes(
        args.count, seed=args.seed, max_n=args.max_n, max_dim=args.max_dim, kinds=kinds
    )
    checks = tuple(args.checks.split(",")) if args.checks else bounds.DEFAULT_CHECKS
    result = bounds.run_campaign(
        recipes, checks=checks, seed=args.seed, accessible_restarts=args.restarts
    )
    rows = [report.to_flat_dict() for report in result.reports]
    summary = {
        "summary": result.summary,
        "hard_failures": result.hard_failures,
        **_envelope("bounds-sweep", argv, args.seed),
    }
    if args.format == "json":
        lines = [json.dumps(_clean(row), sort_keys=True) for row in rows]
        lines.append(json.dumps(_clean(summary), sort_keys=True))
        _emit("\n".join(lines) + "\n", args.out)
    elif args.format == "csv":
        columns: list[str] = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow(_clean(row))
        _emit(buffer.getvalue(), args.out)
    else:
        lines = []
        for row in rows:
            cells = [f"{k}={row[k]}" for k in sorted(row)]
            lines.append("  ".join(cells))
        lines.append("summary:")
        lines.append(_dump_text(_clean(result.summary), 1))
        lines.append(f"hard_failures: {result.hard_failures}")
        _emit("\n".join(lines) + "\n", args.out)
    return 1 if result.hard_failures else 0


def cmd_extremal(args, argv) -> int:
    if args.kind == "mutual_information":
        if args.l_prime is None:
            raise Error("--l-prime is required for the mutual_information kind")
        construction = distributions.spike_for_mutual_information(args.n, args.l_prime)
    else:
        if args.l is None:
            raise Error("--l is required for the variational_distance kind")
        construction = distributions.spike_for_variational_distance(args.n, args.l)
    payload = _envelope("extremal", argv, args.seed)
    payload.update(
        {
            "n": construction.n,
            "constraint_kind": construction.constraint_kind,
            "constraint_exponent": construction.constraint_exponent,
            "resulting_p1": construction.resulting_p1,
            "resulting_p1_exponent": (
                -math.log2(construction.resulting_p1) if construction.resulting_p1 > 0 else None
            ),
            "reference_p1": construction.reference_p1,
            "reference_exponent": construction.reference_exponent,
            "residual": construction.residual,
            "discrepancy": construction.discrepancy,
            "note": construction.note,
            "materialized": construction.resulting_distribution is not None,
            "resulting_distribution": (
                None
                if construction.resulting_distribution is None
                else [float(x) for x in construction.resulting_distribution]
            ),
        }
    )
    text = _dump_json(payload) if args.format == "json" else _dump_text(_clean(payload)) + "\n"
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qseclab",
        description="Key-secrecy criteria laboratory for classical-quantum ensembles.",
    )
    parser.add_argument("--version", action="version", version=f"qseclab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("locking-demo", help="build the locking counterexample and attack it")
    p.add_argument("--variant", choices=locking.VARIANTS, default="symmetric_corrected")
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--emit-ensemble", default=None, dest="emit_ensemble",
                   help="also write the ensemble file for round-tripping")
    _add_common(p, formats=("json", "text"))
    p.set_defaults(func=cmd_locking_demo)

    p = sub.add_parser("criteria", help="evaluate criteria on an ensemble file")
    p.add_argument("ensemble", help="path to a JSON ensemble record")
    _add_common(p, formats=("json", "text"))
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("bounds-sweep", help="run randomized inequality campaigns")
    p.add_argument("--count", type=_positive_int, default=100)
    p.add_argument("--kinds", default=None, help="comma list of recipe kinds")
    p.add_argument("--checks", default=None, help="comma list of checks")
    p.add_argument("--max-n", type=_positive_int, default=3, dest="max_n")
    p.add_argument("--max-dim", type=_positive_int, default=8, dest="max_dim")
    p.add_argument("--restarts", type=int, default=0,
                   help="search restarts for the accessible-information checks")
    _add_common(p)
    p.set_defaults(func=cmd_bounds_sweep)

    p = sub.add_parser("extremal", help="spike constructions under a constraint")
    p.add_argument("--kind", choices=("mutual_information", "variational_distance"),
                   required=True)
    p.add_argument("--n", type=_positive_int, required=True, help="key length in bits")
    p.add_argument("--l-prime", type=float, default=None, dest="l_prime",
                   help="entropy-deficit exponent (mutual_information kind)")
    p.add_argument("--l", type=float, default=None,
                   help="distance exponent (variational_distance kind)")
    _add_common(p, formats=("json", "text"))
    p.set_defaults(func=cmd_extremal)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except Error as exc:
        print(f"qseclab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
