"""Command-line front end.

Subcommands: ``verify`` runs a scenario file's pipelines and prints a
report, ``list-scenarios`` lists the built-in corpus, ``schema`` prints
the scenario JSON schema.  Exit codes: 0 all checks pass, 1 check
failure, 2 parse/schema error, 3 a verified theorem was numerically
falsified.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys

import jsonschema

from .errors import EngineError, ValidationError
from .pipelines import run_scenario
from .report import emit_report
from .scenario import SCENARIO_SCHEMA, builtin_scenario_names, builtin_scenario_path

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_PARSE_ERROR = 2
EXIT_FALSIFICATION = 3


def _parse_tolerances(items: list[str]) -> dict[str, float]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"tolerance override must be key=value, got {item!r}")
        key, _, value = item.partition("=")
        if key not in ("rel", "abs", "singular", "track"):
            raise ValueError(f"unknown tolerance key {key!r}")
        out[key] = float(value)
    return out


def _resolve(target: str) -> str:
    """A scenario argument is a file path or a built-in scenario name."""
    if os.path.exists(target):
        return target
    if target in builtin_scenario_names():
        return str(builtin_scenario_path(target))
    return target  # let the loader produce the file error


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hfe",
        description="Verification engine for metalinear frame-bundle "
        "constructions over finite nerves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a scenario's verification pipelines")
    v.add_argument("scenarios", nargs="+",
                   help="scenario file path or built-in scenario name")
    v.add_argument("--pipeline", default=None,
                   help="comma-separated pipeline filter")
    v.add_argument("--tolerance", action="append", default=[],
                   metavar="KEY=VALUE",
                   help="tolerance override (rel, abs, singular, track)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--report", choices=("json", "text"), default="text")
    v.add_argument("--jobs", type=int, default=1,
                   help="parallel scenario executions")

    sub.add_parser("list-scenarios", help="list the built-in scenario corpus")
    sub.add_parser("schema", help="print the scenario JSON schema")
    return parser


def _verify(args) -> int:
    try:
        tolerances = _parse_tolerances(args.tolerance)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    env_rel = os.environ.get("HFE_TOL_REL")
    if env_rel is not None and "rel" not in tolerances:
        try:
            tolerances["rel"] = float(env_rel)
        except ValueError:
            print(f"error: HFE_TOL_REL={env_rel!r} is not a number",
                  file=sys.stderr)
            return EXIT_PARSE_ERROR
    pipelines = args.pipeline.split(",") if args.pipeline else None
    targets = [_resolve(t) for t in args.scenarios]

    def run_one(path):
        return run_scenario(path, pipelines=pipelines,
                            tolerances=tolerances, seed=args.seed)

    reports = []
    try:
        if args.jobs > 1 and len(targets) > 1:
            with concurrent.futures.ThreadPoolExecutor(args.jobs) as pool:
                reports = list(pool.map(run_one, targets))
        else:
            reports = [run_one(t) for t in targets]
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        print(f"error: scenario schema violation at {loc}: {exc.message}",
              file=sys.stderr)
        return EXIT_PARSE_ERROR
    except (ValidationError, EngineError) as exc:
        print(f"error: invalid scenario data: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR

    for report in reports:
        print(emit_report(report, args.report))
    if any(r.falsified for r in reports):
        return EXIT_FALSIFICATION
    if not all(r.passed for r in reports):
        return EXIT_CHECK_FAILURE
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in builtin_scenario_names():
            print(name)
        return EXIT_OK
    if args.command == "schema":
        print(json.dumps(SCENARIO_SCHEMA, indent=2, sort_keys=True))
        return EXIT_OK
    return _verify(args)


if __name__ == "__main__":
    sys.exit(main())
