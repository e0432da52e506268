"""Batch front end: ``run``, ``validate`` and ``spectrum`` subcommands.

Exit status is 0 when every requested check passes, 2 when a check fails and
1 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config
from .experiment import ExperimentError, build_table, run_collapse_experiment
from .geometry import GeometryError
from .output import emit_results, spectrum_csv
from .sectors import GridError

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="s1dirac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write result tables")
    run.add_argument("config")
    run.add_argument("--out", required=True, help="output directory")
    val = sub.add_parser("validate", help="validate a config and echo it with defaults")
    val.add_argument("config")
    spec = sub.add_parser("spectrum", help="compute the spectrum table only")
    spec.add_argument("config")
    spec.add_argument("--out", help="write spectrum.csv here instead of stdout")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(cfg.to_json())
            return EXIT_OK
        if args.command == "spectrum":
            text = spectrum_csv(build_table(cfg))
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        result = run_collapse_experiment(cfg)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (ExperimentError, GeometryError, GridError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    emit_results(result.table, result.reports, args.out, result.summary)
    for rep in result.reports:
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {rep.check}: worst margin {rep.worst_margin:.6g}, n0={rep.n0}")
    return EXIT_OK if result.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
