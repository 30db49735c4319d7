"""Command line: ``run`` one experiment or ``verify`` the acceptance suites."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import PredSeqError
from .harness.experiment import ALGORITHMS, ExperimentConfig, read_config_file, run_experiment
from .harness.export import FORMATS, export
from .suites import SUITES, run_all

RUN_FLAGS = ("algo", "geometry", "dim", "horizon", "predictor", "models", "sequence", "sigma",
             "noise", "channel", "eta", "seed", "replicas", "hedge_rate", "out", "format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="predseq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and export the ledger")
    run.add_argument("--config", help="key=value file; flags given on the command line win")
    run.add_argument("--algo", choices=ALGORITHMS)
    run.add_argument("--geometry", choices=("l1", "l2", "simplex"))
    run.add_argument("--dim", type=int)
    run.add_argument("--horizon", type=int)
    run.add_argument("--predictor", help="hint predictor spec, e.g. last, mean, ewma:0.9, oracle")
    run.add_argument("--models", help="comma separated predictor specs for the learnM algorithms")
    run.add_argument("--sequence", help="noisy[:pred], iid[:mu[:spread]], random or phased:k")
    run.add_argument("--sigma", help="const:x or file:path")
    run.add_argument("--noise", choices=("sphere", "ball", "sign"))
    run.add_argument("--channel", help="full, bandit or delayed:k")
    run.add_argument("--eta", help="a number, auto or doubling:A")
    run.add_argument("--seed", type=int)
    run.add_argument("--replicas", type=int)
    run.add_argument("--hedge-rate", dest="hedge_rate", type=float)
    run.add_argument("--out", help="output directory (nothing is written when omitted)")
    run.add_argument("--format", choices=FORMATS)

    verify = sub.add_parser("verify", help="run acceptance suites; exit code 1 on any failure")
    verify.add_argument("--suite", default="all", help="comma separated names or 'all': "
                        + ", ".join(SUITES))
    verify.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in RUN_FLAGS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    return ExperimentConfig.from_mapping(values)


def cmd_run(args, out=None) -> int:
    out = out or sys.stdout
    config = config_from_args(args)
    result = run_experiment(config)
    summary = result.summary()
    brief = {k: summary[k] for k in ("rounds", "replicas", "mean_regret", "regret_se")}
    brief["bounds"] = {k: v["passed"] for k, v in summary["bounds"].items()}
    if config.out:
        brief["written"] = [str(p) for p in export(result, config.out, config.format)]
    print(json.dumps(brief, indent=2), file=out)
    return 0


def cmd_verify(args, out=None) -> int:
    out = out or sys.stdout
    names = list(SUITES) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        print(f"unknown suite(s): {', '.join(unknown)}", file=sys.stderr)
        return 2
    failed = 0
    for res in run_all(names, args.seed):
        print(res.line(), file=out, flush=True)
        failed += not res.passed
    print(f"{len(names) - failed}/{len(names)} suites passed", file=out)
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_verify(args)
    except PredSeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
