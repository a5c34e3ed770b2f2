"""Command-line entry point.

Every subcommand reads a YAML config, validates it fully before touching
the output directory, and exits 0 on success, 2 on a config problem, and
3 on a numeric failure inside a fit.
"""

import argparse
import sys

import numpy as np

from .errors import CapacityError, NumericError
from .runner import ConfigError, load_config, run_cv, run_dictlearn, \
    run_evaluate, run_fit, run_generate_toy, run_predict, run_robustness

COMMANDS = {
    "generate-toy": run_generate_toy,
    "fit": run_fit,
    "predict": run_predict,
    "evaluate": run_evaluate,
    "cv": run_cv,
    "robustness": run_robustness,
    "dictlearn": run_dictlearn,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kplearn",
        description="Functional-output regression via dictionary "
                    "projections of an operator-valued kernel model.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in COMMANDS.items():
        cmd = sub.add_parser(name, help=runner.__doc__.splitlines()[0])
        cmd.add_argument("--config", required=True, help="YAML config path")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        if name == "robustness":
            cmd.add_argument("--threads", type=int, default=1,
                             help="worker threads for the sweep")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except (ConfigError, FileNotFoundError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except Exception as exc:  # unreadable YAML and similar
        print("config error: %s" % exc, file=sys.stderr)
        return 2

    runner = COMMANDS[args.command]
    kwargs = {"seed": args.seed}
    if args.command == "robustness":
        kwargs["threads"] = args.threads
    try:
        runner(config, args.out, **kwargs)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (NumericError, CapacityError, np.linalg.LinAlgError) as exc:
        print("numeric failure: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
