#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Commandline interface

Exit codes: 0 on success, 2 on invalid arguments or configurations, 1 on
runtime failures.
"""

import argparse
import logging
import sys

from . import InvalidArgumentError
from . import checkpoint as kckpt
from . import conf as kconf
from . import engine as kengine
from . import ext as kext
from . import gradcheck as kgradcheck
from . import log as klog
from . import plot as kplot
from . import render as krender
from . import util as kutil

#: Errors reported with the exit code 2
VALIDATION_ERRORS = (
    kconf.ConfigError,
    InvalidArgumentError,
    kckpt.CheckpointError,
    kext.ExtensionError,
    FileNotFoundError,
)

# %% Main


def get_parser():
    parser = argparse.ArgumentParser(
        prog="kdgan",
        description="knowledge distillation laboratory for data-limited GAN training",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )

    subparsers = parser.add_subparsers(help="sub-command help")

    add_parser_train(subparsers)
    add_parser_eval(subparsers)
    add_parser_check_grads(subparsers)
    add_parser_plot(subparsers)

    return parser


def main(argv=None):
    # Get the parser
    parser = get_parser()

    # Parse args
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    if not hasattr(args, "func"):
        parser.print_usage()
        return 2

    # Call subparser function
    klog.main_setup_logging(args)
    logger = logging.getLogger(__name__)
    try:
        return args.func(parser, args) or 0
    except VALIDATION_ERRORS as e:
        logger.error(str(e))
        return 2
    except Exception as e:
        logger.exception(f"Command failed: {e}")
        return 1


def get_config(args):
    overrides = kconf.parse_overrides(args.set)
    return kconf.load_config(args.config, overrides=overrides, preset=args.preset)


# %% Train


def add_parser_train(subparsers):
    # Setup argument parser
    parser_train = subparsers.add_parser(
        "train",
        help="train a GAN",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser_train.add_argument(
        "--config", help="experiment configuration file or bundled configuration name, like desk"
    )
    parser_train.add_argument("--resume", help="checkpoint to resume from")
    parser_train.add_argument("--preset", help="ablation preset", choices=list(kconf.PRESETS))
    parser_train.add_argument(
        "--seeds", help="run one experiment per master seed and summarize them", nargs="+", type=int
    )
    parser_train.add_argument(
        "--set",
        help="override a configuration key, like agkd.p=0.5",
        action="append",
        metavar="KEY=VALUE",
    )
    parser_train.add_argument("--run-dir", help="run directory, defaults to {output_root}/{run.name}")
    klog.add_logging_parser_arguments(parser_train)
    parser_train.set_defaults(func=main_train)

    return parser_train


def main_train(parser, args):
    cfg = get_config(args)
    logger = logging.getLogger(__name__)
    if args.seeds:
        if args.resume or args.run_dir:
            raise InvalidArgumentError("--seeds can't be combined with --resume or --run-dir")
        summary = kengine.run_seeds(cfg, args.seeds)
        print(krender.filter_markdown_table(summary))
        return 0
    run_dir = kengine.run_experiment(cfg, resume=args.resume, run_dir=args.run_dir)
    logger.info("Successfully trained!")
    print(run_dir)
    return 0


# %% Eval


def add_parser_eval(subparsers):
    # Setup argument parser
    parser_eval = subparsers.add_parser(
        "eval",
        help="evaluate a checkpoint",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser_eval.add_argument("--ckpt", help="checkpoint file", required=True)
    parser_eval.add_argument(
        "--data", help="configuration file whose [data] section replaces the one of the checkpoint"
    )
    klog.add_logging_parser_arguments(parser_eval)
    parser_eval.set_defaults(func=main_eval)

    return parser_eval


def main_eval(parser, args):
    values = kengine.evaluate_checkpoint(args.ckpt, data_cfg=args.data)
    records = [{"metric": name, "value": value} for name, value in values.items()]
    print(krender.filter_markdown_table(records))
    return 0


# %% Gradient checks


def add_parser_check_grads(subparsers):
    # Setup argument parser
    parser_check = subparsers.add_parser(
        "check-grads",
        help="compare analytic gradients to finite differences",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser_check.add_argument("--module", help="suite to run", choices=kgradcheck.SUITES, default="all")
    parser_check.add_argument("--seed", help="seed of the random inputs", type=int, default=0)
    parser_check.add_argument("-v", "--verbose", help="show the error of each input", action="store_true")
    klog.add_logging_parser_arguments(parser_check, default_level="warning")
    parser_check.set_defaults(func=main_check_grads)

    return parser_check


def main_check_grads(parser, args):
    report = kgradcheck.run_suite(args.module, seed=args.seed)
    tol = kgradcheck.suite_tolerance(args.module)
    if args.verbose:
        records = [{"input": name, "rel_error": err} for name, err in report.per_parameter_errors.items()]
        print(krender.filter_markdown_table(records))
    passed = report.passed(tol)
    status = (
        f"module={args.module} max_rel_error={report.max_rel_error:.3g} "
        f"max_abs_error={report.max_abs_error:.3g} tol={tol:g} passed={passed}"
    )
    colors = {".*passed=True": "green", ".*passed=False": "bold_red"}
    print(kutil.colorize(status, colors, colorize=not args.log_no_color))
    return 0 if passed else 1


# %% Plot


def add_parser_plot(subparsers):
    # Setup argument parser
    parser_plot = subparsers.add_parser(
        "plot",
        help="plot the loss and metric curves of a run",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser_plot.add_argument("--run", help="run directory", required=True)
    parser_plot.add_argument("--metric", help="metric to plot, all by default", action="append")
    parser_plot.add_argument("--output", help="figure file, defaults to {run}/curves.png")
    klog.add_logging_parser_arguments(parser_plot)
    parser_plot.set_defaults(func=main_plot)

    return parser_plot


def main_plot(parser, args):
    print(kplot.plot_run(args.run, names=args.metric, output=args.output))
    return 0


if __name__ == "__main__":
    sys.exit(main())
