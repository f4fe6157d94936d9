# Copyright 2024, The SlackBox developers.
import argparse
from pathlib import Path
import sys

import slackbox
from slackbox.constants import DEFAULT_IMAGE_SIZE, DEFAULT_SPLIT_SIZES, MIN_IMAGE_SIZE
from slackbox.errors import ConfigurationError, MalformedFileError
from slackbox.experiments import GRIDS, run_grid
from slackbox.io.manifest import DatasetManifest, read_box_rows, write_box_rows
from slackbox.noise import NoiseParams, perturb_dataset
from slackbox.report import (
    CHECKPOINT_FILE,
    aggregate_runs,
    summarize,
    update_run_eval,
    write_eval,
    write_run,
)
from slackbox.synthetic import generate_split
from slackbox.trainer import TrainConfig, evaluate, load_dataset, train

"""
Module to make module executable from CLI.

Exit codes: 0 on success, 2 when the input or configuration is invalid, 1 when the
run itself fails.

.. note::
    `__name__ == "__main__"` is unnecessary because this file is not
    run on import.
"""

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_VALIDATION_ERROR = 2


def define_args(args=None):
    """
    Sets and parses the command line arguments.

    :returns: the arguments that were parsed
    :rtype: argparse.NameSpace
    """
    parser = argparse.ArgumentParser(
        prog="slackbox",
        description="Box-supervised segmentation with tightness-free boxes.",
    )
    parser.add_argument(
        "-v",
        "--version",
        action="store_true",
        help="Print the version number",
    )
    parser.add_argument(
        "--progress", action="store_true", help="Show progress bars on stderr."
    )
    commands = parser.add_subparsers(dest="command", metavar="command")

    synth = commands.add_parser("synth", help="Generate the synthetic dataset.")
    synth.add_argument("out", type=Path, help="Directory for the train and test splits.")
    synth.add_argument("--train", type=int, default=DEFAULT_SPLIT_SIZES["train"])
    synth.add_argument("--test", type=int, default=DEFAULT_SPLIT_SIZES["test"])
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--height", type=int, default=DEFAULT_IMAGE_SIZE[0])
    synth.add_argument("--width", type=int, default=DEFAULT_IMAGE_SIZE[1])
    synth.add_argument("--sigma", type=float, default=0.2, help="Box noise level.")

    perturb = commands.add_parser("perturb", help="Draw noisy boxes from clean ones.")
    perturb.add_argument(
        "source",
        type=Path,
        nargs="?",
        help="A dataset directory (its clean boxes are used) or a box label file.",
    )
    perturb.add_argument(
        "out", type=Path, nargs="?", help="The box label file to write."
    )
    perturb.add_argument("--in", dest="in_path", type=Path, help="Same as source.")
    perturb.add_argument("--out", dest="out_path", type=Path, help="Same as out.")
    perturb.add_argument("--sigma", type=float, default=0.2)
    perturb.add_argument("--seed", type=int, default=0)

    train_cmd = commands.add_parser("train", help="Train a model.")
    train_cmd.add_argument("train_dir", type=Path, help="The training split.")
    train_cmd.add_argument("out", type=Path, help="The run directory to write.")
    _add_config_args(train_cmd)
    train_cmd.add_argument(
        "--labels", type=Path, help="A box label file replacing the noisy boxes."
    )
    train_cmd.add_argument(
        "--test-dir", type=Path, help="Evaluate on this split after training."
    )

    eval_cmd = commands.add_parser("eval", help="Evaluate a checkpoint.")
    eval_cmd.add_argument(
        "checkpoint", type=Path, help="A checkpoint, or a run directory holding one."
    )
    eval_cmd.add_argument("test_dir", type=Path, help="The test split.")
    eval_cmd.add_argument("--out", type=Path, help="Where to write eval.csv.")
    eval_cmd.add_argument("--threshold", type=float, default=0.5)
    eval_cmd.add_argument("--hd-percentile", type=float, default=None)

    report = commands.add_parser("report", help="Aggregate run directories.")
    report.add_argument("runs", type=Path, nargs="+", help="Run directories.")
    report.add_argument("--out", type=Path, required=True)

    grid = commands.add_parser("grid", help="Run a named group of configurations.")
    grid.add_argument("name", choices=sorted(GRIDS))
    grid.add_argument("train_dir", type=Path)
    grid.add_argument("test_dir", type=Path)
    grid.add_argument("out", type=Path)
    grid.add_argument("--seeds", type=int, nargs="+", default=[0])
    _add_config_args(grid)

    args = parser.parse_args(args)
    return args


def _add_config_args(parser):
    parser.add_argument(
        "--config", type=Path, help="A JSON file with any TrainConfig field."
    )
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--mode", choices=["LB", "EXCLUSION", "MC"])
    parser.add_argument("--seed", type=int)
    parser.add_argument(
        "--lc",
        dest="lc_enabled",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Enable or disable label correction.",
    )


def build_config(args):
    """
    The configuration file with the command line overrides applied.

    :rtype: TrainConfig
    """
    config = TrainConfig.from_json_file(args.config) if args.config else TrainConfig()
    overrides = {
        key: getattr(args, key)
        for key in ("epochs", "mode", "seed", "lc_enabled")
        if getattr(args, key) is not None
    }
    return config.update(**overrides).validate()


def _noise_params(sigma, seed):
    try:
        return NoiseParams(sigma=sigma, seed=seed)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(str(e)) from e


def _either(positional, option, name):
    if positional is not None and option is not None and positional != option:
        raise ConfigurationError(f"{name} is given twice: {positional} and {option}.")
    value = option if option is not None else positional
    if value is None:
        raise ConfigurationError(f"{name} is required.")
    return value


def synth(args):
    """
    Writes ``out/train`` and ``out/test``. The test split is generated from ``seed + 1``.
    """
    for name in ("train", "test"):
        count = getattr(args, name)
        if count < 1:
            raise ConfigurationError(f"--{name} must be at least 1. {count} given.")
    if args.height < MIN_IMAGE_SIZE or args.width < MIN_IMAGE_SIZE:
        raise ConfigurationError(
            f"Images must be at least {MIN_IMAGE_SIZE}x{MIN_IMAGE_SIZE}. "
            f"{args.height}x{args.width} given."
        )
    for offset in (0, 1):
        _noise_params(args.sigma, args.seed + offset)
    for offset, (split, count) in enumerate((("train", args.train), ("test", args.test))):
        manifest = generate_split(
            args.out / split,
            count,
            args.seed + offset,
            args.height,
            args.width,
            args.sigma,
            prefix=split,
            progress=args.progress,
        )
        print(f"{split}: {len(manifest)} images in {manifest.root}")


def perturb(args):
    """
    Accepts the files as ``source out`` or as ``--in source --out out``.
    """
    source = _either(args.source, args.in_path, "The input")
    out = _either(args.out, args.out_path, "The output")
    params = _noise_params(args.sigma, args.seed)
    if source.is_dir():
        manifest = DatasetManifest.read(source)
        rows = manifest.box_rows(noisy=False)
        sizes = manifest.image_sizes()
    else:
        rows, sizes = read_box_rows(source)
    noisy = perturb_dataset(rows, params, sizes)
    write_box_rows(out, noisy, sizes)
    print(f"{len(noisy)} images written to {out}")


def train_command(args):
    config = build_config(args)
    labels = read_box_rows(args.labels)[0] if args.labels else None
    report = train(config, DatasetManifest.read(args.train_dir), labels, args.progress)
    if args.test_dir:
        report.eval_records = evaluate(
            report.params,
            load_dataset(args.test_dir),
            config.threshold,
            config.hd_percentile,
        )
    write_run(report, args.out)
    print(
        f"trained {config.epochs} epochs, {len(report.events)} corrections, "
        f"final loss {report.epochs[-1].losses.total:.6f}"
    )
    if report.eval_records:
        _print_summary(summarize(report.eval_records))


def eval_command(args):
    checkpoint = args.checkpoint
    run_dir = None
    if checkpoint.is_dir():
        run_dir = checkpoint
        checkpoint = checkpoint / CHECKPOINT_FILE
    if not 0.0 < args.threshold < 1.0:
        raise ConfigurationError(f"threshold must be in (0, 1). {args.threshold} given.")
    if args.hd_percentile is not None and not 0.0 < args.hd_percentile <= 100.0:
        raise ConfigurationError(
            f"hd_percentile must be in (0, 100]. {args.hd_percentile} given."
        )
    records = evaluate(
        checkpoint, load_dataset(args.test_dir), args.threshold, args.hd_percentile
    )
    if args.out:
        write_eval(records, args.out)
    if run_dir is not None:
        update_run_eval(run_dir, records)
    _print_summary(summarize(records))


def report_command(args):
    ablation, curves = aggregate_runs(args.runs, args.out)
    print(f"{len(ablation)} ablation rows and {len(curves)} curve points in {args.out}")


def grid_command(args):
    base = build_config(args)
    configs = GRIDS[args.name](base)
    run_dirs = run_grid(
        configs, args.train_dir, args.test_dir, args.out, args.seeds, args.progress
    )
    aggregate_runs(run_dirs, args.out)
    print(f"{len(run_dirs)} runs written to {args.out}")


def _print_summary(summary):
    print(
        f"mean dice {summary['mean_dice']:.4f} (median {summary['median_dice']:.4f}), "
        f"mean iou {summary['mean_iou']:.4f}, "
        f"mean hd {summary['mean_hd']:.3f} ({summary['n_missing_hd']} undefined)"
    )


COMMANDS = {
    "synth": synth,
    "perturb": perturb,
    "train": train_command,
    "eval": eval_command,
    "report": report_command,
    "grid": grid_command,
}


def run(args):
    """
    Runs the parsed command and maps failures to exit codes.

    :param args: the parsed arguments.
    :type args: argparse.Namespace
    :returns: the exit code.
    :rtype: int
    """
    if args.version:
        print(slackbox.__version__)
        return EXIT_OK
    if args.command is None:
        print("No command given; see slackbox --help.", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    try:
        COMMANDS[args.command](args)
    except (ConfigurationError, MalformedFileError, FileNotFoundError) as e:
        print(f"slackbox: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    except Exception as e:
        print(f"slackbox: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    return EXIT_OK


def main(args=None):  # pragma: no cover
    """
    The main function
    """
    return run(define_args(args))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
