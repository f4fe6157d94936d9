"""
Desk-scale ablation on the synthetic benchmark.

Checks the ordering of the component grid, the shape of the label accuracy curve
under correction, and the noise stability of the full method. Every run must finish
within FAIL_THRESHOLD seconds.

Run from the repository root: ``python benchmark/benchmark_ablation.py [out_dir]``.
Per-seed results go to ``benchmark.json`` in the output directory.
"""
import json
from pathlib import Path
import sys
import tempfile
import time

import numpy as np

from slackbox.constants import DEFAULT_IMAGE_SIZE, DEFAULT_SPLIT_SIZES
from slackbox.experiments import component_grid, derive, relabel
from slackbox.report import aggregate_runs, summarize, write_run
from slackbox.synthetic import generate_split
from slackbox.trainer import TrainConfig, evaluate, load_dataset, train

FAIL_THRESHOLD = 600
SEEDS = (0, 1, 2)
SIGMA = 0.2
SWEEP_SIGMAS = (0.1, 0.4)
# tolerated drop of label accuracy between two correction events
ACCURACY_SLACK = 0.01

BASE = TrainConfig(epochs=50, batch_size=16, learning_rate=1e-2, sigma=SIGMA)


def timed_run(config, train_samples, test_samples, out_dir):
    start = time.time()
    report = train(config, train_samples)
    report.eval_records = evaluate(
        report.params, test_samples, config.threshold, config.hd_percentile
    )
    stop = time.time()
    print(f"{out_dir}: {stop - start:.1f} s")
    if (stop - start) > FAIL_THRESHOLD:
        raise RuntimeError(
            f"Run took too long to complete. It must be faster than: {FAIL_THRESHOLD} s."
        )
    write_run(report, out_dir)
    return report


def mean_dice(reports):
    return np.mean([summarize(report.eval_records)["mean_dice"] for report in reports])


def accuracy_gain(reports):
    return np.mean(
        [
            report.event_label_accuracy()[-1] - report.event_label_accuracy()[0]
            for report in reports
        ]
    )


def write_results(reports, drops, out_root):
    """
    Writes the per-seed mean Dice of every setting to ``benchmark.json``.

    The file is written before any check so that a failing run still leaves its
    numbers behind.
    """
    results = {
        "seeds": list(SEEDS),
        "mean_dice": {
            name: [summarize(report.eval_records)["mean_dice"] for report in runs]
            for name, runs in reports.items()
        },
        "dice_drop": drops,
    }
    results["mean_over_seeds"] = {
        name: float(np.mean(values)) for name, values in results["mean_dice"].items()
    }
    with open(Path(out_root) / "benchmark.json", "w") as fh:
        json.dump(results, fh, indent=2)
    return results


def main(out_root):
    out_root = Path(out_root)
    height, width = DEFAULT_IMAGE_SIZE
    generate_split(out_root / "data" / "train", DEFAULT_SPLIT_SIZES["train"], 0, height, width, SIGMA)
    generate_split(
        out_root / "data" / "test", DEFAULT_SPLIT_SIZES["test"], 1, height, width, SIGMA, "test"
    )
    train_samples = load_dataset(out_root / "data" / "train")
    test_samples = load_dataset(out_root / "data" / "test")

    reports = {}
    run_dirs = []
    for name, config in component_grid(BASE).items():
        samples = relabel(train_samples, config)
        reports[name] = []
        for seed in SEEDS:
            run_dir = out_root / "runs" / name / f"seed-{seed}"
            reports[name].append(
                timed_run(derive(config, seed=seed), samples, test_samples, run_dir)
            )
            run_dirs.append(run_dir)

    for sigma in SWEEP_SIGMAS:
        for name in ("lb", "mc-lc"):
            config = derive(component_grid(BASE)[name], sigma=sigma)
            samples = relabel(train_samples, config)
            key = f"{name}-sigma-{sigma}"
            reports[key] = []
            for seed in SEEDS:
                run_dir = out_root / "runs" / key / f"seed-{seed}"
                reports[key].append(
                    timed_run(derive(config, seed=seed), samples, test_samples, run_dir)
                )
                run_dirs.append(run_dir)
    aggregate_runs(run_dirs, out_root)

    drops = {}
    for name in ("lb", "mc-lc"):
        low, high = (mean_dice(reports[f"{name}-sigma-{sigma}"]) for sigma in SWEEP_SIGMAS)
        drops[name] = float(low - high)
    write_results(reports, drops, out_root)

    dice = {name: mean_dice(reports[name]) for name in ("lb", "lc", "mc", "mc-lc")}
    print("mean dice: " + ", ".join(f"{name} {value:.4f}" for name, value in dice.items()))
    print(f"dice drop from sigma {SWEEP_SIGMAS[0]} to {SWEEP_SIGMAS[1]}: {drops}")
    failures = []
    if not dice["mc-lc"] > dice["mc"] > dice["lb"]:
        failures.append("expected mean dice mc-lc > mc > lb")
    if not dice["mc-lc"] > dice["lc"]:
        failures.append("expected mean dice mc-lc > lc")

    for report in reports["mc-lc"]:
        history = report.event_label_accuracy()
        if any(b < a - ACCURACY_SLACK for a, b in zip(history, history[1:])):
            failures.append(f"label accuracy dropped under mc-lc: {history}")
    if not accuracy_gain(reports["lc"]) < accuracy_gain(reports["mc-lc"]):
        failures.append("expected a larger label accuracy gain with mc-lc than with lc")

    if not drops["mc-lc"] < drops["lb"]:
        failures.append("expected mc-lc to degrade less with noise than lb")

    if failures:
        raise RuntimeError(
            "Ablation benchmark failed: "
            + "; ".join(failures)
            + f". Per-seed results in {out_root / 'benchmark.json'}"
        )
    print(f"Ablation benchmark passed. Tables in {out_root}")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        main(sys.argv[1])
    else:
        with tempfile.TemporaryDirectory() as directory:
            main(directory)
