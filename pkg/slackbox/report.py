# Copyright 2024, The SlackBox developers.
"""
Run directories and the tables aggregated from them.

A run directory holds:

* ``run.json``: the configuration, metric means, and the unconfident scale history.
* ``losses.csv``: the mean loss terms of every epoch.
* ``label_accuracy.csv``: the label accuracy and scale of every epoch.
* ``corrections.jsonl``: one line per image per correction event.
* ``eval.csv``: the test metrics of every image, when evaluated.
* ``model.ckpt``: the final weights.
"""
from collections import defaultdict
import csv
import json
import math
from pathlib import Path

import numpy as np

from slackbox.errors import MalformedFileError
from slackbox.losses import LossBreakdown
from slackbox.metrics import EvalRecord
from slackbox.model import save_checkpoint

RUN_FILE = "run.json"
LOSSES_FILE = "losses.csv"
ACCURACY_FILE = "label_accuracy.csv"
CORRECTIONS_FILE = "corrections.jsonl"
EVAL_FILE = "eval.csv"
CHECKPOINT_FILE = "model.ckpt"
ABLATION_FILE = "ablation.csv"
CURVES_FILE = "curves.csv"

ACCURACY_HEADER = ("epoch", "scale", "label_accuracy", "n_corrected")
ABLATION_HEADER = (
    "mode",
    "lc",
    "labels",
    "sigma",
    "n_runs",
    "mean_dice",
    "mean_iou",
    "mean_hd",
    "median_dice",
    "median_iou",
    "median_hd",
)
CURVES_HEADER = ("curve", "mode", "lc", "labels", "sigma", "x", "y")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _number(value):
    if value is None:
        return ""
    return repr(float(value))


def write_losses(report, path):
    mode = report.config.mode
    _write_csv(
        path,
        LossBreakdown.CSV_HEADER,
        [record.losses.as_row(record.epoch, mode) for record in report.epochs],
    )


def write_label_accuracy(report, path):
    rows = [
        [
            "0",
            _number(report.config.correction.lambda0),
            _number(report.initial_label_accuracy),
            "0",
        ]
    ]
    for record in report.epochs:
        rows.append(
            [
                str(record.epoch),
                _number(record.scale),
                _number(record.label_accuracy),
                str(record.n_corrected),
            ]
        )
    _write_csv(path, ACCURACY_HEADER, rows)


def write_corrections(report, path):
    with open(path, "w") as fh:
        for event in report.events:
            for line in event.audit_lines():
                fh.write(line + "\n")


def write_eval(records, path):
    _write_csv(path, EvalRecord.CSV_HEADER, [record.as_row() for record in records])


def read_eval(path):
    """
    Reads a file written by :func:`write_eval`.

    :rtype: list
    """
    records = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != EvalRecord.CSV_HEADER:
            raise MalformedFileError(
                str(path), f"expected the header {EvalRecord.CSV_HEADER}"
            )
        for line_no, row in enumerate(reader, start=2):
            try:
                image_id, dice, iou, hd = row
                hd = float(hd) if hd else None
                records.append(EvalRecord(image_id, float(dice), float(iou), hd))
            except ValueError as e:
                raise MalformedFileError(str(path), f"line {line_no}: {e}") from e
    return records


def summarize(records):
    """
    Means and medians of the evaluation metrics.

    The Hausdorff mean and median skip images where it is undefined; they are NaN
    if all are.

    :rtype: dict
    """
    records = list(records)
    if not records:
        raise ValueError("Can not summarize zero evaluation records.")
    dice = [record.dice for record in records]
    iou = [record.iou for record in records]
    distances = [record.hd for record in records if record.hd is not None]
    return {
        "mean_dice": math.fsum(dice) / len(dice),
        "mean_iou": math.fsum(iou) / len(iou),
        "mean_hd": math.fsum(distances) / len(distances) if distances else math.nan,
        "median_dice": float(np.median(dice)),
        "median_iou": float(np.median(iou)),
        "median_hd": float(np.median(distances)) if distances else math.nan,
        "n_missing_hd": len(records) - len(distances),
    }


def _summary_json(records):
    summary = summarize(records)
    # JSON has no NaN
    for key in ("mean_hd", "median_hd"):
        if math.isnan(summary[key]):
            summary[key] = None
    return summary


def run_summary(report):
    """
    The content of ``run.json``.

    :rtype: dict
    """
    data = {
        "config": report.config.to_dict(),
        "scale_history": report.scale_history(),
        "initial_label_accuracy": report.initial_label_accuracy,
        "event_label_accuracy": report.event_label_accuracy(),
        "n_events": len(report.events),
    }
    if report.eval_records:
        data["eval"] = _summary_json(report.eval_records)
    return data


def write_run(report, out_dir):
    """
    Writes every file of a run directory.

    :param report: the finished run.
    :type report: RunReport
    :param out_dir: the run directory, created if needed.
    :type out_dir: str, os.PathLike
    :rtype: pathlib.Path
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_losses(report, out_dir / LOSSES_FILE)
    write_label_accuracy(report, out_dir / ACCURACY_FILE)
    write_corrections(report, out_dir / CORRECTIONS_FILE)
    if report.eval_records:
        write_eval(report.eval_records, out_dir / EVAL_FILE)
    if report.params is not None:
        save_checkpoint(report.params, out_dir / CHECKPOINT_FILE)
    with open(out_dir / RUN_FILE, "w") as fh:
        json.dump(run_summary(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def update_run_eval(out_dir, records):
    """
    Adds test metrics to an existing run directory.
    """
    out_dir = Path(out_dir)
    data = read_run(out_dir)
    write_eval(records, out_dir / EVAL_FILE)
    data["eval"] = _summary_json(records)
    with open(out_dir / RUN_FILE, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_run(run_dir):
    """
    Reads ``run.json`` of a run directory.

    :rtype: dict
    """
    path = Path(run_dir) / RUN_FILE
    try:
        with open(path, "r") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise MalformedFileError(str(path), e.msg, e.pos) from e
    if "config" not in data:
        raise MalformedFileError(str(path), "missing config")
    return data


def _read_accuracy(run_dir):
    path = Path(run_dir) / ACCURACY_FILE
    if not path.is_file():
        return []
    with open(path, "r", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        (int(row["epoch"]), float(row["label_accuracy"]))
        for row in rows
        if row["label_accuracy"]
    ]


def _run_key(config):
    labels = "clean" if config.get("use_clean_labels") else "noisy"
    return (config["mode"], bool(config["lc_enabled"]), labels, float(config["sigma"]))


def _mean(values):
    values = [value for value in values if value is not None]
    if not values:
        return ""
    return repr(math.fsum(values) / len(values))


def aggregate_runs(run_dirs, out_dir=None):
    """
    Builds the ablation table and the curves of a set of runs.

    Runs sharing mode, correction, label source and noise level (typically seeds
    of one setting) are averaged into one ablation row; the median columns are the
    per run medians averaged over those runs. The curves are the label
    accuracy of every epoch and the mean Dice against the noise level.

    :param run_dirs: the run directories.
    :type run_dirs: list
    :param out_dir: where to write ``ablation.csv`` and ``curves.csv``, if given.
    :type out_dir: str, os.PathLike
    :returns: the ablation rows and the curve rows.
    :rtype: tuple
    """
    groups = defaultdict(list)
    curve_sums = defaultdict(list)
    for run_dir in run_dirs:
        data = read_run(run_dir)
        key = _run_key(data["config"])
        groups[key].append(data.get("eval"))
        for epoch, accuracy in _read_accuracy(run_dir):
            curve_sums[key + (epoch,)].append(accuracy)

    ablation = []
    for key in sorted(groups):
        mode, lc, labels, sigma = key
        evals = [summary for summary in groups[key] if summary]
        ablation.append(
            [
                mode,
                str(lc).lower(),
                labels,
                repr(sigma),
                str(len(groups[key])),
                _mean([summary["mean_dice"] for summary in evals]),
                _mean([summary["mean_iou"] for summary in evals]),
                _mean([summary["mean_hd"] for summary in evals]),
                _mean([summary.get("median_dice") for summary in evals]),
                _mean([summary.get("median_iou") for summary in evals]),
                _mean([summary.get("median_hd") for summary in evals]),
            ]
        )

    curves = []
    for mode, lc, labels, sigma, epoch in sorted(curve_sums):
        curves.append(
            [
                "label_accuracy",
                mode,
                str(lc).lower(),
                labels,
                repr(sigma),
                str(epoch),
                _mean(curve_sums[(mode, lc, labels, sigma, epoch)]),
            ]
        )
    for row in ablation:
        if row[5]:
            curves.append(
                ["dice_vs_sigma", row[0], row[1], row[2], row[3], row[3], row[5]]
            )

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(out_dir / ABLATION_FILE, ABLATION_HEADER, ablation)
        _write_csv(out_dir / CURVES_FILE, CURVES_HEADER, curves)
    return ablation, curves
