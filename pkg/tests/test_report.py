# Copyright 2024, The SlackBox developers.
import csv
import json
import math

import pytest

from slackbox.errors import MalformedFileError
from slackbox.losses import LossBreakdown
from slackbox.metrics import EvalRecord
from slackbox.model import ModelParams, load_checkpoint
from slackbox.report import (
    ABLATION_HEADER,
    CURVES_HEADER,
    aggregate_runs,
    read_eval,
    read_run,
    summarize,
    update_run_eval,
    write_eval,
    write_run,
)
from slackbox.trainer import EpochRecord, RunReport, TrainConfig

RECORDS = [
    EvalRecord("a", 0.8, 0.6, 2.0),
    EvalRecord("b", 0.6, 0.4, None),
    EvalRecord("c", 0.4, 0.2, 4.0),
]


def _report(mode="MC", lc_enabled=False, sigma=0.2, accuracy=0.5, records=RECORDS):
    config = TrainConfig(epochs=2, mode=mode, lc_enabled=lc_enabled, sigma=sigma)
    report = RunReport(config, initial_label_accuracy=0.4, params=ModelParams.initialize(0))
    for epoch in (1, 2):
        report.epochs.append(
            EpochRecord(epoch, 0.2, LossBreakdown(-0.5, total=-0.5), accuracy + epoch / 10)
        )
    report.eval_records = list(records)
    return report


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_summarize():
    summary = summarize(RECORDS)
    assert summary["mean_dice"] == pytest.approx(0.6)
    assert summary["mean_iou"] == pytest.approx(0.4)
    assert summary["mean_hd"] == pytest.approx(3.0)
    assert summary["n_missing_hd"] == 1
    assert math.isnan(summarize([EvalRecord("a", 0.0, 0.0)])["mean_hd"])
    with pytest.raises(ValueError):
        summarize([])


def test_summarize_medians():
    records = [
        EvalRecord("a", 0.9, 0.8, 1.0),
        EvalRecord("b", 0.1, 0.05, None),
        EvalRecord("c", 0.8, 0.7, 10.0),
        EvalRecord("d", 0.7, 0.5, 2.0),
    ]
    summary = summarize(records)
    assert summary["median_dice"] == pytest.approx(0.75)
    assert summary["mean_dice"] == pytest.approx(0.625)
    assert summary["median_iou"] == pytest.approx(0.6)
    assert summary["median_hd"] == pytest.approx(2.0)
    assert summary["mean_hd"] == pytest.approx(13.0 / 3.0)
    assert math.isnan(summarize([EvalRecord("a", 0.0, 0.0)])["median_hd"])


def test_eval_file(tmp_path):
    path = tmp_path / "eval.csv"
    write_eval(RECORDS, path)
    assert _rows(path)[0] == list(EvalRecord.CSV_HEADER)
    assert _rows(path)[2] == ["b", "0.6", "0.4", ""]
    assert read_eval(path) == RECORDS


def test_eval_file_malformed(tmp_path):
    path = tmp_path / "eval.csv"
    path.write_text("image_id,dice\n")
    with pytest.raises(MalformedFileError):
        read_eval(path)
    path.write_text("image_id,dice,iou,hd\na,high,0.1,\n")
    with pytest.raises(MalformedFileError, match="line 2"):
        read_eval(path)


def test_write_run(tmp_path):
    run_dir = write_run(_report(), tmp_path / "run")
    data = read_run(run_dir)
    assert data["config"]["mode"] == "MC"
    assert data["scale_history"] == [0.2]
    assert data["eval"]["mean_hd"] == pytest.approx(3.0)
    assert data["eval"]["median_dice"] == pytest.approx(0.6)
    assert data["eval"]["median_hd"] == pytest.approx(3.0)
    assert data["n_events"] == 0
    losses = _rows(run_dir / "losses.csv")
    assert losses[0] == list(LossBreakdown.CSV_HEADER)
    assert losses[1][:3] == ["1", "MC", "-0.5"]
    accuracy = _rows(run_dir / "label_accuracy.csv")
    assert accuracy[1] == ["0", "0.2", "0.4", "0"]
    assert accuracy[2][:3] == ["1", "0.2", "0.6"]
    assert (run_dir / "corrections.jsonl").read_text() == ""
    assert load_checkpoint(run_dir / "model.ckpt").flatten().size == ModelParams.size()


def test_undefined_hd_in_json(tmp_path):
    run_dir = write_run(_report(records=[EvalRecord("a", 0.0, 0.0)]), tmp_path / "run")
    summary = json.loads((run_dir / "run.json").read_text())["eval"]
    assert summary["mean_hd"] is None
    assert summary["median_hd"] is None


def test_update_run_eval(tmp_path):
    run_dir = write_run(_report(records=[]), tmp_path / "run")
    assert "eval" not in read_run(run_dir)
    update_run_eval(run_dir, RECORDS)
    assert read_run(run_dir)["eval"]["n_missing_hd"] == 1
    assert read_eval(run_dir / "eval.csv") == RECORDS


def test_read_run_malformed(tmp_path):
    (tmp_path / "run.json").write_text("{")
    with pytest.raises(MalformedFileError):
        read_run(tmp_path)
    (tmp_path / "run.json").write_text("{}")
    with pytest.raises(MalformedFileError, match="missing config"):
        read_run(tmp_path)


def test_aggregate_runs(tmp_path):
    runs = [
        write_run(_report(accuracy=0.5), tmp_path / "mc-0"),
        write_run(_report(accuracy=0.7), tmp_path / "mc-1"),
        write_run(_report(mode="LB", sigma=0.4), tmp_path / "lb"),
    ]
    ablation, curves = aggregate_runs(runs, tmp_path / "summary")
    assert [row[:5] for row in ablation] == [
        ["LB", "false", "noisy", "0.4", "1"],
        ["MC", "false", "noisy", "0.2", "2"],
    ]
    assert float(ablation[1][5]) == pytest.approx(0.6)
    assert [float(value) for value in ablation[1][8:]] == pytest.approx([0.6, 0.4, 3.0])
    accuracy = [row for row in curves if row[0] == "label_accuracy" and row[1] == "MC"]
    assert [row[5] for row in accuracy] == ["0", "1", "2"]
    assert float(accuracy[1][6]) == pytest.approx(0.7)
    dice = [row for row in curves if row[0] == "dice_vs_sigma"]
    assert [(row[1], row[5]) for row in dice] == [("LB", "0.4"), ("MC", "0.2")]
    assert _rows(tmp_path / "summary" / "ablation.csv")[0] == list(ABLATION_HEADER)
    assert _rows(tmp_path / "summary" / "curves.csv")[0] == list(CURVES_HEADER)
