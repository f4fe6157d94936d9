# Copyright 2024, The SlackBox developers.
import json
from pathlib import Path
from unittest import TestCase

import pytest

import slackbox
from slackbox import __main__ as main
from slackbox.io.manifest import DatasetManifest, read_box_rows
from slackbox.losses import LossMode


class TestArgumentParsing(TestCase):
    def test_train(self):
        args = main.define_args(
            ["train", "data/train", "runs/a", "--epochs", "4", "--mode", "LB", "--no-lc"]
        )
        self.assertEqual(args.command, "train")
        self.assertEqual(args.train_dir, Path("data/train"))
        self.assertEqual(args.epochs, 4)
        self.assertEqual(args.mode, "LB")
        self.assertFalse(args.lc_enabled)
        self.assertIsNone(args.labels)

    def test_build_config(self):
        args = main.define_args(["train", "d", "o", "--epochs", "20", "--seed", "3"])
        config = main.build_config(args)
        self.assertEqual(config.epochs, 20)
        self.assertEqual(config.seed, 3)
        self.assertEqual(config.mode, LossMode.MC)
        self.assertTrue(config.lc_enabled)

    def test_grid(self):
        args = main.define_args(["grid", "components", "tr", "te", "out", "--seeds", "0", "1"])
        self.assertEqual(args.seeds, [0, 1])
        with self.assertRaises(SystemExit):
            main.define_args(["grid", "everything", "tr", "te", "out"])

    def test_perturb_forms(self):
        args = main.define_args(
            [
                "perturb",
                "--sigma",
                "0.3",
                "--seed",
                "7",
                "--in",
                "clean.jsonl",
                "--out",
                "noisy.jsonl",
            ]
        )
        self.assertEqual(args.in_path, Path("clean.jsonl"))
        self.assertEqual(args.out_path, Path("noisy.jsonl"))
        self.assertIsNone(args.source)
        self.assertEqual(args.seed, 7)
        args = main.define_args(["perturb", "clean.jsonl", "noisy.jsonl"])
        self.assertEqual(args.source, Path("clean.jsonl"))
        self.assertIsNone(args.in_path)

    def test_eval_defaults(self):
        args = main.define_args(["eval", "run", "test"])
        self.assertEqual(args.threshold, 0.5)
        self.assertIsNone(args.hd_percentile)


def test_version(capsys):
    assert main.run(main.define_args(["--version"])) == main.EXIT_OK
    assert capsys.readouterr().out.strip() == slackbox.__version__


def test_no_command(capsys):
    assert main.run(main.define_args([])) == main.EXIT_VALIDATION_ERROR
    assert "No command" in capsys.readouterr().err


def test_runtime_error(monkeypatch, capsys):
    def fail(args):
        raise RuntimeError("boom")

    monkeypatch.setitem(main.COMMANDS, "report", fail)
    assert main.main(["report", "x", "--out", "y"]) == main.EXIT_RUNTIME_ERROR
    assert "RuntimeError: boom" in capsys.readouterr().err


def test_validation_errors(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"epochs": 2, "tau": 2.0}))
    code = main.main(["train", str(tmp_path), str(tmp_path / "out"), "--config", str(config)])
    assert code == main.EXIT_VALIDATION_ERROR
    assert "tau" in capsys.readouterr().err
    code = main.main(["eval", str(tmp_path / "missing.ckpt"), str(tmp_path)])
    assert code == main.EXIT_VALIDATION_ERROR
    code = main.main(["train", str(tmp_path), str(tmp_path / "out"), "--epochs", "2"])
    assert code == main.EXIT_VALIDATION_ERROR
    code = main.main(["synth", str(tmp_path / "data"), "--sigma", "-1"])
    assert code == main.EXIT_VALIDATION_ERROR
    assert "sigma" in capsys.readouterr().err
    assert not (tmp_path / "data").exists()
    code = main.main(["synth", str(tmp_path / "data"), "--height", "8"])
    assert code == main.EXIT_VALIDATION_ERROR
    code = main.main(["synth", str(tmp_path / "data"), "--train", "0"])
    assert code == main.EXIT_VALIDATION_ERROR
    code = main.main(["perturb", "--in", str(tmp_path)])
    assert code == main.EXIT_VALIDATION_ERROR
    assert "output is required" in capsys.readouterr().err
    (tmp_path / "manifest.jsonl").write_text("{not json\n")
    code = main.main(["train", str(tmp_path), str(tmp_path / "out"), "--no-lc"])
    assert code == main.EXIT_VALIDATION_ERROR


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    assert (
        main.main(
            ["synth", str(root), "--train", "4", "--test", "2", "--height", "24", "--width", "24"]
        )
        == main.EXIT_OK
    )
    return root


def test_synth(data_dir):
    assert len(DatasetManifest.read(data_dir / "train")) == 4
    assert len(DatasetManifest.read(data_dir / "test")) == 2
    assert DatasetManifest.read(data_dir / "train").seed == 0
    assert DatasetManifest.read(data_dir / "test").seed == 1


def test_perturb(data_dir, tmp_path):
    out = tmp_path / "labels.jsonl"
    assert main.main(["perturb", str(data_dir / "train"), str(out), "--sigma", "0"]) == 0
    rows, sizes = read_box_rows(out)
    manifest = DatasetManifest.read(data_dir / "train")
    assert rows == manifest.box_rows(noisy=False)
    assert sizes == manifest.image_sizes()
    again = tmp_path / "again.jsonl"
    assert main.main(["perturb", str(out), str(again), "--sigma", "0.3"]) == 0
    assert len(read_box_rows(again)[0]) == 4
    assert main.main(["perturb", str(out), str(again), "--sigma", "-1"]) == 2
    noisy = tmp_path / "noisy.jsonl"
    code = main.main(
        ["perturb", "--sigma", "0.3", "--seed", "0", "--in", str(out), "--out", str(noisy)]
    )
    assert code == main.EXIT_OK
    assert noisy.read_bytes() == again.read_bytes()
    code = main.main(["perturb", str(out), "--out", str(again), "--in", str(noisy)])
    assert code == main.EXIT_VALIDATION_ERROR


def test_train_eval_report(data_dir, tmp_path, capsys):
    run_dir = tmp_path / "run"
    code = main.main(
        [
            "train",
            str(data_dir / "train"),
            str(run_dir),
            "--epochs",
            "2",
            "--no-lc",
            "--test-dir",
            str(data_dir / "test"),
        ]
    )
    assert code == main.EXIT_OK
    assert "mean dice" in capsys.readouterr().out
    for name in ("run.json", "losses.csv", "label_accuracy.csv", "eval.csv", "model.ckpt"):
        assert (run_dir / name).is_file()
    out = tmp_path / "eval.csv"
    assert main.main(["eval", str(run_dir), str(data_dir / "test"), "--out", str(out)]) == 0
    assert out.read_text() == (run_dir / "eval.csv").read_text()
    assert main.main(["eval", str(run_dir), str(data_dir / "test"), "--threshold", "1.5"]) == 2
    test_dir = str(data_dir / "test")
    code = main.main(["eval", str(run_dir), test_dir, "--hd-percentile", "200"])
    assert code == main.EXIT_VALIDATION_ERROR
    assert "hd_percentile" in capsys.readouterr().err
    code = main.main(["eval", str(run_dir), test_dir, "--hd-percentile", "95"])
    assert code == main.EXIT_OK
    assert main.main(["report", str(run_dir), "--out", str(tmp_path / "summary")]) == 0
    assert (tmp_path / "summary" / "ablation.csv").is_file()


def test_train_with_labels(data_dir, tmp_path):
    labels = tmp_path / "labels.jsonl"
    assert main.main(["perturb", str(data_dir / "train"), str(labels), "--sigma", "0"]) == 0
    run_dir = tmp_path / "run"
    code = main.main(
        ["train", str(data_dir / "train"), str(run_dir), "--epochs", "1", "--no-lc", "--labels", str(labels)]
    )
    assert code == main.EXIT_OK
    assert json.loads((run_dir / "run.json").read_text())["initial_label_accuracy"] == 1.0
