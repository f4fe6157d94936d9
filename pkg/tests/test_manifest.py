# Copyright 2024, The SlackBox developers.
import json
from unittest import TestCase

import numpy as np
import pytest

from slackbox.errors import MalformedFileError
from slackbox.geometry import Box
from slackbox.io.manifest import (
    MANIFEST_NAME,
    DatasetManifest,
    ManifestEntry,
    read_box_rows,
    write_box_rows,
)
from slackbox.io.pgm import write_image, write_mask


def _entry(image_id="a"):
    return ManifestEntry(
        image_id,
        f"images/{image_id}.pgm",
        f"masks/{image_id}.pgm",
        6,
        8,
        [Box(1, 1, 4, 5)],
        [Box(0.5, 1.25, 4.5, 5)],
    )


def _dataset(root, ids=("a", "b")):
    (root / "images").mkdir(parents=True)
    (root / "masks").mkdir()
    for image_id in ids:
        write_image(root / "images" / f"{image_id}.pgm", np.zeros((6, 8)))
        write_mask(root / "masks" / f"{image_id}.pgm", np.zeros((6, 8)))
    manifest = DatasetManifest(root, [_entry(image_id) for image_id in ids], 3, 0.2)
    manifest.write()
    return manifest


class TestManifestEntry(TestCase):
    def test_misaligned(self):
        with self.assertRaises(ValueError):
            ManifestEntry("a", "i", "m", 4, 4, [Box(0, 0, 1, 1)], [])

    def test_to_dict(self):
        data = _entry().to_dict()
        self.assertEqual(data["noisy_boxes"][0]["y_lt"], 1.25)
        self.assertEqual(_entry().image_size, (6, 8))


def test_round_trip(tmp_path):
    written = _dataset(tmp_path / "train")
    read = DatasetManifest.read(tmp_path / "train")
    assert read.entries == written.entries
    assert (read.seed, read.sigma) == (3, 0.2)
    assert read["b"].noisy_boxes == [Box(0.5, 1.25, 4.5, 5)]
    assert read.resolve(read["a"].image).is_file()
    assert DatasetManifest.read(tmp_path / "train" / MANIFEST_NAME).entries == read.entries
    assert read.image_sizes() == {"a": (6, 8), "b": (6, 8)}
    assert [image_id for image_id, _ in read.box_rows(noisy=False)] == ["a", "b"]
    with pytest.raises(KeyError):
        read["c"]


def test_header_line(tmp_path):
    manifest = _dataset(tmp_path)
    header = json.loads(manifest.path.read_text().splitlines()[0])
    assert header == {"version": 1, "seed": 3, "sigma": 0.2}


def _rewrite(manifest, edit):
    lines = manifest.path.read_text().splitlines()
    lines = edit(lines)
    manifest.path.write_text("\n".join(lines) + "\n")


@pytest.mark.parametrize(
    "edit, reason",
    [
        (lambda lines: lines[:1] + ["{not json"], "line 2"),
        (lambda lines: [json.dumps({"version": 2, "seed": 0, "sigma": 0})] + lines[1:], "version 2"),
        (lambda lines: lines[:1] + ["[1, 2]"], "expected a JSON object"),
        (
            lambda lines: lines[:1] + [lines[1].replace('"mask"', '"masks"')],
            "missing mask",
        ),
        (
            lambda lines: lines[:1] + [lines[1].replace("images/a.pgm", "images/z.pgm")],
            "does not exist",
        ),
        (lambda lines: lines[:1] + [lines[1].replace('"x_rb": 4', '"x_rb": 0')], "bad box"),
        (lambda lines: [], "empty manifest"),
    ],
)
def test_malformed(tmp_path, edit, reason):
    manifest = _dataset(tmp_path)
    _rewrite(manifest, edit)
    with pytest.raises(MalformedFileError) as info:
        DatasetManifest.read(tmp_path)
    assert reason in info.value.message


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        DatasetManifest.read(tmp_path)


def test_box_rows(tmp_path):
    rows = [("a", [Box(0, 0, 2, 3)]), ("b", [])]
    path = tmp_path / "labels.jsonl"
    write_box_rows(path, rows, {"a": (10, 12)})
    read, sizes = read_box_rows(path)
    assert read == rows
    assert sizes == {"a": (10, 12)}


def test_box_rows_missing_key(tmp_path):
    path = tmp_path / "labels.jsonl"
    path.write_text('{"boxes": []}\n')
    with pytest.raises(MalformedFileError, match="line 1: missing image_id"):
        read_box_rows(path)
