# Copyright 2024, The SlackBox developers.
"""
JSON lines files describing datasets and box labels.

A dataset directory holds ``images/*.pgm``, ``masks/*.pgm`` and ``manifest.jsonl``.
The first manifest line is a header ``{"version", "seed", "sigma"}``; every other line
is one image ``{"image_id", "image", "mask", "height", "width", "clean_boxes",
"noisy_boxes"}`` with paths relative to the manifest's directory.

Box label files hold one ``{"image_id", "boxes", "height", "width"}`` object per line.
"""
from dataclasses import dataclass, field
import json
import os
from pathlib import Path

from slackbox.constants import MANIFEST_VERSION
from slackbox.errors import MalformedFileError
from slackbox.geometry import Box

MANIFEST_NAME = "manifest.jsonl"


def _boxes_from_json(values, path, line_no):
    try:
        return [Box.from_dict(value) for value in values]
    except (TypeError, ValueError) as e:
        raise MalformedFileError(path, f"line {line_no}: bad box: {e}") from e


def _read_json_lines(path):
    path = os.fspath(path)
    rows = []
    with open(path, "r") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedFileError(path, f"line {line_no}: {e.msg}") from e
            if not isinstance(row, dict):
                raise MalformedFileError(path, f"line {line_no}: expected a JSON object")
            rows.append((line_no, row))
    return rows


def _require(row, keys, path, line_no):
    missing = [key for key in keys if key not in row]
    if missing:
        raise MalformedFileError(path, f"line {line_no}: missing {', '.join(missing)}")


@dataclass
class ManifestEntry:
    """
    One image of a dataset.
    """

    image_id: str
    image: str
    mask: str
    height: int
    width: int
    clean_boxes: list
    noisy_boxes: list

    def __post_init__(self):
        if len(self.clean_boxes) != len(self.noisy_boxes):
            raise ValueError(
                f"Image {self.image_id}: clean and noisy boxes must be index aligned."
            )

    @property
    def image_size(self):
        return (self.height, self.width)

    def to_dict(self):
        return {
            "image_id": self.image_id,
            "image": self.image,
            "mask": self.mask,
            "height": self.height,
            "width": self.width,
            "clean_boxes": [box.to_dict() for box in self.clean_boxes],
            "noisy_boxes": [box.to_dict() for box in self.noisy_boxes],
        }


@dataclass
class DatasetManifest:
    """
    The images of a dataset with their clean and noisy boxes.

    :param root: the directory relative paths are resolved against.
    :type root: pathlib.Path
    """

    root: Path
    entries: list = field(default_factory=list)
    seed: int = 0
    sigma: float = 0.0

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, image_id):
        for entry in self.entries:
            if entry.image_id == image_id:
                return entry
        raise KeyError(image_id)

    def resolve(self, relative):
        """
        The absolute path of a file listed in the manifest.

        :rtype: pathlib.Path
        """
        return Path(self.root) / relative

    @property
    def path(self):
        return Path(self.root) / MANIFEST_NAME

    def write(self):
        """
        Writes ``manifest.jsonl`` into the root directory.
        """
        Path(self.root).mkdir(parents=True, exist_ok=True)
        header = {"version": MANIFEST_VERSION, "seed": self.seed, "sigma": self.sigma}
        with open(self.path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for entry in self.entries:
                fh.write(json.dumps(entry.to_dict()) + "\n")

    @classmethod
    def read(cls, root):
        """
        Reads a dataset directory, or a manifest file directly.

        :param root: the dataset directory or its ``manifest.jsonl``.
        :type root: str, os.PathLike
        :rtype: DatasetManifest
        :raises MalformedFileError: if a line is not valid, or a listed file is missing.
        """
        root = Path(root)
        path = root / MANIFEST_NAME if root.is_dir() else root
        root = path.parent
        rows = _read_json_lines(path)
        if not rows:
            raise MalformedFileError(os.fspath(path), "empty manifest")
        line_no, header = rows[0]
        _require(header, ("version", "seed", "sigma"), os.fspath(path), line_no)
        if header["version"] != MANIFEST_VERSION:
            raise MalformedFileError(
                os.fspath(path), f"unsupported manifest version {header['version']}"
            )
        manifest = cls(root, [], int(header["seed"]), float(header["sigma"]))
        keys = ("image_id", "image", "mask", "height", "width", "clean_boxes", "noisy_boxes")
        for line_no, row in rows[1:]:
            _require(row, keys, os.fspath(path), line_no)
            clean = _boxes_from_json(row["clean_boxes"], os.fspath(path), line_no)
            noisy = _boxes_from_json(row["noisy_boxes"], os.fspath(path), line_no)
            if len(clean) != len(noisy):
                raise MalformedFileError(
                    os.fspath(path), f"line {line_no}: clean and noisy boxes differ in count"
                )
            for key in ("image", "mask"):
                if not (root / row[key]).is_file():
                    raise MalformedFileError(
                        os.fspath(path), f"line {line_no}: {row[key]} does not exist"
                    )
            manifest.entries.append(
                ManifestEntry(
                    str(row["image_id"]),
                    row["image"],
                    row["mask"],
                    int(row["height"]),
                    int(row["width"]),
                    clean,
                    noisy,
                )
            )
        return manifest

    def box_rows(self, noisy=True):
        """
        The labels as ``(image_id, boxes)`` pairs.

        :rtype: list
        """
        return [
            (entry.image_id, entry.noisy_boxes if noisy else entry.clean_boxes)
            for entry in self.entries
        ]

    def image_sizes(self):
        return {entry.image_id: entry.image_size for entry in self.entries}


def write_box_rows(path, rows, image_sizes=None):
    """
    Writes a box label file.

    :param path: where to write.
    :type path: str, os.PathLike
    :param rows: ``(image_id, boxes)`` pairs.
    :type rows: list
    :param image_sizes: optional ``image_id -> (height, width)``.
    :type image_sizes: dict
    """
    image_sizes = image_sizes or {}
    with open(path, "w") as fh:
        for image_id, boxes in rows:
            row = {"image_id": image_id, "boxes": [box.to_dict() for box in boxes]}
            if image_id in image_sizes:
                row["height"], row["width"] = image_sizes[image_id]
            fh.write(json.dumps(row) + "\n")


def read_box_rows(path):
    """
    Reads a box label file.

    :returns: the ``(image_id, boxes)`` pairs and the ``image_id -> (height, width)``
        of the rows that carry a size.
    :rtype: tuple
    """
    rows = []
    sizes = {}
    for line_no, row in _read_json_lines(path):
        _require(row, ("image_id", "boxes"), os.fspath(path), line_no)
        image_id = str(row["image_id"])
        rows.append((image_id, _boxes_from_json(row["boxes"], os.fspath(path), line_no)))
        if "height" in row and "width" in row:
            sizes[image_id] = (int(row["height"]), int(row["width"]))
    return rows, sizes
