# Copyright 2024, The SlackBox developers.
from pathlib import Path

import pytest

import slackbox

HEADER = "# Copyright 2024, The SlackBox developers."
PACKAGE = Path(slackbox.__file__).parent
SOURCES = sorted(
    path for path in PACKAGE.rglob("*.py") if path.name != "_version.py"
)


@pytest.mark.parametrize("path", SOURCES, ids=lambda path: path.name)
def test_copyright_header(path):
    with open(path) as fh:
        assert fh.readline().rstrip("\n") == HEADER
