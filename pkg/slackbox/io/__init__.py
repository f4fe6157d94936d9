# Copyright 2024, The SlackBox developers.
"""
File formats: binary PGM rasters and JSON lines manifests.
"""
from slackbox.io.manifest import (
    DatasetManifest,
    ManifestEntry,
    read_box_rows,
    write_box_rows,
)
from slackbox.io.pgm import read_image, read_mask, read_pgm, write_image, write_mask, write_pgm
