# Copyright 2024, The SlackBox developers.
"""slackbox trains segmentation models from bounding boxes that do not fit tightly.

Boxes are turned into supervision through a proxy map of the prediction; pixels near
the box edges, where a loose box may be wrong, are supervised by a monotonicity
constraint instead of the box itself, and the boxes are corrected from the model's own
predictions as training goes.

Start with :func:`slackbox.trainer.train` on a dataset written by
:func:`slackbox.synthetic.generate_split`.
"""

from slackbox import constants
from slackbox import errors
from slackbox.correction import CorrectionConfig, MergeRule, match_and_merge, predicted_boxes
from slackbox.geometry import Box, RegionPartition, box_filled_mask, region_partition
from slackbox.io.manifest import DatasetManifest
from slackbox.losses import LossBreakdown, LossMode, total_loss
from slackbox.metrics import EvalRecord, hausdorff, mask_dice, mask_iou
from slackbox.model import ModelParams, forward
from slackbox.noise import NoiseParams, perturb_box
from slackbox.proxy import proxy_forward
from slackbox.synthetic import generate_sample, generate_split
from slackbox.trainer import TrainConfig, evaluate, train


try:
    from . import _version

    __version__ = _version.version
except ImportError:
    try:
        from setuptools_scm import get_version

        __version__ = get_version()
    except (ImportError, LookupError):
        __version__ = "Undefined"
