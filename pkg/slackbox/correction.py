# Copyright 2024, The SlackBox developers.
"""
Label correction: predicted masks become boxes that tighten the training labels.
"""
from dataclasses import dataclass, field
from enum import Enum, unique
import json

import numpy as np

from slackbox.constants import (
    BINARIZE_THRESHOLD,
    DEFAULT_CORRECTION_INTERVAL,
    DEFAULT_IOU_THRESHOLD,
    DEFAULT_UNCONFIDENT_SCALE,
    MAX_UNCONFIDENT_SCALE,
    MIN_COMPONENT_SIZE,
)
from slackbox.geometry import Box, box_iou, check_scale, connected_components, tightest_box
from slackbox.utilities import make_prop_pointer


@unique
class MergeRule(str, Enum):
    """
    How a label and its matched prediction are combined.
    """

    AVERAGE = "AVERAGE"
    """
    Coordinate-wise mean of the two boxes.
    """
    REPLACE = "REPLACE"
    """
    The predicted box is adopted.
    """

    def __str__(self):
        return self.value


def _validate_tau(self, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"tau must be in (0, 1). {value} given.")


def _validate_interval(self, value):
    if value < 1:
        raise ValueError(f"interval_epochs must be at least 1. {value} given.")


def _validate_lambda(self, value):
    if not 0.0 <= value < MAX_UNCONFIDENT_SCALE:
        raise ValueError(f"lambda0 must be in [0, 0.5). {value} given.")


class CorrectionConfig:
    """
    Settings of the label correction.

    :param tau: IoU a prediction must exceed to correct a label.
    :type tau: float
    :param interval_epochs: epochs between two corrections.
    :type interval_epochs: int
    :param lambda0: the unconfident scale before the first correction.
    :type lambda0: float
    :param merge_rule: how matched boxes are combined.
    :type merge_rule: MergeRule
    :param anchored: match and merge the predictions with the original annotations
        instead of the boxes left by the previous correction.
    :type anchored: bool
    """

    def __init__(
        self,
        tau=DEFAULT_IOU_THRESHOLD,
        interval_epochs=DEFAULT_CORRECTION_INTERVAL,
        lambda0=DEFAULT_UNCONFIDENT_SCALE,
        merge_rule=MergeRule.AVERAGE,
        anchored=True,
    ):
        self.tau = tau
        self.interval_epochs = interval_epochs
        self.lambda0 = lambda0
        self.merge_rule = merge_rule
        self.anchored = anchored

    @make_prop_pointer("_tau", (float, int), float, validator=_validate_tau)
    def tau(self):
        """
        The IoU threshold.

        :rtype: float
        """
        pass

    @make_prop_pointer("_interval_epochs", int, validator=_validate_interval)
    def interval_epochs(self):
        """
        Number of epochs between corrections.

        :rtype: int
        """
        pass

    @make_prop_pointer("_lambda0", (float, int), float, validator=_validate_lambda)
    def lambda0(self):
        """
        The initial unconfident scale.

        :rtype: float
        """
        pass

    @make_prop_pointer("_merge_rule", (MergeRule, str), MergeRule)
    def merge_rule(self):
        """
        How matched boxes are merged.

        :rtype: MergeRule
        """
        pass

    @make_prop_pointer("_anchored", bool)
    def anchored(self):
        """
        Whether every correction starts again from the original annotations.

        Otherwise each event merges into the box left by the previous one.

        :rtype: bool
        """
        pass

    def to_dict(self):
        return {
            "tau": self.tau,
            "interval_epochs": self.interval_epochs,
            "lambda0": self.lambda0,
            "merge_rule": str(self.merge_rule),
            "anchored": self.anchored,
        }

    def __repr__(self):
        return f"CorrectionConfig({self.to_dict()})"

    def __eq__(self, other):
        return isinstance(other, CorrectionConfig) and self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class MatchedPair:
    """
    A label corrected by a prediction.
    """

    label_index: int
    pred_index: int
    iou: float

    def to_dict(self):
        return {"label": self.label_index, "pred": self.pred_index, "iou": self.iou}


@dataclass
class ImageCorrection:
    """
    What one correction event did to one image.
    """

    image_id: str
    pairs: list
    boxes_before: list
    boxes_after: list

    def to_dict(self):
        return {
            "image_id": self.image_id,
            "pairs": [pair.to_dict() for pair in self.pairs],
            "boxes_before": [box.to_dict() for box in self.boxes_before],
            "boxes_after": [box.to_dict() for box in self.boxes_after],
        }


@dataclass
class CorrectionEvent:
    """
    One label correction across the training set.
    """

    epoch: int
    lambda_before: float
    lambda_after: float
    images: list = field(default_factory=list)

    @property
    def n_corrected(self):
        """
        Number of labels changed by this event.

        :rtype: int
        """
        return sum(len(image.pairs) for image in self.images)

    def audit_lines(self):
        """
        One JSON line per image for the correction audit log.

        :rtype: list
        """
        lines = []
        for image in self.images:
            row = {"epoch": self.epoch}
            row.update(image.to_dict())
            row["lambda_before"] = self.lambda_before
            row["lambda_after"] = self.lambda_after
            lines.append(json.dumps(row))
        return lines


def predicted_boxes(
    scores, threshold=BINARIZE_THRESHOLD, min_component_size=MIN_COMPONENT_SIZE
):
    """
    Turns a score map into boxes, one per connected foreground region.

    :param scores: the score map.
    :type scores: numpy.ndarray
    :param threshold: scores above it are foreground.
    :type threshold: float
    :param min_component_size: smaller regions are ignored.
    :type min_component_size: int
    :rtype: list
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1). {threshold} given.")
    foreground = np.asarray(scores) > threshold
    boxes = []
    for component in connected_components(foreground):
        if np.count_nonzero(component) >= min_component_size:
            boxes.append(tightest_box(component))
    return boxes


def _merge(label, pred, merge_rule):
    if merge_rule == MergeRule.REPLACE:
        return pred
    return Box(
        (label.x_lt + pred.x_lt) / 2.0,
        (label.y_lt + pred.y_lt) / 2.0,
        (label.x_rb + pred.x_rb) / 2.0,
        (label.y_rb + pred.y_rb) / 2.0,
    )


def match_and_merge(labels, preds, tau, merge_rule=MergeRule.AVERAGE):
    """
    Corrects labels with the predictions they overlap best.

    Every label proposes the prediction with the highest IoU (lowest index on ties).
    Proposals are accepted from the highest IoU down (lowest label index on ties) if
    the IoU exceeds ``tau`` and the prediction is not claimed yet. Unmatched labels are
    kept; unmatched predictions are dropped.

    :param labels: the current labels.
    :type labels: list
    :param preds: the predicted boxes.
    :type preds: list
    :param tau: the IoU threshold.
    :type tau: float
    :param merge_rule: how matched boxes are merged.
    :type merge_rule: MergeRule
    :returns: the corrected labels and the accepted pairs, ordered by label index.
    :rtype: tuple
    """
    merge_rule = MergeRule(merge_rule)
    labels = list(labels)
    preds = list(preds)
    if not preds:
        return labels, []
    proposals = []
    for label_index, label in enumerate(labels):
        ious = [box_iou(label, pred) for pred in preds]
        pred_index = int(np.argmax(ious))
        proposals.append((-ious[pred_index], label_index, pred_index))
    proposals.sort()
    claimed = set()
    pairs = []
    for negative_iou, label_index, pred_index in proposals:
        iou = -negative_iou
        if iou <= tau or pred_index in claimed:
            continue
        claimed.add(pred_index)
        pairs.append(MatchedPair(label_index, pred_index, iou))
    pairs.sort(key=lambda pair: pair.label_index)
    corrected = list(labels)
    for pair in pairs:
        corrected[pair.label_index] = _merge(
            labels[pair.label_index], preds[pair.pred_index], merge_rule
        )
    return corrected, pairs


def lambda_schedule(scale):
    """
    The unconfident scale after a correction: half of the current one.

    :rtype: float
    """
    check_scale(scale)
    return scale / 2.0


def run_correction(
    score_maps,
    labels,
    config,
    scale,
    epoch,
    threshold=BINARIZE_THRESHOLD,
    annotations=None,
):
    """
    Runs one correction over every image.

    With ``config.anchored`` and ``annotations`` given, the predictions are matched
    with and merged into the annotations. A label whose annotation finds no match
    keeps its current box.

    :param score_maps: ``image_id -> score map`` predicted at the end of the epoch.
    :type score_maps: dict
    :param labels: ``image_id -> list of boxes``, the current labels.
    :type labels: dict
    :param config: the correction settings.
    :type config: CorrectionConfig
    :param scale: the unconfident scale before the correction.
    :type scale: float
    :param epoch: the epoch that just finished.
    :type epoch: int
    :param annotations: ``image_id -> list of boxes``, the labels before any correction.
    :type annotations: dict
    :returns: the corrected labels and the event record.
    :rtype: tuple
    """
    event = CorrectionEvent(epoch, scale, lambda_schedule(scale))
    corrected = {}
    for image_id, boxes in labels.items():
        preds = predicted_boxes(score_maps[image_id], threshold)
        base = boxes
        if config.anchored and annotations is not None:
            base = annotations[image_id]
        merged, pairs = match_and_merge(base, preds, config.tau, config.merge_rule)
        new_boxes = list(boxes)
        for pair in pairs:
            new_boxes[pair.label_index] = merged[pair.label_index]
        corrected[image_id] = new_boxes
        event.images.append(ImageCorrection(image_id, pairs, list(boxes), new_boxes))
    return corrected, event
