# Copyright 2024, The SlackBox developers.
"""
Mask similarity metrics and label accuracy.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import cdist

from slackbox.errors import UndefinedDistanceError
from slackbox.geometry import box_iou
from slackbox.utilities import as_mask, check_same_shape

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class EvalRecord:
    """
    The metrics of one test image.

    :param hd: None when the distance is undefined (an empty prediction).
    :type hd: float
    :param label_accuracy: IoU of the training box with the clean box, if known.
    :type label_accuracy: float
    """

    image_id: str
    dice: float
    iou: float
    hd: float = None
    label_accuracy: float = None

    CSV_HEADER = ("image_id", "dice", "iou", "hd")

    def as_row(self):
        hd = "" if self.hd is None else repr(float(self.hd))
        return [self.image_id, repr(float(self.dice)), repr(float(self.iou)), hd]


def _pair(a, b):
    a = as_mask(a)
    b = as_mask(b)
    check_same_shape(a, b, what="mask")
    return a, b


def mask_dice(a, b):
    """
    ``2 |a & b| / (|a| + |b|)``; two empty masks score 1.

    :rtype: float
    """
    a, b = _pair(a, b)
    total = np.count_nonzero(a) + np.count_nonzero(b)
    if total == 0:
        return 1.0
    return 2.0 * np.count_nonzero(a & b) / total


def mask_iou(a, b):
    """
    ``|a & b| / |a | b|``; two empty masks score 1.

    :rtype: float
    """
    a, b = _pair(a, b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def boundary(mask):
    """
    Foreground pixels with a 4-neighbor in the background or off the image.

    :rtype: numpy.ndarray
    """
    mask = as_mask(mask)
    interior = ndimage.binary_erosion(mask, structure=_FOUR_CONNECTED, border_value=0)
    return mask & ~interior


def hausdorff(a, b, percentile=None):
    """
    The symmetric Hausdorff distance between the boundary pixel centers of two masks.

    :param a: first mask.
    :type a: numpy.ndarray
    :param b: second mask.
    :type b: numpy.ndarray
    :param percentile: when given (e.g. 95), the larger of the two directed
        distance percentiles instead of the maximum.
    :type percentile: float
    :returns: the distance in pixels.
    :rtype: float
    :raises UndefinedDistanceError: if either mask is empty.
    """
    a, b = _pair(a, b)
    if not a.any() or not b.any():
        raise UndefinedDistanceError()
    points_a = np.argwhere(boundary(a)).astype(float)
    points_b = np.argwhere(boundary(b)).astype(float)
    distances = cdist(points_a, points_b)
    a_to_b = distances.min(axis=1)
    b_to_a = distances.min(axis=0)
    if percentile is None:
        return float(max(a_to_b.max(), b_to_a.max()))
    return float(max(np.percentile(a_to_b, percentile), np.percentile(b_to_a, percentile)))


def label_accuracy(current, clean):
    """
    Mean IoU of each training box with its clean counterpart.

    :param current: the training labels.
    :type current: list
    :param clean: the clean labels, index aligned with ``current``.
    :type clean: list
    :rtype: float
    """
    current = list(current)
    clean = list(clean)
    if len(current) != len(clean):
        raise ValueError(
            f"Label lists must be index aligned: {len(current)} vs {len(clean)} boxes."
        )
    if not current:
        return 1.0
    return math.fsum(box_iou(a, b) for a, b in zip(current, clean)) / len(current)


def evaluate_masks(image_id, prediction, truth, percentile=None, label_acc=None):
    """
    Computes every metric for one prediction.

    An undefined Hausdorff distance is recorded as None.

    :rtype: EvalRecord
    """
    try:
        hd = hausdorff(prediction, truth, percentile)
    except UndefinedDistanceError:
        hd = None
    return EvalRecord(
        image_id,
        mask_dice(prediction, truth),
        mask_iou(prediction, truth),
        hd,
        label_acc,
    )
