# Copyright 2024, The SlackBox developers.
"""
Training objectives on the proxy map.

The consistency constraint is a soft Dice agreement with the box-filled mask on the
confident region. The monotonicity constraint is a hinge on the outward first-order
differences of the proxy map inside each unconfident band: moving away from the box
center the response may stay level or fall, never rise.
"""
from collections import namedtuple
from dataclasses import asdict, dataclass, fields
from enum import Enum, unique

import numpy as np

from slackbox.constants import DICE_EPSILON
from slackbox.errors import DegenerateMapError, NoSupervisedPixelsError
from slackbox.geometry import RegionPartition, check_scale, region_partition, union_mask
from slackbox.proxy import ProxyMap, proxy_backward, proxy_forward
from slackbox.utilities import as_mask, check_same_shape


@unique
class LossMode(str, Enum):
    """
    How the unconfident bands are treated.

    :param value: the name used in configuration files and reports.
    :type value: str
    :param description: The human readable description of the mode.
    :type description: str
    """

    def __new__(cls, value, description):
        obj = str.__new__(cls, value)
        obj._value_ = value
        obj.description = description
        return obj

    def __str__(self):
        return self.value

    LB = ("LB", "consistency constraint over the whole image")
    EXCLUSION = ("EXCLUSION", "consistency constraint on the confident region only")
    MC = (
        "MC",
        "consistency constraint on the confident region, monotonicity constraint on the bands",
    )


@dataclass(frozen=True)
class LossBreakdown:
    """
    Every term of the objective for one image, or averaged over many.
    """

    cc: float
    mc_left: float = 0.0
    mc_right: float = 0.0
    mc_top: float = 0.0
    mc_bottom: float = 0.0
    mc_total: float = 0.0
    total: float = 0.0

    CSV_HEADER = ("step", "mode", "cc", "mc_l", "mc_r", "mc_t", "mc_b", "mc_total", "total")

    def as_row(self, step, mode):
        """
        The CSV row of this breakdown.

        :param step: the step (or epoch) number.
        :type step: int
        :param mode: the loss mode that produced it.
        :type mode: LossMode
        :rtype: list
        """
        return [step, str(mode)] + [repr(float(getattr(self, f.name))) for f in fields(self)]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def mean(cls, breakdowns):
        """
        Averages breakdowns field by field, in the order given.

        :rtype: LossBreakdown
        """
        breakdowns = list(breakdowns)
        if not breakdowns:
            raise ValueError("Can not average zero loss breakdowns.")
        values = {}
        for field in fields(cls):
            total = 0.0
            for breakdown in breakdowns:
                total += getattr(breakdown, field.name)
            values[field.name] = total / len(breakdowns)
        return cls(**values)


class MonotonicityTerms(namedtuple("MonotonicityTerms", ["left", "right", "top", "bottom"])):
    """
    The monotonicity loss of each band of one partition.
    """

    __slots__ = ()

    @property
    def total(self):
        return self.left + self.right + self.top + self.bottom


def _values(proxy):
    if isinstance(proxy, ProxyMap):
        return proxy.values
    return np.asarray(proxy, dtype=float)


def cc_loss(proxy, box_mask, support):
    """
    The negative soft Dice between the proxy map and the box-filled mask on a support.

    ``L = -(2 * sum(b * p) + eps) / (sum(b) + sum(p) + eps)`` with every sum over the support.

    :param proxy: the proxy map ``p``.
    :type proxy: ProxyMap
    :param box_mask: the box-filled mask ``b``.
    :type box_mask: numpy.ndarray
    :param support: the pixels the constraint applies to.
    :type support: numpy.ndarray
    :returns: the loss, and its gradient with respect to ``p`` (zero off the support).
    :rtype: tuple
    :raises NoSupervisedPixelsError: if the support is empty.
    """
    p = _values(proxy)
    b = as_mask(box_mask)
    support = as_mask(support)
    check_same_shape(p, b, support)
    if not support.any():
        raise NoSupervisedPixelsError()
    b = np.where(support, b, False).astype(float)
    p_s = np.where(support, p, 0.0)
    numerator = 2.0 * np.sum(b * p_s) + DICE_EPSILON
    denominator = np.sum(b) + np.sum(p_s) + DICE_EPSILON
    loss = -numerator / denominator
    grad = -(2.0 * b * denominator - numerator) / denominator**2
    grad = np.where(support, grad, 0.0)
    return float(loss), grad


def mc_gradient_maps(proxy):
    """
    The four outward first-order difference maps of the proxy map.

    In order: ``p[i,j] - p[i,j+1]``, ``p[i,j] - p[i,j-1]``, ``p[i,j] - p[i+1,j]``,
    ``p[i,j] - p[i-1,j]``. Entries whose neighbor is outside the image are 0.

    :param proxy: the proxy map.
    :type proxy: ProxyMap
    :rtype: tuple
    :raises DegenerateMapError: if either dimension is smaller than 2.
    """
    p = _values(proxy)
    if p.ndim != 2 or p.shape[0] < 2 or p.shape[1] < 2:
        raise DegenerateMapError(p.shape)
    x_minus = np.zeros_like(p)
    x_plus = np.zeros_like(p)
    y_minus = np.zeros_like(p)
    y_plus = np.zeros_like(p)
    x_minus[:, :-1] = p[:, :-1] - p[:, 1:]
    x_plus[:, 1:] = p[:, 1:] - p[:, :-1]
    y_minus[:-1, :] = p[:-1, :] - p[1:, :]
    y_plus[1:, :] = p[1:, :] - p[:-1, :]
    return x_minus, x_plus, y_minus, y_plus


# (row step, column step) from a band pixel to its inner neighbor
_INNER_STEP = ((0, 1), (0, -1), (1, 0), (-1, 0))


def _band_hinge(difference, band, inner_step, weight):
    active = band & (difference > 0.0)
    loss = float(np.sum(difference[active])) * weight
    grad = np.zeros(difference.shape)
    rows, cols = np.nonzero(active)
    grad[rows, cols] += weight
    # the border entries are never active, so the inner neighbor is in range
    np.add.at(grad, (rows + inner_step[0], cols + inner_step[1]), -weight)
    return loss, grad


def mc_loss(proxy, partition, normalize=True):
    """
    The monotonicity constraint of one box's bands.

    Each band sums ``max(outer - inner, 0)`` over its pixels, where ``outer`` is the pixel
    and ``inner`` its neighbor one step toward the box. When ``normalize`` is set each
    band sum is divided by the band's pixel count.

    :param proxy: the proxy map.
    :type proxy: ProxyMap
    :param partition: the regions of one box.
    :type partition: RegionPartition
    :param normalize: average over band pixels instead of summing.
    :type normalize: bool
    :returns: the per band terms, and the gradient with respect to ``p``.
    :rtype: tuple
    """
    p = _values(proxy)
    check_same_shape(p, partition.confident, what="partition")
    differences = mc_gradient_maps(p)
    terms = []
    grad = np.zeros_like(p)
    for difference, band, step in zip(differences, partition.bands, _INNER_STEP):
        count = int(np.count_nonzero(band))
        if count == 0:
            terms.append(0.0)
            continue
        weight = 1.0 / count if normalize else 1.0
        loss, band_grad = _band_hinge(difference, band, step, weight)
        terms.append(loss)
        grad += band_grad
    return MonotonicityTerms(*terms), grad


def _box_partition(box, scale, height, width, min_band_px):
    if 2.0 * scale * min(box.width, box.height) < min_band_px:
        return RegionPartition.all_confident(height, width, scale)
    return region_partition(box, scale, height, width)


def total_loss(
    scores,
    boxes,
    scale,
    mode,
    normalize_mc=True,
    cc_weight=1.0,
    mc_weight=1.0,
    min_band_px=1.0,
):
    """
    The full objective for one image and its gradient with respect to the score map.

    The box mask is the union of all boxes. Outside of ``LB`` mode the consistency
    support is the intersection of every box's confident region, and in ``MC`` mode
    the monotonicity terms of every box's own bands are added. A box whose bands
    would be narrower than ``min_band_px`` pixels gets no bands.

    :param scores: the score map ``m``.
    :type scores: numpy.ndarray
    :param boxes: the current labels of the image.
    :type boxes: list
    :param scale: the unconfident scale.
    :type scale: float
    :param mode: how the bands are treated.
    :type mode: LossMode
    :param normalize_mc: average each band's hinge sum over its pixels.
    :type normalize_mc: bool
    :returns: the loss terms and ``dL/dm``.
    :rtype: tuple
    """
    mode = LossMode(mode)
    boxes = list(boxes)
    if not boxes:
        raise ValueError("At least one box is needed to compute the loss.")
    check_scale(scale)
    scores = np.asarray(scores, dtype=float)
    height, width = scores.shape
    proxy = proxy_forward(scores)
    box_mask = union_mask(boxes, height, width)

    if mode == LossMode.LB:
        partitions = []
        support = np.ones((height, width), dtype=bool)
    else:
        partitions = [
            _box_partition(box, scale, height, width, min_band_px) for box in boxes
        ]
        support = np.logical_and.reduce([part.confident for part in partitions])
    cc, grad_p = cc_loss(proxy, box_mask, support)
    grad_p = cc_weight * grad_p

    mc_terms = [0.0, 0.0, 0.0, 0.0]
    if mode == LossMode.MC:
        for partition in partitions:
            terms, grad = mc_loss(proxy, partition, normalize=normalize_mc)
            mc_terms = [acc + term for acc, term in zip(mc_terms, terms)]
            grad_p += mc_weight * grad
    mc_total = sum(mc_terms)
    breakdown = LossBreakdown(
        cc=cc,
        mc_left=mc_terms[0],
        mc_right=mc_terms[1],
        mc_top=mc_terms[2],
        mc_bottom=mc_terms[3],
        mc_total=mc_total,
        total=cc_weight * cc + mc_weight * mc_total,
    )
    return breakdown, proxy_backward(scores, grad_p, proxy)
