# Copyright 2024, The SlackBox developers.
"""
Central finite differences for checking the hand written backward passes.

The objectives are only piecewise smooth: the proxy map picks arg-maxima, the
monotonicity hinge switches at zero, and the model has a ReLU and a clamp. A
comparison is only meaningful away from those switches, which :func:`is_tie_free`
and :func:`hidden_margin` measure.
"""
import numpy as np

from slackbox.constants import SCORE_FLOOR
from slackbox.geometry import region_partition
from slackbox.losses import LossMode, mc_gradient_maps
from slackbox.proxy import clamp_scores, proxy_forward


def numerical_gradient(func, x, eps=1e-6):
    """
    ``(f(x + eps) - f(x - eps)) / (2 eps)`` for every entry of ``x``.

    :param func: maps an array shaped like ``x`` to a float.
    :type func: callable
    :param x: the point to differentiate at; not modified.
    :type x: numpy.ndarray
    :param eps: the step.
    :type eps: float
    :rtype: numpy.ndarray
    """
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    flat = x.ravel()
    grad_flat = grad.ravel()
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + eps
        plus = func(x)
        flat[index] = original - eps
        minus = func(x)
        flat[index] = original
        grad_flat[index] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic, numeric, floor=1e-5):
    """
    The largest ``|a - n| / max(|a|, |n|, floor)`` over all entries.

    :param floor: keeps entries that are both near zero from dominating.
    :type floor: float
    :rtype: float
    """
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if analytic.shape != numeric.shape:
        raise ValueError(f"Shapes differ: {analytic.shape} vs {numeric.shape}.")
    if analytic.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _top_two_gap(values, axis):
    ordered = np.sort(values, axis=axis)
    if axis == 1:
        return np.min(ordered[:, -1] - ordered[:, -2])
    return np.min(ordered[-1, :] - ordered[-2, :])


def is_tie_free(scores, boxes=(), scale=0.0, mode=LossMode.LB, margin=1e-4):
    """
    Whether a score map is at least ``margin`` away from every switch of the loss.

    Checks the gap between the two largest scores of each row and column, the
    distance to the clamp, and in ``MC`` mode the outward differences inside the bands.

    :param scores: the score map.
    :type scores: numpy.ndarray
    :param boxes: the labels, used for the bands.
    :type boxes: list
    :param scale: the unconfident scale.
    :type scale: float
    :param mode: the loss mode.
    :type mode: LossMode
    :param margin: the required distance.
    :type margin: float
    :rtype: bool
    """
    scores = np.asarray(scores, dtype=float)
    clamped = clamp_scores(scores)
    if np.any(clamped != scores):
        return False
    if np.any(scores < SCORE_FLOOR + margin) or np.any(scores > 1.0 - SCORE_FLOOR - margin):
        return False
    if _top_two_gap(scores, 1) <= margin or _top_two_gap(scores, 0) <= margin:
        return False
    if LossMode(mode) != LossMode.MC:
        return True
    proxy = proxy_forward(scores)
    height, width = scores.shape
    differences = mc_gradient_maps(proxy)
    for box in boxes:
        partition = region_partition(box, scale, height, width)
        for difference, band in zip(differences, partition.bands):
            if np.any(np.abs(difference[band]) <= margin):
                return False
    return True


def hidden_margin(features, params):
    """
    The smallest ``|pre-activation|`` of the hidden layer over all pixels.

    :param features: the feature stack of an image.
    :type features: FeatureStack
    :param params: the model weights.
    :type params: ModelParams
    :rtype: float
    """
    z1 = features.values @ params.w1.T + params.b1
    return float(np.min(np.abs(z1)))
