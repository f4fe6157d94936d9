# Copyright 2024, The SlackBox developers.
"""
The proxy map: the outer product of the row maxima and column maxima of a score map.

A box-filled mask is itself such an outer product, so the proxy map can be compared
with box labels directly while the object shape inside the box stays free.
"""
from dataclasses import dataclass

import numpy as np

from slackbox.constants import SCORE_FLOOR
from slackbox.utilities import check_same_shape


def clamp_scores(scores):
    """
    Clamps a score map to ``[SCORE_FLOOR, 1 - SCORE_FLOOR]``.

    :param scores: per-pixel foreground probabilities.
    :type scores: numpy.ndarray
    :rtype: numpy.ndarray
    """
    return np.clip(np.asarray(scores, dtype=float), SCORE_FLOOR, 1.0 - SCORE_FLOOR)


@dataclass(frozen=True, eq=False)
class ProxyMap:
    """
    A proxy map together with the argmax indices needed for its backward pass.

    Ties are broken toward the lowest index.
    """

    values: np.ndarray
    row_max: np.ndarray
    col_max: np.ndarray
    row_argmax: np.ndarray
    col_argmax: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def proxy_forward(scores):
    """
    Computes ``p[i, j] = max(m[i, :]) * max(m[:, j])``.

    :param scores: the score map ``m``; clamped before use.
    :type scores: numpy.ndarray
    :rtype: ProxyMap
    """
    scores = clamp_scores(scores)
    row_argmax = np.argmax(scores, axis=1)
    col_argmax = np.argmax(scores, axis=0)
    row_max = scores[np.arange(scores.shape[0]), row_argmax]
    col_max = scores[col_argmax, np.arange(scores.shape[1])]
    return ProxyMap(
        np.outer(row_max, col_max), row_max, col_max, row_argmax, col_argmax
    )


def proxy_backward(scores, upstream, proxy=None):
    """
    Pulls a gradient with respect to the proxy map back onto the score map.

    Each row (column) sends its whole sensitivity to its recorded argmax element.

    :param scores: the score map the proxy map was computed from.
    :type scores: numpy.ndarray
    :param upstream: ``dL/dp``.
    :type upstream: numpy.ndarray
    :param proxy: the forward result, recomputed when not given.
    :type proxy: ProxyMap
    :returns: ``dL/dm``.
    :rtype: numpy.ndarray
    :raises ShapeMismatchError: if ``upstream`` and ``scores`` differ in shape.
    """
    scores = np.asarray(scores, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    check_same_shape(scores, upstream, what="upstream gradient")
    if proxy is None:
        proxy = proxy_forward(scores)
    height, width = scores.shape
    grad_row_max = upstream @ proxy.col_max
    grad_col_max = upstream.T @ proxy.row_max
    grad = np.zeros_like(scores)
    np.add.at(grad, (np.arange(height), proxy.row_argmax), grad_row_max)
    np.add.at(grad, (proxy.col_argmax, np.arange(width)), grad_col_max)
    return grad
