# Copyright 2024, The SlackBox developers.
"""
Boxes, rasterization, and the confident/unconfident partition of an image.

Pixel ``(i, j)`` occupies ``[j, j + 1] x [i, i + 1]`` in continuous coordinates
and belongs to a region when its center ``(j + 0.5, i + 0.5)`` does.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage

from slackbox.constants import MAX_UNCONFIDENT_SCALE
from slackbox.errors import EmptyAnnotationError, InvalidScaleError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Box:
    """
    An axis-aligned rectangle in continuous image coordinates.

    :param x_lt: x of the top-left corner.
    :type x_lt: float
    :param y_lt: y of the top-left corner.
    :type y_lt: float
    :param x_rb: x of the bottom-right corner.
    :type x_rb: float
    :param y_rb: y of the bottom-right corner.
    :type y_rb: float
    :raises ValueError: if a coordinate is not finite or the area is not positive.
    """

    x_lt: float
    y_lt: float
    x_rb: float
    y_rb: float

    def __post_init__(self):
        for name in ("x_lt", "y_lt", "x_rb", "y_rb"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(
                value, (int, float, np.integer, np.floating)
            ):
                raise TypeError(f"{name} must be a number. {value!r} given.")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite. {value} given.")
            object.__setattr__(self, name, float(value))
        if not (self.x_lt < self.x_rb and self.y_lt < self.y_rb):
            raise ValueError(f"A box must have a positive area. {self} given.")

    @classmethod
    def from_center(cls, x_c, y_c, width, height):
        """
        Makes a box from its center and size.

        :rtype: Box
        """
        return cls(
            x_c - width / 2.0, y_c - height / 2.0, x_c + width / 2.0, y_c + height / 2.0
        )

    @classmethod
    def from_dict(cls, data):
        """
        Reads a box from its JSON object form.

        :param data: a mapping with the keys ``x_lt``, ``y_lt``, ``x_rb``, ``y_rb``.
        :type data: dict
        :rtype: Box
        """
        try:
            return cls(data["x_lt"], data["y_lt"], data["x_rb"], data["y_rb"])
        except KeyError as e:
            raise ValueError(f"Box is missing the coordinate {e.args[0]}.") from e

    def to_dict(self):
        """
        The JSON object form of this box.

        :rtype: dict
        """
        return {"x_lt": self.x_lt, "y_lt": self.y_lt, "x_rb": self.x_rb, "y_rb": self.y_rb}

    def as_tuple(self):
        return (self.x_lt, self.y_lt, self.x_rb, self.y_rb)

    @property
    def width(self):
        return self.x_rb - self.x_lt

    @property
    def height(self):
        return self.y_rb - self.y_lt

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        """
        The ``(x, y)`` center of the box.

        :rtype: tuple
        """
        return ((self.x_lt + self.x_rb) / 2.0, (self.y_lt + self.y_rb) / 2.0)

    def translate(self, dx, dy):
        """
        Shifts the box.

        :rtype: Box
        """
        return Box(self.x_lt + dx, self.y_lt + dy, self.x_rb + dx, self.y_rb + dy)

    def clip(self, height, width):
        """
        Clips the box to the image ``[0, width] x [0, height]``.

        :returns: the clipped box, or None if nothing of the box is left.
        :rtype: Box
        """
        x_lt = max(self.x_lt, 0.0)
        y_lt = max(self.y_lt, 0.0)
        x_rb = min(self.x_rb, float(width))
        y_rb = min(self.y_rb, float(height))
        if x_lt >= x_rb or y_lt >= y_rb:
            return None
        return Box(x_lt, y_lt, x_rb, y_rb)


def _pixel_centers(n):
    return np.arange(n, dtype=float) + 0.5


def _interval_mask(height, width, x_range, y_range):
    xs = _pixel_centers(width)
    ys = _pixel_centers(height)
    cols = (xs >= x_range[0]) & (xs <= x_range[1])
    rows = (ys >= y_range[0]) & (ys <= y_range[1])
    return rows[:, None] & cols[None, :]


def box_filled_mask(box, height, width):
    """
    Rasterizes a box: pixels whose centers lie inside the clipped box are 1.

    :param box: the annotation.
    :type box: Box
    :param height: image height in pixels.
    :type height: int
    :param width: image width in pixels.
    :type width: int
    :returns: the box-filled mask.
    :rtype: numpy.ndarray
    :raises EmptyAnnotationError: if no pixel center is covered.
    """
    clipped = box.clip(height, width)
    if clipped is None:
        raise EmptyAnnotationError(box, height, width)
    mask = _interval_mask(
        height, width, (clipped.x_lt, clipped.x_rb), (clipped.y_lt, clipped.y_rb)
    )
    if not mask.any():
        raise EmptyAnnotationError(box, height, width)
    return mask


def union_mask(boxes, height, width):
    """
    The union of the box-filled masks of several boxes.

    :rtype: numpy.ndarray
    """
    mask = np.zeros((height, width), dtype=bool)
    for box in boxes:
        mask |= box_filled_mask(box, height, width)
    return mask


def tightest_box(mask):
    """
    The smallest box containing every foreground pixel.

    :param mask: the binary mask.
    :type mask: numpy.ndarray
    :returns: the box, or None for an empty mask.
    :rtype: Box
    """
    mask = np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return Box(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def connected_components(mask):
    """
    Splits a mask into its 8-connected components.

    Components are ordered by the row-major position of their first pixel.

    :param mask: the binary mask.
    :type mask: numpy.ndarray
    :returns: one mask per component.
    :rtype: list
    """
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    values, first = np.unique(labels.ravel(), return_index=True)
    order = [value for _, value in sorted(zip(first, values)) if value != 0]
    return [labels == value for value in order]


def box_iou(a, b):
    """
    Intersection over union of two boxes in continuous coordinates.

    :rtype: float
    """
    inter_w = min(a.x_rb, b.x_rb) - max(a.x_lt, b.x_lt)
    inter_h = min(a.y_rb, b.y_rb) - max(a.y_lt, b.y_lt)
    if inter_w <= 0 or inter_h <= 0:
        return 0.0
    intersection = inter_w * inter_h
    return intersection / (a.area + b.area - intersection)


@dataclass(frozen=True, eq=False)
class RegionPartition:
    """
    The confident region and the four unconfident bands of one box.

    The five masks are pairwise disjoint and together cover the image.
    """

    confident: np.ndarray
    unconfident_left: np.ndarray
    unconfident_right: np.ndarray
    unconfident_top: np.ndarray
    unconfident_bottom: np.ndarray
    scale: float

    @property
    def bands(self):
        """
        The bands in priority order: left, right, top, bottom.

        :rtype: tuple
        """
        return (
            self.unconfident_left,
            self.unconfident_right,
            self.unconfident_top,
            self.unconfident_bottom,
        )

    @property
    def unconfident(self):
        """
        Union of the four bands.

        :rtype: numpy.ndarray
        """
        left, right, top, bottom = self.bands
        return left | right | top | bottom

    @property
    def shape(self):
        return self.confident.shape

    @classmethod
    def all_confident(cls, height, width, scale=0.0):
        """
        A partition without bands.

        :rtype: RegionPartition
        """
        empty = np.zeros((height, width), dtype=bool)
        return cls(
            np.ones((height, width), dtype=bool),
            empty,
            empty.copy(),
            empty.copy(),
            empty.copy(),
            scale,
        )


def check_scale(scale):
    """
    Validates an unconfident scale.

    :raises InvalidScaleError: if the scale is outside of ``[0, 0.5)``.
    """
    if not (0.0 <= scale < MAX_UNCONFIDENT_SCALE):
        raise InvalidScaleError(scale)


def region_partition(box, scale, height, width):
    """
    Splits the image into the confident region and four unconfident bands around the box edges.

    Each band straddles its edge by ``scale`` times the box size across the edge,
    and runs along the edge extended by the same fraction on both ends.
    Corners shared by two bands go to the first of left, right, top, bottom.

    :param box: the annotation.
    :type box: Box
    :param scale: the unconfident scale, in ``[0, 0.5)``.
    :type scale: float
    :param height: image height in pixels.
    :type height: int
    :param width: image width in pixels.
    :type width: int
    :rtype: RegionPartition
    :raises InvalidScaleError: if the scale is outside of ``[0, 0.5)``.
    """
    check_scale(scale)
    dw = scale * box.width
    dh = scale * box.height
    span_x = (box.x_lt - dw, box.x_rb + dw)
    span_y = (box.y_lt - dh, box.y_rb + dh)
    left = _interval_mask(height, width, (box.x_lt - dw, box.x_lt + dw), span_y)
    right = _interval_mask(height, width, (box.x_rb - dw, box.x_rb + dw), span_y)
    top = _interval_mask(height, width, span_x, (box.y_lt - dh, box.y_lt + dh))
    bottom = _interval_mask(height, width, span_x, (box.y_rb - dh, box.y_rb + dh))
    right &= ~left
    taken = left | right
    top &= ~taken
    taken |= top
    bottom &= ~taken
    taken |= bottom
    return RegionPartition(~taken, left, right, top, bottom, scale)
