# Copyright 2024, The SlackBox developers.
"""
Synthetic tightness-free annotations.

A clean box with center ``(x_c, y_c)`` and size ``(w, h)`` becomes
``(x_c + dx * w, y_c + dy * h)`` with size ``((1 + dw) * w, (1 + dh) * h)`` where
``dx, dy, dw, dh`` are drawn from ``N(0, sigma^2)``.

Random numbers for box ``k`` of image ``image_id`` come from a Philox generator seeded
with ``SeedSequence([seed, blake2b_64(image_id), k])``, where ``blake2b_64`` is the
first 8 bytes (little endian) of the 8 byte BLAKE2b digest of the UTF-8 image id.
Every box therefore has its own stream and the result does not depend on the order
in which boxes or images are processed.
"""
from dataclasses import dataclass
import hashlib
import warnings

import numpy as np

from slackbox.constants import MAX_NOISE_RESAMPLES
from slackbox.errors import AnnotationResampledWarning, DestroyedAnnotationError
from slackbox.geometry import Box


@dataclass(frozen=True)
class NoiseParams:
    """
    Parameters of the box noise.

    :param sigma: the noise level.
    :type sigma: float
    :param seed: the root seed of every box stream.
    :type seed: int
    :param min_size: the smallest width or height a noisy box may have, in pixels.
    :type min_size: float
    """

    sigma: float = 0.2
    seed: int = 0
    min_size: float = 1.0

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise TypeError(f"seed must be an int. {self.seed!r} given.")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits. {self.seed} given.")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative. {self.sigma} given.")
        if not self.min_size >= 1:
            raise ValueError(f"min_size must be at least 1 pixel. {self.min_size} given.")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "min_size", float(self.min_size))

    def to_dict(self):
        return {"sigma": self.sigma, "seed": self.seed, "min_size": self.min_size}


def image_key(image_id):
    """
    A stable 64 bit integer for an image id.

    :param image_id: the image id.
    :type image_id: str
    :rtype: int
    """
    digest = hashlib.blake2b(str(image_id).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def box_stream(params, image_id, box_index):
    """
    The random generator owned by one box.

    :param params: the noise parameters; only the seed is used.
    :type params: NoiseParams
    :param image_id: the image the box belongs to.
    :type image_id: str
    :param box_index: the position of the box in its image's list.
    :type box_index: int
    :rtype: numpy.random.Generator
    """
    sequence = np.random.SeedSequence([params.seed, image_key(image_id), int(box_index)])
    return np.random.Generator(np.random.Philox(sequence))


def sample_draws(params, rng):
    """
    Draws ``(dx, dy, dw, dh)``.

    :rtype: numpy.ndarray
    """
    return rng.normal(0.0, params.sigma, size=4)


def perturb_box(box, params, draws=None, image_size=None, rng=None):
    """
    Shifts and scales a box.

    The edges are computed as ``x_lt + dx * w - dw * w / 2`` and
    ``x_rb + dx * w + dw * w / 2`` (likewise for y), which is the center and size form
    rearranged so that zero draws give back the input exactly. Sizes below
    ``params.min_size`` are raised to it around the noisy center. With an image size the
    box is then clipped to the image.

    :param box: the clean box.
    :type box: Box
    :param params: the noise parameters.
    :type params: NoiseParams
    :param draws: ``(dx, dy, dw, dh)``; drawn from ``rng`` when not given.
    :type draws: tuple
    :param image_size: ``(height, width)`` to clip to.
    :type image_size: tuple
    :param rng: the generator to draw from when ``draws`` is None.
    :type rng: numpy.random.Generator
    :rtype: Box
    :raises DestroyedAnnotationError: if less than one full pixel of the box stays in the image.
    """
    if draws is None:
        if rng is None:
            raise ValueError("Either draws or a random generator must be given.")
        draws = sample_draws(params, rng)
    dx, dy, dw, dh = (float(d) for d in draws)
    w, h = box.width, box.height
    x_lt = box.x_lt + dx * w - dw * w / 2.0
    x_rb = box.x_rb + dx * w + dw * w / 2.0
    y_lt = box.y_lt + dy * h - dh * h / 2.0
    y_rb = box.y_rb + dy * h + dh * h / 2.0
    x_lt, x_rb = _enforce_size(x_lt, x_rb, params.min_size)
    y_lt, y_rb = _enforce_size(y_lt, y_rb, params.min_size)
    noisy = Box(x_lt, y_lt, x_rb, y_rb)
    if image_size is None:
        return noisy
    height, width = image_size
    clipped = noisy.clip(height, width)
    if clipped is None or clipped.width < 1.0 or clipped.height < 1.0:
        raise DestroyedAnnotationError(noisy)
    return clipped


def _enforce_size(low, high, min_size):
    if high - low >= min_size:
        return low, high
    center = (low + high) / 2.0
    return center - min_size / 2.0, center + min_size / 2.0


def perturb_boxes(image_id, boxes, params, image_size=None):
    """
    Perturbs every box of one image with its own stream.

    A box destroyed by clipping is drawn again from the same stream up to
    ``MAX_NOISE_RESAMPLES`` times.

    :rtype: list
    :raises DestroyedAnnotationError: if every draw destroyed the box.
    """
    noisy = []
    for index, box in enumerate(boxes):
        rng = box_stream(params, image_id, index)
        for attempt in range(MAX_NOISE_RESAMPLES + 1):
            try:
                noisy.append(perturb_box(box, params, image_size=image_size, rng=rng))
                break
            except DestroyedAnnotationError as e:
                last_error = e
        else:
            raise DestroyedAnnotationError(last_error.box, MAX_NOISE_RESAMPLES + 1)
        if attempt:
            warnings.warn(
                AnnotationResampledWarning(
                    f"Box {index} of image {image_id} was drawn {attempt + 1} times."
                ),
                stacklevel=2,
            )
    return noisy


def perturb_dataset(clean, params, image_sizes=None):
    """
    Perturbs the boxes of a whole dataset.

    :param clean: ``(image_id, boxes)`` pairs.
    :type clean: list
    :param params: the noise parameters.
    :type params: NoiseParams
    :param image_sizes: optional ``image_id -> (height, width)`` used to clip boxes.
    :type image_sizes: dict
    :returns: ``(image_id, noisy boxes)`` pairs in the input order.
    :rtype: list
    """
    image_sizes = image_sizes or {}
    return [
        (image_id, perturb_boxes(image_id, boxes, params, image_sizes.get(image_id)))
        for image_id, boxes in clean
    ]
