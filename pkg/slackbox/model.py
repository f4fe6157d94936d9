# Copyright 2024, The SlackBox developers.
"""
A small per-pixel segmentation model with a hand written backward pass.

Each pixel is described by a fixed stack of features (intensity, two box blurs,
normalized coordinates, and a constant) and scored by a two layer perceptron shared
by all pixels. This stands in for a convolutional backbone: the blurred features give
it enough context to grow thorns toward wrong box edges, and every derivative can be
checked by finite differences.

Checkpoints are little endian: 8 bytes of magic, a ``uint32`` layout version, a
``uint32`` parameter count, then ``float64`` values of W1 (row major), b1, W2, b2.
"""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.special import expit

from slackbox.constants import (
    ADAM_BETAS,
    ADAM_EPSILON,
    BLUR_RADII,
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    LEARNING_RATE,
    N_FEATURES,
    N_HIDDEN,
    SCORE_FLOOR,
    WEIGHT_DECAY,
)
from slackbox.errors import MalformedFileError
from slackbox.utilities import check_same_shape

_HEADER_DTYPE = np.dtype([("magic", "S8"), ("version", "<u4"), ("count", "<u4")])


class FeatureStack:
    """
    The per-pixel features of one image, shape ``(H, W, 6)``.

    :param values: the feature array.
    :type values: numpy.ndarray
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3 or values.shape[2] != N_FEATURES:
            raise ValueError(
                f"Features must have shape (H, W, {N_FEATURES}). {values.shape} given."
            )
        self._values = values

    @classmethod
    def from_image(cls, image):
        """
        Computes the features of a grayscale image.

        :param image: intensities in ``[0, 1]``, shape ``(H, W)``.
        :type image: numpy.ndarray
        :rtype: FeatureStack
        """
        image = np.asarray(image, dtype=float)
        if image.ndim != 2:
            raise ValueError(f"A grayscale image must be 2D. Shape {image.shape} given.")
        height, width = image.shape
        blurs = [
            ndimage.uniform_filter(image, size=2 * radius + 1, mode="nearest")
            for radius in BLUR_RADII
        ]
        xs = np.arange(width, dtype=float) / max(width - 1, 1)
        ys = np.arange(height, dtype=float) / max(height - 1, 1)
        grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
        values = np.stack(
            [image] + blurs + [grid_x, grid_y, np.ones_like(image)], axis=-1
        )
        return cls(values)

    @property
    def values(self):
        return self._values

    @property
    def shape(self):
        """
        The ``(H, W)`` of the image.

        :rtype: tuple
        """
        return self._values.shape[:2]


def _as_features(image):
    if isinstance(image, FeatureStack):
        return image
    return FeatureStack.from_image(image)


@dataclass(eq=False)
class ModelParams:
    """
    The weights of the per-pixel perceptron, or gradients with the same layout.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    NAMES = ("w1", "b1", "w2", "b2")
    SHAPES = ((N_HIDDEN, N_FEATURES), (N_HIDDEN,), (1, N_HIDDEN), (1,))

    def __post_init__(self):
        for name, shape in zip(self.NAMES, self.SHAPES):
            value = np.array(getattr(self, name), dtype=float)
            if value.shape != shape:
                raise ValueError(f"{name} must have shape {shape}. {value.shape} given.")
            setattr(self, name, value)

    @classmethod
    def initialize(cls, seed):
        """
        Uniform weights in ``+/- 1 / sqrt(fan_in)``.

        :param seed: the seed of the initialization.
        :type seed: int
        :rtype: ModelParams
        """
        rng = np.random.default_rng(seed)
        bound1 = 1.0 / np.sqrt(N_FEATURES)
        bound2 = 1.0 / np.sqrt(N_HIDDEN)
        return cls(
            rng.uniform(-bound1, bound1, size=(N_HIDDEN, N_FEATURES)),
            rng.uniform(-bound1, bound1, size=N_HIDDEN),
            rng.uniform(-bound2, bound2, size=(1, N_HIDDEN)),
            rng.uniform(-bound2, bound2, size=1),
        )

    @classmethod
    def zeros(cls):
        return cls(*(np.zeros(shape) for shape in cls.SHAPES))

    def arrays(self):
        return [getattr(self, name) for name in self.NAMES]

    def flatten(self):
        """
        Every value in checkpoint order.

        :rtype: numpy.ndarray
        """
        return np.concatenate([array.ravel() for array in self.arrays()])

    @classmethod
    def unflatten(cls, flat):
        """
        The inverse of :meth:`flatten`.

        :rtype: ModelParams
        """
        flat = np.asarray(flat, dtype=float)
        if flat.size != cls.size():
            raise ValueError(f"Expected {cls.size()} values. {flat.size} given.")
        arrays = []
        start = 0
        for shape in cls.SHAPES:
            count = int(np.prod(shape))
            arrays.append(flat[start : start + count].reshape(shape))
            start += count
        return cls(*arrays)

    @classmethod
    def size(cls):
        return sum(int(np.prod(shape)) for shape in cls.SHAPES)

    def copy(self):
        return ModelParams(*(array.copy() for array in self.arrays()))

    def __add__(self, other):
        return ModelParams(*(a + b for a, b in zip(self.arrays(), other.arrays())))

    def scaled(self, factor):
        return ModelParams(*(a * factor for a in self.arrays()))


def _forward_cache(features, params):
    f = features.values
    z1 = f @ params.w1.T + params.b1
    a1 = np.maximum(z1, 0.0)
    z2 = (a1 @ params.w2.T)[..., 0] + params.b2[0]
    raw = expit(z2)
    return f, z1, a1, raw


def forward(image, params):
    """
    Scores every pixel: ``sigmoid(W2 relu(W1 f + b1) + b2)``, clamped.

    :param image: a grayscale image or its features.
    :type image: numpy.ndarray, FeatureStack
    :param params: the model weights.
    :type params: ModelParams
    :returns: the score map.
    :rtype: numpy.ndarray
    """
    _, _, _, raw = _forward_cache(_as_features(image), params)
    return np.clip(raw, SCORE_FLOOR, 1.0 - SCORE_FLOOR)


def backward(image, params, upstream):
    """
    Gradients of the loss with respect to every weight.

    The clamp passes no gradient where it is active; ReLU passes none at 0.

    :param image: a grayscale image or its features.
    :type image: numpy.ndarray, FeatureStack
    :param params: the model weights.
    :type params: ModelParams
    :param upstream: ``dL/dm``.
    :type upstream: numpy.ndarray
    :rtype: ModelParams
    """
    features = _as_features(image)
    upstream = np.asarray(upstream, dtype=float)
    check_same_shape(np.empty(features.shape), upstream, what="upstream gradient")
    f, z1, a1, raw = _forward_cache(features, params)
    inside = (raw > SCORE_FLOOR) & (raw < 1.0 - SCORE_FLOOR)
    dz2 = np.where(inside, upstream * raw * (1.0 - raw), 0.0)
    grad_w2 = np.einsum("hw,hwk->k", dz2, a1)[None, :]
    grad_b2 = np.array([dz2.sum()])
    dz1 = dz2[..., None] * params.w2[0] * (z1 > 0.0)
    grad_w1 = np.einsum("hwk,hwf->kf", dz1, f)
    grad_b1 = dz1.sum(axis=(0, 1))
    return ModelParams(grad_w1, grad_b1, grad_w2, grad_b2)


class AdamW:
    """
    Adam with decoupled weight decay.

    :param learning_rate: the step size.
    :type learning_rate: float
    :param weight_decay: the decoupled decay rate.
    :type weight_decay: float
    :param betas: moment decay rates.
    :type betas: tuple
    :param epsilon: denominator guard.
    :type epsilon: float
    """

    def __init__(
        self,
        learning_rate=LEARNING_RATE,
        weight_decay=WEIGHT_DECAY,
        betas=ADAM_BETAS,
        epsilon=ADAM_EPSILON,
    ):
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.betas = betas
        self.epsilon = epsilon
        self.first_moment = ModelParams.zeros()
        self.second_moment = ModelParams.zeros()
        self.step_count = 0

    def step(self, params, grads):
        """
        Applies one update.

        :param params: the weights; not modified.
        :type params: ModelParams
        :param grads: the gradients.
        :type grads: ModelParams
        :returns: the updated weights.
        :rtype: ModelParams
        """
        beta1, beta2 = self.betas
        self.step_count += 1
        bias1 = 1.0 - beta1**self.step_count
        bias2 = 1.0 - beta2**self.step_count
        updated = []
        for name in ModelParams.NAMES:
            value = getattr(params, name)
            grad = getattr(grads, name)
            m = beta1 * getattr(self.first_moment, name) + (1.0 - beta1) * grad
            v = beta2 * getattr(self.second_moment, name) + (1.0 - beta2) * grad**2
            setattr(self.first_moment, name, m)
            setattr(self.second_moment, name, v)
            value = value * (1.0 - self.learning_rate * self.weight_decay)
            value = value - self.learning_rate * (m / bias1) / (
                np.sqrt(v / bias2) + self.epsilon
            )
            updated.append(value)
        return ModelParams(*updated)


def optimizer_step(params, grads, state):
    """
    One AdamW update; ``state`` accumulates the moments.

    :rtype: ModelParams
    """
    return state.step(params, grads)


def save_checkpoint(params, path):
    """
    Writes the weights in the checkpoint layout.

    :param params: the weights.
    :type params: ModelParams
    :param path: where to write.
    :type path: str, os.PathLike
    """
    flat = params.flatten()
    header = np.array([(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, flat.size)], dtype=_HEADER_DTYPE)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(flat.astype("<f8").tobytes())


def load_checkpoint(path):
    """
    Reads weights written by :func:`save_checkpoint`.

    :rtype: ModelParams
    :raises MalformedFileError: if the file is not a checkpoint of this layout.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER_DTYPE.itemsize:
        raise MalformedFileError(path, "file too short for a checkpoint header", len(data))
    header = np.frombuffer(data, dtype=_HEADER_DTYPE, count=1)[0]
    if header["magic"] != CHECKPOINT_MAGIC:
        raise MalformedFileError(path, "not a slackbox checkpoint", 0)
    if header["version"] != CHECKPOINT_VERSION:
        raise MalformedFileError(
            path, f"unsupported checkpoint version {header['version']}", 8
        )
    count = int(header["count"])
    body = data[_HEADER_DTYPE.itemsize :]
    if count != ModelParams.size() or len(body) != 8 * count:
        raise MalformedFileError(
            path,
            f"expected {ModelParams.size()} float64 values, found {len(body) // 8}",
            _HEADER_DTYPE.itemsize,
        )
    return ModelParams.unflatten(np.frombuffer(body, dtype="<f8"))
