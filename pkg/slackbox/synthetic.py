# Copyright 2024, The SlackBox developers.
"""
A synthetic dataset of smooth blobs on a flat background.

Each object is a rotated superellipse whose radius is modulated by a few low
frequency cosines, so the objects are smooth but not box shaped. Objects are bright
(about 0.7) on a dark background (about 0.3) with additive Gaussian noise.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from tqdm import tqdm

from slackbox.constants import DEFAULT_IMAGE_SIZE, MIN_IMAGE_SIZE
from slackbox.geometry import connected_components, tightest_box
from slackbox.io.manifest import DatasetManifest, ManifestEntry
from slackbox.io.pgm import write_image, write_mask
from slackbox.noise import NoiseParams, perturb_boxes

FOREGROUND_RANGE = (0.65, 0.75)
BACKGROUND_RANGE = (0.25, 0.35)
PIXEL_NOISE = 0.05
RADIUS_RANGE = (0.1, 0.2)
EXPONENT_RANGE = (1.5, 4.0)
MODULATION = 0.06
MODULATION_ORDERS = (2, 3, 4)
# empty pixels kept between two objects so they never merge into one component
OBJECT_GAP = 2
MAX_PLACEMENT_ATTEMPTS = 100


@dataclass(eq=False)
class SyntheticSample:
    """
    One generated image with its exact mask and tightest boxes.

    :param image: intensities in ``[0, 1]``.
    :type image: numpy.ndarray
    :param gt_mask: the rendered support of every object.
    :type gt_mask: numpy.ndarray
    :param clean_boxes: the tightest box of each connected component.
    :type clean_boxes: list
    """

    image_id: str
    image: np.ndarray
    gt_mask: np.ndarray
    clean_boxes: list

    @property
    def contrast(self):
        """
        Mean foreground intensity minus mean background intensity.

        :rtype: float
        """
        return float(self.image[self.gt_mask].mean() - self.image[~self.gt_mask].mean())


def _render_blob(rng, height, width):
    size = min(height, width)
    a, b = rng.uniform(*RADIUS_RANGE, size=2) * size
    exponent = rng.uniform(*EXPONENT_RANGE)
    theta = rng.uniform(0.0, np.pi)
    amplitudes = rng.uniform(-MODULATION, MODULATION, size=len(MODULATION_ORDERS))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(MODULATION_ORDERS))
    reach = max(a, b) * 1.5
    x_c = rng.uniform(min(reach, width / 2.0), max(width - reach, width / 2.0))
    y_c = rng.uniform(min(reach, height / 2.0), max(height - reach, height / 2.0))

    ys, xs = np.mgrid[0:height, 0:width] + 0.5
    dx = xs - x_c
    dy = ys - y_c
    u = (dx * np.cos(theta) + dy * np.sin(theta)) / a
    v = (-dx * np.sin(theta) + dy * np.cos(theta)) / b
    radius = (np.abs(u) ** exponent + np.abs(v) ** exponent) ** (1.0 / exponent)
    angle = np.arctan2(v, u)
    limit = np.ones_like(radius)
    for order, amplitude, phase in zip(MODULATION_ORDERS, amplitudes, phases):
        limit += amplitude * np.cos(order * angle + phase)
    blob = radius <= limit
    # the pixel grid can cut thin tips off; only the main body is kept
    components = connected_components(blob)
    if not components:
        return blob
    return max(components, key=np.count_nonzero)


def generate_sample(
    seed,
    height=DEFAULT_IMAGE_SIZE[0],
    width=DEFAULT_IMAGE_SIZE[1],
    n_objects=1,
    image_id="sample",
):
    """
    Renders one synthetic image.

    :param seed: anything :func:`numpy.random.default_rng` accepts.
    :type seed: int, list
    :param height: image height.
    :type height: int
    :param width: image width.
    :type width: int
    :param n_objects: 1 or 2; None draws it from the seed.
    :type n_objects: int
    :param image_id: the id stored in the sample.
    :type image_id: str
    :rtype: SyntheticSample
    :raises RuntimeError: if two objects could not be placed apart.
    """
    rng = np.random.default_rng(seed)
    if n_objects is None:
        n_objects = int(rng.integers(1, 3))
    if n_objects not in {1, 2}:
        raise ValueError(f"n_objects must be 1 or 2. {n_objects} given.")
    if height < MIN_IMAGE_SIZE or width < MIN_IMAGE_SIZE:
        raise ValueError(
            f"Images must be at least {MIN_IMAGE_SIZE}x{MIN_IMAGE_SIZE}. "
            f"{height}x{width} given."
        )

    gt_mask = np.zeros((height, width), dtype=bool)
    for _ in range(n_objects):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            blob = _render_blob(rng, height, width)
            if not blob.any():
                continue
            grown = ndimage.binary_dilation(
                gt_mask, structure=np.ones((3, 3), dtype=bool), iterations=OBJECT_GAP
            )
            if not (grown & blob).any():
                gt_mask |= blob
                break
        else:
            raise RuntimeError(
                f"Could not place {n_objects} separate objects in a {height}x{width} image."
            )

    foreground = rng.uniform(*FOREGROUND_RANGE)
    background = rng.uniform(*BACKGROUND_RANGE)
    image = np.where(gt_mask, foreground, background)
    image = np.clip(image + rng.normal(0.0, PIXEL_NOISE, size=image.shape), 0.0, 1.0)
    clean_boxes = [tightest_box(component) for component in connected_components(gt_mask)]
    return SyntheticSample(image_id, image, gt_mask, clean_boxes)


def sample_id(prefix, index):
    return f"{prefix}-{index:04d}"


def generate_split(
    root,
    n,
    seed,
    height=DEFAULT_IMAGE_SIZE[0],
    width=DEFAULT_IMAGE_SIZE[1],
    sigma=0.2,
    prefix="train",
    progress=False,
):
    """
    Generates and writes one split of the synthetic dataset.

    Sample ``i`` is rendered from the seed ``[seed, i]`` and its boxes are perturbed
    with ``NoiseParams(sigma, seed)``, so every sample is independent of the others.

    :param root: the split directory; ``images/``, ``masks/`` and the manifest go in it.
    :type root: str, os.PathLike
    :param n: number of images.
    :type n: int
    :param seed: the split seed.
    :type seed: int
    :param sigma: the noise level of the noisy boxes.
    :type sigma: float
    :param prefix: prefix of the image ids.
    :type prefix: str
    :param progress: show a progress bar.
    :type progress: bool
    :rtype: DatasetManifest
    """
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    params = NoiseParams(sigma=sigma, seed=seed)
    manifest = DatasetManifest(root, [], seed, float(sigma))
    for index in tqdm(range(n), desc=prefix, disable=not progress):
        image_id = sample_id(prefix, index)
        sample = generate_sample([seed, index], height, width, None, image_id)
        image_path = f"images/{image_id}.pgm"
        mask_path = f"masks/{image_id}.pgm"
        write_image(root / image_path, sample.image)
        write_mask(root / mask_path, sample.gt_mask)
        noisy = perturb_boxes(image_id, sample.clean_boxes, params, (height, width))
        manifest.entries.append(
            ManifestEntry(
                image_id, image_path, mask_path, height, width, sample.clean_boxes, noisy
            )
        )
    manifest.write()
    return manifest
