# Copyright 2024, The SlackBox developers.
"""
The training loop: losses, label correction, and the model wired together.
"""
from dataclasses import dataclass, field
import json

import numpy as np
from tqdm import tqdm

from slackbox.constants import (
    BINARIZE_THRESHOLD,
    CONFIG_VERSION,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_NOISE_LEVEL,
    LEARNING_RATE,
    WEIGHT_DECAY,
)
from slackbox.correction import CorrectionConfig, run_correction
from slackbox.errors import ConfigurationError
from slackbox.io.manifest import DatasetManifest
from slackbox.io.pgm import read_image, read_mask
from slackbox.losses import LossBreakdown, LossMode, total_loss
from slackbox.metrics import evaluate_masks, label_accuracy
from slackbox.model import (
    AdamW,
    FeatureStack,
    ModelParams,
    backward,
    forward,
    load_checkpoint,
)
from slackbox.noise import NoiseParams
from slackbox.utilities import make_prop_pointer


def _validate_positive(self, value):
    if value < 1:
        raise ValueError(f"The value must be at least 1. {value} given.")


def _validate_non_negative(self, value):
    if not value >= 0.0:
        raise ValueError(f"The value must be non-negative. {value} given.")


def _validate_learning_rate(self, value):
    if not value > 0.0:
        raise ValueError(f"learning_rate must be positive. {value} given.")


def _validate_threshold(self, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"threshold must be in (0, 1). {value} given.")


def _validate_percentile(self, value):
    if value is not None and not 0.0 < value <= 100.0:
        raise ValueError(f"hd_percentile must be in (0, 100]. {value} given.")


class TrainConfig:
    """
    Every setting of one training run.

    The JSON form is flat: the correction settings appear as ``tau``,
    ``interval_epochs``, ``lambda0``, ``merge_rule`` and ``anchored``, the noise
    settings as ``sigma`` and ``noise_seed``.

    :param kwargs: any field of :meth:`to_dict` except ``config_version``.
    """

    _FIELDS = (
        "epochs",
        "batch_size",
        "mode",
        "lc_enabled",
        "seed",
        "normalize_mc",
        "learning_rate",
        "weight_decay",
        "cc_weight",
        "mc_weight",
        "threshold",
        "min_band_px",
        "use_clean_labels",
        "hd_percentile",
    )
    _CORRECTION_FIELDS = ("tau", "interval_epochs", "lambda0", "merge_rule", "anchored")
    _NOISE_FIELDS = {"sigma": "sigma", "noise_seed": "seed"}

    def __init__(self, **kwargs):
        self.epochs = DEFAULT_EPOCHS
        self.batch_size = DEFAULT_BATCH_SIZE
        self.mode = LossMode.MC
        self.lc_enabled = True
        self.seed = 0
        self.normalize_mc = True
        self.learning_rate = LEARNING_RATE
        self.weight_decay = WEIGHT_DECAY
        self.cc_weight = 1.0
        self.mc_weight = 1.0
        self.threshold = BINARIZE_THRESHOLD
        self.min_band_px = 1.0
        self.use_clean_labels = False
        self.hd_percentile = None
        self.correction = CorrectionConfig()
        self.noise = NoiseParams(sigma=DEFAULT_NOISE_LEVEL)
        self.update(**kwargs)

    def update(self, **kwargs):
        """
        Sets fields by their JSON names.

        :raises ConfigurationError: for unknown names or invalid values.
        """
        noise = self.noise.to_dict()
        for key, value in kwargs.items():
            try:
                if key in self._FIELDS:
                    setattr(self, key, value)
                elif key in self._CORRECTION_FIELDS:
                    setattr(self.correction, key, value)
                elif key in self._NOISE_FIELDS:
                    noise[self._NOISE_FIELDS[key]] = value
                else:
                    raise ConfigurationError(f"Unknown configuration field: {key}.")
            except (TypeError, ValueError) as e:
                if isinstance(e, ConfigurationError):
                    raise
                raise ConfigurationError(f"{key}: {e}") from e
        try:
            self.noise = NoiseParams(**noise)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"noise: {e}") from e
        return self

    @make_prop_pointer("_epochs", int, validator=_validate_positive)
    def epochs(self):
        """
        Number of passes over the training set.

        :rtype: int
        """
        pass

    @make_prop_pointer("_batch_size", int, validator=_validate_positive)
    def batch_size(self):
        """
        Number of images per optimizer step.

        :rtype: int
        """
        pass

    @make_prop_pointer("_mode", (LossMode, str), LossMode)
    def mode(self):
        """
        How the unconfident bands are treated.

        :rtype: LossMode
        """
        pass

    @make_prop_pointer("_lc_enabled", bool)
    def lc_enabled(self):
        """
        Whether labels are corrected every ``interval_epochs``.

        :rtype: bool
        """
        pass

    @make_prop_pointer("_seed", int, validator=_validate_non_negative)
    def seed(self):
        """
        Seeds the weight initialization and the shuffling.

        :rtype: int
        """
        pass

    @make_prop_pointer("_normalize_mc", bool)
    def normalize_mc(self):
        """
        Whether each band's hinge sum is averaged over its pixels.

        :rtype: bool
        """
        pass

    @make_prop_pointer("_learning_rate", (float, int), float, _validate_learning_rate)
    def learning_rate(self):
        pass

    @make_prop_pointer("_weight_decay", (float, int), float, _validate_non_negative)
    def weight_decay(self):
        pass

    @make_prop_pointer("_cc_weight", (float, int), float, _validate_non_negative)
    def cc_weight(self):
        pass

    @make_prop_pointer("_mc_weight", (float, int), float, _validate_non_negative)
    def mc_weight(self):
        pass

    @make_prop_pointer("_threshold", (float, int), float, _validate_threshold)
    def threshold(self):
        """
        Score above which a pixel is foreground, for correction and evaluation.

        :rtype: float
        """
        pass

    @make_prop_pointer("_min_band_px", (float, int), float, _validate_non_negative)
    def min_band_px(self):
        """
        Boxes whose bands would be narrower than this, in pixels, get no bands.

        :rtype: float
        """
        pass

    @make_prop_pointer("_use_clean_labels", bool)
    def use_clean_labels(self):
        """
        Train on the clean boxes instead of the noisy ones (the upper bound).

        :rtype: bool
        """
        pass

    @make_prop_pointer(
        "_hd_percentile", (float, int, type(None)), validator=_validate_percentile
    )
    def hd_percentile(self):
        """
        Evaluate a percentile Hausdorff distance (e.g. 95) instead of the maximum.

        :rtype: float
        """
        pass

    @property
    def merge_rule(self):
        return self.correction.merge_rule

    def validate(self):
        """
        Checks the fields against each other.

        :raises ConfigurationError: if two settings contradict each other.
        """
        if self.lc_enabled and self.use_clean_labels:
            raise ConfigurationError(
                "lc_enabled and use_clean_labels are exclusive: clean labels need no correction."
            )
        if self.lc_enabled and self.correction.interval_epochs > self.epochs:
            raise ConfigurationError(
                f"interval_epochs ({self.correction.interval_epochs}) exceeds epochs "
                f"({self.epochs}): no correction would run."
            )
        return self

    def to_dict(self):
        """
        The JSON form of the configuration.

        :rtype: dict
        """
        data = {"config_version": CONFIG_VERSION}
        for key in self._FIELDS:
            value = getattr(self, key)
            data[key] = str(value) if isinstance(value, LossMode) else value
        data.update(self.correction.to_dict())
        data["sigma"] = self.noise.sigma
        data["noise_seed"] = self.noise.seed
        return data

    @classmethod
    def from_dict(cls, data):
        """
        Reads a configuration from its JSON form.

        :param data: the fields; missing fields keep their defaults.
        :type data: dict
        :rtype: TrainConfig
        :raises ConfigurationError: for unknown fields, bad values or an unsupported version.
        """
        if not isinstance(data, dict):
            raise ConfigurationError("A configuration must be a JSON object.")
        data = dict(data)
        version = data.pop("config_version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigurationError(f"Unsupported config_version {version}.")
        return cls(**data).validate()

    @classmethod
    def from_json_file(cls, path):
        """
        Reads a configuration file.

        :rtype: TrainConfig
        """
        with open(path, "r") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"{path}: {e}") from e
        return cls.from_dict(data)

    def __repr__(self):
        return f"TrainConfig({self.to_dict()})"

    def __eq__(self, other):
        return isinstance(other, TrainConfig) and self.to_dict() == other.to_dict()


@dataclass(eq=False)
class TrainingSample:
    """
    An image with its features, mask and boxes, ready for training or evaluation.
    """

    image_id: str
    image: np.ndarray
    features: FeatureStack
    gt_mask: np.ndarray
    clean_boxes: list
    noisy_boxes: list


def load_dataset(manifest, labels=None):
    """
    Reads every image and mask of a dataset.

    :param manifest: the dataset, or its directory.
    :type manifest: DatasetManifest, str, os.PathLike
    :param labels: ``(image_id, boxes)`` pairs replacing the manifest's noisy boxes.
    :type labels: list
    :rtype: list
    :raises ConfigurationError: if the labels do not match the dataset.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = DatasetManifest.read(manifest)
    overrides = dict(labels) if labels is not None else {}
    unknown = set(overrides) - {entry.image_id for entry in manifest}
    if unknown:
        raise ConfigurationError(f"Labels given for unknown images: {sorted(unknown)}.")
    samples = []
    for entry in manifest:
        noisy = list(overrides.get(entry.image_id, entry.noisy_boxes))
        if len(noisy) != len(entry.clean_boxes):
            raise ConfigurationError(
                f"Image {entry.image_id}: {len(noisy)} labels for "
                f"{len(entry.clean_boxes)} objects."
            )
        image = read_image(manifest.resolve(entry.image))
        mask = read_mask(manifest.resolve(entry.mask))
        if image.shape != entry.image_size or mask.shape != entry.image_size:
            raise ConfigurationError(
                f"Image {entry.image_id}: files do not have the size {entry.image_size}."
            )
        samples.append(
            TrainingSample(
                entry.image_id,
                image,
                FeatureStack.from_image(image),
                mask,
                list(entry.clean_boxes),
                noisy,
            )
        )
    return samples


@dataclass
class EpochRecord:
    """
    What happened in one epoch.

    :param scale: the unconfident scale used during the epoch.
    :type scale: float
    :param label_accuracy: the label accuracy at the end of the epoch, after any correction.
    :type label_accuracy: float
    """

    epoch: int
    scale: float
    losses: LossBreakdown
    label_accuracy: float = None
    n_corrected: int = 0


@dataclass
class RunReport:
    """
    Everything logged by one training run.
    """

    config: TrainConfig
    epochs: list = field(default_factory=list)
    events: list = field(default_factory=list)
    eval_records: list = field(default_factory=list)
    initial_label_accuracy: float = None
    params: ModelParams = None

    def scale_history(self):
        """
        The unconfident scale before the first correction and after each one.

        :rtype: list
        """
        return [self.config.correction.lambda0] + [
            event.lambda_after for event in self.events
        ]

    def event_label_accuracy(self):
        """
        The label accuracy right after each correction event.

        :rtype: list
        """
        by_epoch = {record.epoch: record.label_accuracy for record in self.epochs}
        return [by_epoch[event.epoch] for event in self.events]


def loss_and_gradients(features, params, boxes, scale, config):
    """
    The objective of one image and its gradient with respect to the weights.

    :param features: the image features.
    :type features: FeatureStack
    :param params: the weights.
    :type params: ModelParams
    :param boxes: the current labels of the image.
    :type boxes: list
    :param scale: the unconfident scale.
    :type scale: float
    :param config: the loss settings.
    :type config: TrainConfig
    :rtype: tuple
    """
    scores = forward(features, params)
    breakdown, grad_scores = total_loss(
        scores,
        boxes,
        scale,
        config.mode,
        normalize_mc=config.normalize_mc,
        cc_weight=config.cc_weight,
        mc_weight=config.mc_weight,
        min_band_px=config.min_band_px,
    )
    return breakdown, backward(features, params, grad_scores)


def score_maps(samples, params):
    """
    The score map of every sample.

    :rtype: dict
    """
    return {sample.image_id: forward(sample.features, params) for sample in samples}


def _label_accuracy(samples, labels):
    current = []
    clean = []
    for sample in samples:
        current.extend(labels[sample.image_id])
        clean.extend(sample.clean_boxes)
    return label_accuracy(current, clean)


def train(config, dataset, labels=None, progress=False):
    """
    Trains a model from scratch.

    Each epoch visits the images in a seeded random order, ``batch_size`` at a time.
    The gradient of a batch is the mean of the per-image gradients, summed in image
    order. When label correction is enabled, it runs at the end of every
    ``interval_epochs``-th epoch with the weights of that moment, and the corrected
    boxes are used from the next step on. Anchored corrections merge into the labels
    the run started with.

    :param config: the run settings.
    :type config: TrainConfig
    :param dataset: the training images, or their manifest.
    :type dataset: list, DatasetManifest
    :param labels: ``(image_id, boxes)`` pairs replacing the noisy boxes of a manifest.
    :type labels: list
    :param progress: show a progress bar.
    :type progress: bool
    :returns: the report, whose ``params`` are the final weights.
    :rtype: RunReport
    :raises ConfigurationError: if the configuration contradicts itself or the data is empty.
    """
    config.validate()
    if isinstance(dataset, list):
        samples = dataset
    else:
        samples = load_dataset(dataset, labels)
    if not samples:
        raise ConfigurationError("The training set is empty.")
    for sample in samples:
        if not sample.noisy_boxes:
            raise ConfigurationError(f"Image {sample.image_id} has no boxes.")

    params = ModelParams.initialize(config.seed)
    optimizer = AdamW(config.learning_rate, config.weight_decay)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    labels = {
        sample.image_id: list(
            sample.clean_boxes if config.use_clean_labels else sample.noisy_boxes
        )
        for sample in samples
    }
    annotations = {image_id: list(boxes) for image_id, boxes in labels.items()}
    scale = config.correction.lambda0
    report = RunReport(config)
    report.initial_label_accuracy = _label_accuracy(samples, labels)

    epochs = tqdm(range(1, config.epochs + 1), desc="epoch", disable=not progress)
    for epoch in epochs:
        order = shuffle_rng.permutation(len(samples))
        breakdowns = []
        for start in range(0, len(samples), config.batch_size):
            batch = sorted(order[start : start + config.batch_size])
            grads = ModelParams.zeros()
            for index in batch:
                sample = samples[index]
                breakdown, sample_grads = loss_and_gradients(
                    sample.features, params, labels[sample.image_id], scale, config
                )
                breakdowns.append(breakdown)
                grads = grads + sample_grads
            params = optimizer.step(params, grads.scaled(1.0 / len(batch)))
        mean_losses = LossBreakdown.mean(breakdowns)

        record = EpochRecord(epoch, scale, mean_losses)
        if config.lc_enabled and epoch % config.correction.interval_epochs == 0:
            labels, event = run_correction(
                score_maps(samples, params),
                labels,
                config.correction,
                scale,
                epoch,
                config.threshold,
                annotations,
            )
            report.events.append(event)
            record.n_corrected = event.n_corrected
            scale = event.lambda_after
        record.label_accuracy = _label_accuracy(samples, labels)
        report.epochs.append(record)
        epochs.set_postfix(loss=f"{mean_losses.total:.4f}", scale=scale)

    report.params = params
    return report


def evaluate(params, dataset, threshold=BINARIZE_THRESHOLD, hd_percentile=None):
    """
    Segments every image and scores it against its mask.

    :param params: the weights, or the path of a checkpoint.
    :type params: ModelParams, str, os.PathLike
    :param dataset: the test images, or their manifest.
    :type dataset: list, DatasetManifest
    :param threshold: scores above it are foreground.
    :type threshold: float
    :param hd_percentile: use a percentile Hausdorff distance.
    :type hd_percentile: float
    :rtype: list
    """
    if not isinstance(params, ModelParams):
        params = load_checkpoint(params)
    samples = dataset if isinstance(dataset, list) else load_dataset(dataset)
    records = []
    for sample in samples:
        prediction = forward(sample.features, params) > threshold
        records.append(
            evaluate_masks(sample.image_id, prediction, sample.gt_mask, hd_percentile)
        )
    return records

