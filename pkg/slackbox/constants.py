# Copyright 2024, The SlackBox developers.

"""
Numerical constants and defaults used throughout slackbox.
"""

SCORE_FLOOR = 1e-6
"""
Lowest score allowed in a score map; scores are clamped to ``[SCORE_FLOOR, 1 - SCORE_FLOOR]``.

:rtype: float
"""

DICE_EPSILON = 1e-6
"""
Smoothing term added to the numerator and denominator of the consistency constraint.

:rtype: float
"""

MAX_UNCONFIDENT_SCALE = 0.5
"""
Exclusive upper bound of the unconfident scale.

At or above this the left and right bands would meet at the box center.
"""

DEFAULT_UNCONFIDENT_SCALE = 0.2
"""
Initial unconfident scale.
"""

DEFAULT_IOU_THRESHOLD = 0.7
"""
IoU a predicted box must exceed to correct a label.
"""

DEFAULT_CORRECTION_INTERVAL = 10
"""
Number of epochs between two label corrections.
"""

DEFAULT_EPOCHS = 50
"""
Number of training epochs.
"""

DEFAULT_BATCH_SIZE = 16
"""
Number of images per optimizer step.
"""

DEFAULT_NOISE_LEVEL = 0.2
"""
Default standard deviation of the relative box shifts and scalings.
"""

BINARIZE_THRESHOLD = 0.5
"""
Score above which a pixel counts as foreground.
"""

MIN_COMPONENT_SIZE = 4
"""
Connected components with fewer pixels are ignored when boxes are extracted from predictions.
"""

MAX_NOISE_RESAMPLES = 16
"""
How many times a destroyed noisy box is drawn again before giving up.
"""

LEARNING_RATE = 1e-4
"""
AdamW learning rate.
"""

WEIGHT_DECAY = 1e-4
"""
AdamW decoupled weight decay.
"""

ADAM_BETAS = (0.9, 0.999)
"""
AdamW moment decay rates.
"""

ADAM_EPSILON = 1e-8
"""
AdamW denominator guard.
"""

BLUR_RADII = (2, 5)
"""
Radii of the box blurs used as model features.
"""

N_FEATURES = 6
"""
Number of per-pixel features: intensity, the two blurs, x, y, and a constant.
"""

N_HIDDEN = 16
"""
Width of the hidden layer of the per-pixel model.
"""

CHECKPOINT_MAGIC = b"SLKBOXCK"
"""
First eight bytes of a parameter checkpoint.
"""

CHECKPOINT_VERSION = 1
"""
Layout version written after the checkpoint magic.
"""

CONFIG_VERSION = 1
"""
Version of the JSON training configuration schema.
"""

MANIFEST_VERSION = 1
"""
Version of the dataset manifest header line.
"""

PGM_MAXVAL = 255
"""
The only PGM ``maxval`` read or written.
"""

DEFAULT_IMAGE_SIZE = (64, 64)
"""
Height and width of the synthetic benchmark images.
"""

DEFAULT_SPLIT_SIZES = {"train": 200, "test": 50}
"""
Number of synthetic images per split in the desk-scale benchmark.
"""

MIN_IMAGE_SIZE = 16
"""
Smallest height or width of a synthetic image.
"""
