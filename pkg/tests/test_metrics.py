# Copyright 2024, The SlackBox developers.
from unittest import TestCase

import numpy as np
import pytest

from slackbox.errors import ShapeMismatchError, UndefinedDistanceError
from slackbox.geometry import Box
from slackbox.metrics import (
    EvalRecord,
    boundary,
    evaluate_masks,
    hausdorff,
    label_accuracy,
    mask_dice,
    mask_iou,
)
from tests import constants


def _nonempty_mask(rng, shape):
    mask = constants.random_mask(rng, shape, rng.uniform(0.05, 0.5))
    mask[tuple(rng.integers(0, n) for n in shape)] = True
    return mask


class TestOverlap(TestCase):
    def setUp(self):
        self.a = np.zeros((4, 4), dtype=bool)
        self.b = np.zeros((4, 4), dtype=bool)
        self.a[0, 0:2] = True
        self.b[0, 1:3] = True

    def test_dice(self):
        self.assertAlmostEqual(mask_dice(self.a, self.b), 0.5)

    def test_iou(self):
        self.assertAlmostEqual(mask_iou(self.a, self.b), 2 / 6)

    def test_empty(self):
        empty = np.zeros((4, 4), dtype=bool)
        self.assertEqual(mask_dice(empty, empty), 1.0)
        self.assertEqual(mask_iou(empty, empty), 1.0)
        self.assertEqual(mask_dice(self.a, empty), 0.0)

    def test_shape(self):
        with self.assertRaises(ShapeMismatchError):
            mask_dice(self.a, np.zeros((4, 5)))


def test_dice_iou_identity():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        a = _nonempty_mask(rng, (10, 12))
        b = _nonempty_mask(rng, (10, 12))
        iou = mask_iou(a, b)
        assert mask_dice(a, b) == pytest.approx(2 * iou / (1 + iou))


class TestBoundary(TestCase):
    def test_block(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[1:4, 1:4] = True
        expected = mask.copy()
        expected[2, 2] = False
        np.testing.assert_array_equal(boundary(mask), expected)

    def test_image_edge(self):
        np.testing.assert_array_equal(boundary(np.ones((3, 3))), [[1, 1, 1], [1, 0, 1], [1, 1, 1]])


class TestHausdorff(TestCase):
    def test_single_pixels(self):
        a = np.zeros((8, 8), dtype=bool)
        b = np.zeros((8, 8), dtype=bool)
        a[0, 0] = True
        b[3, 4] = True
        self.assertEqual(hausdorff(a, b), 5.0)

    def test_shifted_square(self):
        a = np.zeros((10, 10), dtype=bool)
        a[2:5, 2:5] = True
        b = np.roll(a, 2, axis=1)
        self.assertEqual(hausdorff(a, b), 2.0)

    def test_identical(self):
        a = np.zeros((6, 6), dtype=bool)
        a[1:5, 2:4] = True
        self.assertEqual(hausdorff(a, a), 0.0)

    def test_empty(self):
        a = np.zeros((6, 6), dtype=bool)
        b = a.copy()
        b[2, 2] = True
        with self.assertRaises(UndefinedDistanceError) as context:
            hausdorff(a, b)
        self.assertIn("undefined HD", context.exception.message)

    def test_percentile(self):
        a = np.zeros((20, 20), dtype=bool)
        a[2:12, 2:12] = True
        b = a.copy()
        b[18, 18] = True
        self.assertGreater(hausdorff(a, b), hausdorff(a, b, percentile=95))
        self.assertEqual(hausdorff(a, b, percentile=100), hausdorff(a, b))


def test_hausdorff_is_a_metric():
    rng = np.random.default_rng(9)
    for _ in range(200):
        a, b, c = (_nonempty_mask(rng, (9, 9)) for _ in range(3))
        ab = hausdorff(a, b)
        assert ab == hausdorff(b, a)
        assert ab <= hausdorff(a, c) + hausdorff(c, b) + 1e-12


class TestLabelAccuracy(TestCase):
    def test_mean(self):
        current = [Box(0, 0, 2, 2), Box(0, 0, 4, 2), Box(0, 0, 2, 2)]
        clean = [Box(0, 0, 2, 2), Box(0, 0, 2, 2), Box(0, 0, 2, 4)]
        self.assertAlmostEqual(label_accuracy(current, clean), 2 / 3)

    def test_empty(self):
        self.assertEqual(label_accuracy([], []), 1.0)

    def test_misaligned(self):
        with self.assertRaises(ValueError):
            label_accuracy([Box(0, 0, 1, 1)], [])


class TestEvaluateMasks(TestCase):
    def test_empty_prediction(self):
        truth = np.zeros((6, 6), dtype=bool)
        truth[1:3, 1:3] = True
        record = evaluate_masks("x", np.zeros((6, 6), dtype=bool), truth)
        self.assertEqual(record, EvalRecord("x", 0.0, 0.0, None))
        self.assertEqual(record.as_row(), ["x", "0.0", "0.0", ""])

    def test_record(self):
        truth = np.zeros((6, 6), dtype=bool)
        truth[1:3, 1:3] = True
        record = evaluate_masks("y", truth, truth, label_acc=0.5)
        self.assertEqual(record.as_row(), ["y", "1.0", "1.0", "0.0"])
        self.assertEqual(record.label_accuracy, 0.5)
        self.assertEqual(len(EvalRecord.CSV_HEADER), len(record.as_row()))
