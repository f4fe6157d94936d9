# Copyright 2024, The SlackBox developers.
from unittest import TestCase
import warnings

from hypothesis import given, strategies as st
import numpy as np
import pytest

import slackbox.noise as noise
from slackbox.constants import MAX_NOISE_RESAMPLES
from slackbox.errors import AnnotationResampledWarning, DestroyedAnnotationError
from slackbox.geometry import Box, box_iou
from slackbox.noise import (
    NoiseParams,
    box_stream,
    image_key,
    perturb_box,
    perturb_boxes,
    perturb_dataset,
    sample_draws,
)
from tests import constants


class TestNoiseParams(TestCase):
    def test_defaults(self):
        params = NoiseParams()
        self.assertEqual(params.sigma, 0.2)
        self.assertEqual(params.seed, 0)
        self.assertEqual(params.to_dict(), {"sigma": 0.2, "seed": 0, "min_size": 1.0})

    def test_invalid(self):
        with self.assertRaises(ValueError):
            NoiseParams(sigma=-0.1)
        with self.assertRaises(ValueError):
            NoiseParams(seed=-1)
        with self.assertRaises(TypeError):
            NoiseParams(seed=1.5)
        with self.assertRaises(TypeError):
            NoiseParams(seed=True)
        with self.assertRaises(ValueError):
            NoiseParams(min_size=0.5)


class TestPerturbBox(TestCase):
    def test_zero_draws(self):
        box = Box(3.25, 1.5, 9.0, 7.75)
        self.assertEqual(perturb_box(box, NoiseParams(), (0, 0, 0, 0)), box)

    def test_shift_and_scale(self):
        noisy = perturb_box(Box(10, 10, 20, 20), NoiseParams(), (0.1, 0.0, 0.2, 0.0))
        self.assertAlmostEqual(noisy.x_lt, 10.0)
        self.assertAlmostEqual(noisy.x_rb, 22.0)
        self.assertAlmostEqual(noisy.y_lt, 10.0)
        self.assertAlmostEqual(noisy.y_rb, 20.0)

    def test_clipped(self):
        noisy = perturb_box(Box(0, 0, 4, 4), NoiseParams(), (-0.5, 0, 0, 0), (10, 10))
        self.assertEqual(noisy, Box(0, 0, 2, 4))

    def test_destroyed(self):
        with self.assertRaises(DestroyedAnnotationError) as context:
            perturb_box(Box(0, 0, 4, 4), NoiseParams(), (-2.0, 0, 0, 0), (10, 10))
        self.assertIn("noise destroyed annotation", context.exception.message)

    def test_min_size(self):
        noisy = perturb_box(Box(4, 4, 8, 8), NoiseParams(), (0, 0, -1.2, 0))
        self.assertAlmostEqual(noisy.width, 1.0)
        self.assertAlmostEqual(noisy.center[0], 6.0)

    def test_needs_randomness(self):
        with self.assertRaises(ValueError):
            perturb_box(Box(0, 0, 4, 4), NoiseParams())

    def test_sigma_zero(self):
        params = NoiseParams(sigma=0.0, seed=9)
        box = Box(2.5, 3.5, 11.0, 9.0)
        self.assertEqual(perturb_boxes("a", [box], params), [box])


class TestStreams(TestCase):
    def test_image_key_stable(self):
        self.assertEqual(image_key("train-0001"), image_key("train-0001"))
        self.assertNotEqual(image_key("train-0001"), image_key("train-0002"))
        self.assertTrue(0 <= image_key("") < 2**64)

    def test_image_key_value(self):
        self.assertEqual(image_key("train-0001"), 6915127496170402601)
        self.assertEqual(image_key("img"), 14490524904275937968)

    def test_stream_values(self):
        params = NoiseParams(seed=5)
        rng = box_stream(params, "img", 2)
        self.assertEqual(
            [int(k) for k in rng.bit_generator.state["state"]["key"]],
            [444937769903081336, 5789964465122102682],
        )
        np.testing.assert_allclose(
            sample_draws(params, rng),
            [
                -0.006805134891945671,
                0.11689105004098495,
                0.30662081257297502,
                -0.10468444416202707,
            ],
            rtol=1e-12,
        )
        raw = box_stream(params, "img", 2).bit_generator.random_raw(4)
        self.assertEqual(
            [int(value) for value in raw],
            [
                13898386812357312340,
                930776782821033075,
                2032653091474629277,
                882485079279239015,
            ],
        )

    def test_deterministic(self):
        params = NoiseParams(sigma=0.3, seed=5)
        first = sample_draws(params, box_stream(params, "img", 2))
        second = sample_draws(params, box_stream(params, "img", 2))
        np.testing.assert_array_equal(first, second)

    def test_streams_differ(self):
        params = NoiseParams(sigma=0.3, seed=5)
        draws = {
            tuple(sample_draws(params, box_stream(params, image_id, index)))
            for image_id in ("a", "b")
            for index in range(3)
        }
        self.assertEqual(len(draws), 6)

    def test_order_independent(self):
        params = NoiseParams(sigma=0.25, seed=3)
        boxes = {"a": [Box(2, 2, 10, 10), Box(5, 5, 9, 12)], "b": [Box(1, 3, 8, 6)]}
        forward = dict(perturb_dataset(list(boxes.items()), params))
        backward = dict(perturb_dataset(list(reversed(boxes.items())), params))
        self.assertEqual(forward, backward)

    def test_index_stream(self):
        params = NoiseParams(sigma=0.25, seed=3)
        a, b = Box(2, 2, 10, 10), Box(5, 5, 9, 12)
        pair = perturb_boxes("x", [a, b], params)
        alone = perturb_boxes("x", [a], params)
        self.assertEqual(pair[0], alone[0])


def test_draw_statistics():
    params = NoiseParams(sigma=0.2, seed=11)
    rng = box_stream(params, "stats", 0)
    draws = np.array([sample_draws(params, rng) for _ in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0)) < 0.006)
    assert np.all(np.abs(draws.std(axis=0) - 0.2) < 0.01)


def test_iou_decreases_with_noise():
    rng = np.random.default_rng(0)
    boxes = [constants.random_box(rng, 64, 64, 8.0) for _ in range(400)]
    clean = [(f"img-{i}", [box]) for i, box in enumerate(boxes)]
    means = []
    for sigma in (0.1, 0.2, 0.3, 0.4):
        noisy = perturb_dataset(clean, NoiseParams(sigma=sigma, seed=1))
        means.append(
            np.mean([box_iou(c[1][0], n[1][0]) for c, n in zip(clean, noisy)])
        )
    assert all(a > b for a, b in zip(means, means[1:]))
    assert means[0] < 1.0


@given(
    st.floats(0.0, 50.0),
    st.floats(0.0, 50.0),
    st.floats(1.0, 30.0),
    st.floats(1.0, 30.0),
    st.integers(0, 2**32),
)
def test_noisy_box_stays_in_image(x, y, w, h, seed):
    box = Box(x, y, min(x + w, 64.0), min(y + h, 64.0))
    params = NoiseParams(sigma=0.3, seed=seed)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AnnotationResampledWarning)
            noisy = perturb_boxes("h", [box], params, (64, 64))[0]
    except DestroyedAnnotationError:
        return
    assert 0.0 <= noisy.x_lt < noisy.x_rb <= 64.0
    assert 0.0 <= noisy.y_lt < noisy.y_rb <= 64.0
    assert noisy.width >= 1.0 and noisy.height >= 1.0


def test_resampled(monkeypatch):
    draws = iter([(-5.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0)])
    monkeypatch.setattr(noise, "sample_draws", lambda params, rng: next(draws))
    with pytest.warns(AnnotationResampledWarning, match="drawn 2 times"):
        noisy = perturb_boxes("img", [Box(1, 1, 5, 5)], NoiseParams(), (16, 16))
    assert noisy == [Box(1, 1, 5, 5)]


def test_resampling_gives_up(monkeypatch):
    monkeypatch.setattr(noise, "sample_draws", lambda params, rng: (-5.0, 0, 0, 0))
    with pytest.raises(DestroyedAnnotationError) as info:
        perturb_boxes("img", [Box(1, 1, 5, 5)], NoiseParams(), (16, 16))
    assert info.value.attempts == MAX_NOISE_RESAMPLES + 1
