# Copyright 2024, The SlackBox developers.
from unittest import TestCase

from hypothesis import given, strategies as st
import numpy as np
import pytest

from slackbox.constants import SCORE_FLOOR
from slackbox.errors import ShapeMismatchError
from slackbox.geometry import Box, box_filled_mask
from slackbox.gradient_check import is_tie_free, numerical_gradient, relative_error
from slackbox.proxy import clamp_scores, proxy_backward, proxy_forward
from tests import constants


class TestProxyForward(TestCase):
    def test_constant(self):
        proxy = proxy_forward(np.full((5, 7), 0.3))
        np.testing.assert_allclose(proxy.values, 0.09)

    def test_single_peak(self):
        scores = np.full((8, 8), 0.1)
        scores[2, 3] = 0.5
        p = proxy_forward(scores).values
        self.assertAlmostEqual(p[2, 3], 0.25)
        self.assertTrue(np.allclose(np.delete(p[2], 3), 0.05))
        self.assertTrue(np.allclose(np.delete(p[:, 3], 2), 0.05))
        rest = np.delete(np.delete(p, 2, axis=0), 3, axis=1)
        np.testing.assert_allclose(rest, 0.01)

    def test_box_pattern(self):
        mask = box_filled_mask(Box(2, 1, 5, 6), 8, 8)
        p = proxy_forward(np.where(mask, 0.9, 0.1)).values
        rows = mask.any(axis=1)
        cols = mask.any(axis=0)
        np.testing.assert_allclose(p[np.ix_(rows, cols)], 0.81)
        np.testing.assert_allclose(p[np.ix_(rows, ~cols)], 0.09)
        np.testing.assert_allclose(p[np.ix_(~rows, cols)], 0.09)
        np.testing.assert_allclose(p[np.ix_(~rows, ~cols)], 0.01)
        # thresholding the proxy of a box pattern gives the box back
        np.testing.assert_array_equal(p > 0.5, mask)

    def test_first_argmax(self):
        scores = np.array([[0.2, 0.7, 0.7], [0.1, 0.1, 0.1]])
        proxy = proxy_forward(scores)
        self.assertEqual(proxy.row_argmax.tolist(), [1, 0])
        self.assertEqual(proxy.col_argmax.tolist(), [0, 0, 0])

    def test_clamp(self):
        scores = clamp_scores(np.array([[0.0, 1.0]]))
        self.assertEqual(scores[0, 0], SCORE_FLOOR)
        self.assertEqual(scores[0, 1], 1.0 - SCORE_FLOOR)


@given(st.integers(0, 2**32 - 1), st.integers(0, 4), st.integers(0, 4), st.floats(0.0, 0.5))
def test_forward_monotone(seed, row, col, raise_by):
    scores = np.random.default_rng(seed).uniform(0.05, 0.5, size=(5, 5))
    before = proxy_forward(scores).values
    scores[row, col] += raise_by
    after = proxy_forward(scores).values
    assert np.all(after >= before)


@given(st.integers(0, 2**32 - 1))
def test_forward_bounds(seed):
    scores = np.random.default_rng(seed).uniform(0.0, 1.0, size=(6, 4))
    proxy = proxy_forward(scores)
    np.testing.assert_array_equal(proxy.values, np.outer(proxy.row_max, proxy.col_max))
    bound = np.minimum(proxy.row_max[:, None], proxy.col_max[None, :])
    assert np.all(proxy.values <= bound)


class TestProxyBackward(TestCase):
    def test_zero_upstream(self):
        scores = np.random.default_rng(0).uniform(size=(4, 4))
        np.testing.assert_array_equal(
            proxy_backward(scores, np.zeros((4, 4))), np.zeros((4, 4))
        )

    def test_scalar(self):
        grad = proxy_backward(np.array([[0.4]]), np.array([[1.0]]))
        self.assertAlmostEqual(grad[0, 0], 0.8)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            proxy_backward(np.full((3, 3), 0.5), np.zeros((3, 4)))


def test_backward_finite_differences():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 20:
        scores = rng.uniform(0.05, 0.95, size=(6, 6))
        upstream = rng.normal(size=(6, 6))
        if not is_tie_free(scores, margin=constants.TIE_MARGIN):
            continue
        analytic = proxy_backward(scores, upstream)
        numeric = numerical_gradient(
            lambda m: float(np.sum(upstream * proxy_forward(m).values)),
            scores,
            constants.FD_STEP,
        )
        assert relative_error(analytic, numeric) < 1e-5
        checked += 1
