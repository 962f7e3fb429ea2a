#!/usr/bin/env python
"""
Tests for the diffusion schedule and forward noising.
"""

import os
import sys

import numpy as np
import pytest

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

from src.blinddps.diffusion import (default_schedule, diffuse, make_schedule, schedule_from_config,
                                    true_conditional_score)
from src.blinddps.exceptions import DegenerateStepError, ParameterError, ShapeError


def test_default_schedule_ends_near_pure_noise(sched):
    """Default schedule: ᾱ_N equals the direct product and is below 1e-3."""
    betas = np.linspace(1e-4, 0.02, 1000)
    assert sched.alpha_bars[-1] == pytest.approx(np.prod(1.0 - betas), rel=1e-10)
    assert sched.alpha_bars[-1] == pytest.approx(4.0e-5, rel=0.05)
    assert sched.alpha_bars[-1] < 1e-3


def test_schedule_invariants(sched):
    """ᾱ strictly decreasing, ᾱ_0 = 1 and 0 ≤ σ̃² ≤ β."""
    assert sched.alpha_bars[0] == 1.0
    assert sched.betas[0] == 0.0
    assert np.all(np.diff(sched.alpha_bars) < 0)
    assert np.all(sched.post_vars >= 0)
    assert np.all(sched.post_vars <= sched.betas + 1e-15)
    assert len(sched.betas) == sched.n_steps + 1


def test_single_step_schedule():
    s = make_schedule(1, 0.5, 0.5)
    assert s.alpha_bars[1] == pytest.approx(0.5)
    assert s.post_vars[1] == 0.0


def test_two_step_hand_computation():
    s = make_schedule(2, 0.1, 0.3)
    assert s.alpha_bars[2] == pytest.approx(0.63)
    assert s.post_vars[2] == pytest.approx(0.3 * 0.1 / 0.37)


@pytest.mark.parametrize('args', [(0, 1e-4, 0.02), (10, 0.0, 0.02), (10, 0.03, 0.02), (10, 1e-4, 1.0)])
def test_invalid_schedules_rejected(args):
    with pytest.raises(ParameterError):
        make_schedule(*args)


def test_schedule_arrays_are_read_only(sched):
    with pytest.raises(ValueError):
        sched.betas[1] = 0.5


def test_default_schedule_rescales_short_chains():
    """A 200-step rescaled chain still ends close to pure noise."""
    s = default_schedule(200)
    assert s.betas[1] == pytest.approx(5e-4)
    assert s.betas[-1] == pytest.approx(0.1)
    assert s.alpha_bars[-1] < 1e-3


def test_schedule_from_config():
    s = schedule_from_config({'n_steps': 20, 'beta_min': 0.01, 'beta_max': 0.2})
    assert s.n_steps == 20
    assert s.betas[-1] == pytest.approx(0.2)
    rescaled = schedule_from_config({'n_steps': 200, 'rescale': True})
    assert rescaled.betas[-1] == pytest.approx(0.1)


def test_diffuse_examples(sched):
    x0 = np.array([1.0, -1.0])
    z = np.array([0.0, 2.0])
    assert np.array_equal(diffuse(x0, 0, z, sched), x0)
    i = 300
    a_bar = sched.alpha_bars[i]
    np.testing.assert_allclose(diffuse(np.zeros(2), i, z, sched), np.sqrt(1 - a_bar) * z)

    s = make_schedule(1, 0.75, 0.75)
    np.testing.assert_allclose(diffuse(x0, 1, z, s), [0.5, -0.5 + np.sqrt(0.75) * 2])


def test_diffuse_shape_mismatch(sched):
    with pytest.raises(ShapeError):
        diffuse(np.zeros(3), 5, np.zeros(4), sched)


def test_conditional_score_round_trip(sched, rng):
    """Score of a diffused sample equals −z/√(1−ᾱ_i)."""
    for _ in range(50):
        i = int(rng.integers(1, sched.n_steps + 1))
        x0 = rng.standard_normal(6)
        z = rng.standard_normal(6)
        score = true_conditional_score(diffuse(x0, i, z, sched), x0, i, sched)
        expected = -z / np.sqrt(1.0 - sched.alpha_bars[i])
        np.testing.assert_allclose(score, expected, rtol=1e-12, atol=1e-12)


def test_conditional_score_examples():
    s = make_schedule(1, 0.25, 0.25)
    np.testing.assert_allclose(true_conditional_score(np.array([1.0]), np.array([0.0]), 1, s), [-4.0])
    x0 = np.array([0.3, -0.2])
    mode = np.sqrt(0.75) * x0
    np.testing.assert_allclose(true_conditional_score(mode, x0, 1, s), 0.0, atol=1e-15)


def test_conditional_score_matches_finite_differences(sched, rng):
    i = 400
    a_bar = sched.alpha_bars[i]
    x0 = rng.standard_normal(5)
    x = rng.standard_normal(5)

    def log_density(v):
        return -0.5 * np.sum((v - np.sqrt(a_bar) * x0) ** 2) / (1 - a_bar)

    h = 1e-5
    fd = np.array([(log_density(x + h * e) - log_density(x - h * e)) / (2 * h) for e in np.eye(5)])
    np.testing.assert_allclose(true_conditional_score(x, x0, i, sched), fd, rtol=1e-5)


def test_conditional_score_degenerate_step(sched):
    with pytest.raises(DegenerateStepError):
        true_conditional_score(np.zeros(2), np.zeros(2), 0, sched)


def test_step_index_out_of_range(sched):
    with pytest.raises(ParameterError):
        sched.alpha_bar(sched.n_steps + 1)
