#!/usr/bin/env python
"""
Tests for the ancestral step, prior sampling and the guided samplers.
"""

import os
import sys

import numpy as np
import pytest

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

from src.blinddps.exceptions import DivergenceError, ParameterError, ShapeError
from src.blinddps.guidance import GuidanceConfig, in_simplex
from src.blinddps.models import GaussianPrior, GaussianScore
from src.blinddps.operators import degrade, gen_gaussian_kernel
from src.blinddps.pipeline import (TRAJECTORY_COLUMNS, SamplerOptions, ancestral_coefficients, ancestral_step,
                                   blind_dps_deblur, blind_dps_turbulence, dps_nonblind, sample_prior,
                                   uniform_prior_baseline)
from src.blinddps.utils import RandomStreams

IMAGE_SHAPE = (6, 6)
KERNEL_SHAPE = (3, 3)


@pytest.fixture
def image_model():
    return GaussianScore(GaussianPrior(0.0, 0.5), IMAGE_SHAPE)


@pytest.fixture
def kernel_model():
    return GaussianScore(GaussianPrior(np.full(KERNEL_SHAPE, 1.0 / 9.0), 0.01))


@pytest.fixture
def problem():
    gen = np.random.default_rng(99)
    x = np.sqrt(0.5) * gen.standard_normal(IMAGE_SHAPE)
    k = gen_gaussian_kernel(0.8, 3)
    y = degrade(x, k, None, 0.02, RandomStreams(5))
    return x, k, y


def test_ancestral_coefficients_preserve_the_clean_mean(sched):
    """With v_i = √ᾱ_i x0 and v̂0 = x0 the noiseless step lands on √ᾱ_{i−1} x0."""
    for i in (1, 2, 100, 500, 1000):
        c_v, c_0, sigma = ancestral_coefficients(i, sched)
        a_bar, a_bar_prev = sched.alpha_bars[i], sched.alpha_bars[i - 1]
        assert c_v * np.sqrt(a_bar) + c_0 == pytest.approx(np.sqrt(a_bar_prev), rel=1e-10)
        # forward marginal variance is reproduced
        assert c_v ** 2 * (1 - a_bar) + sigma ** 2 == pytest.approx(1 - a_bar_prev, rel=1e-9, abs=1e-15)


def test_last_step_returns_the_estimate(sched, rng):
    v = rng.standard_normal(5)
    v_hat0 = rng.standard_normal(5)
    assert sched.post_vars[1] == 0.0
    np.testing.assert_allclose(ancestral_step(v, v_hat0, 1, sched, rng.standard_normal(5)), v_hat0, atol=1e-10)
    noisy = ancestral_step(v, v_hat0, 1, sched, np.ones(5), final_noise=True)
    np.testing.assert_allclose(noisy - v_hat0, np.sqrt(sched.betas[1]), rtol=1e-5)


def test_ancestral_step_zero_input(sched):
    np.testing.assert_array_equal(ancestral_step(np.zeros(3), np.zeros(3), 10, sched), 0.0)


def test_ancestral_step_errors(sched):
    with pytest.raises(ParameterError):
        ancestral_coefficients(0, sched)
    with pytest.raises(ParameterError):
        ancestral_coefficients(sched.n_steps + 1, sched)
    with pytest.raises(ShapeError):
        ancestral_step(np.zeros(3), np.zeros(4), 5, sched)


def test_sample_prior_is_deterministic(short_sched, image_model):
    a = sample_prior(image_model, short_sched, IMAGE_SHAPE, RandomStreams(3))
    b = sample_prior(image_model, short_sched, IMAGE_SHAPE, 3)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_prior(image_model, short_sched, IMAGE_SHAPE, 4))


def test_sample_prior_matches_gaussian_moments(sched):
    gen = np.random.default_rng(0)
    mean = gen.uniform(-1.0, 1.0, 8)
    var = gen.uniform(0.3, 1.5, 8)
    model = GaussianScore(GaussianPrior(mean, var))
    samples = sample_prior(model, sched, (2000, 8), RandomStreams(21))
    np.testing.assert_allclose(samples.mean(axis=0), mean, atol=0.12)
    np.testing.assert_allclose(samples.var(axis=0), var, rtol=0.15)


def test_sample_prior_final_noise_changes_output(short_sched, image_model):
    plain = sample_prior(image_model, short_sched, IMAGE_SHAPE, 8)
    noisy = sample_prior(image_model, short_sched, IMAGE_SHAPE, 8, final_noise=True)
    assert not np.array_equal(plain, noisy)


def test_zero_step_blind_sampler_reduces_to_prior_samples(short_sched, image_model, kernel_model, problem):
    """α = 0, λ = 0, no projection: each chain is an unguided prior chain on its own sub-stream."""
    _, _, y = problem
    config = GuidanceConfig(step_size=0.0, reg_weight=0.0, project_kernel=False)
    result = blind_dps_deblur(y, image_model, kernel_model, short_sched, config, RandomStreams(17))
    x_prior = sample_prior(image_model, short_sched, IMAGE_SHAPE, RandomStreams(17), branch='x')
    k_prior = sample_prior(kernel_model, short_sched, KERNEL_SHAPE, RandomStreams(17), branch='k')
    np.testing.assert_array_equal(result.x0, x_prior)
    np.testing.assert_array_equal(result.final_states['k'], k_prior)


def test_zero_step_dps_reduces_to_prior_sample(short_sched, image_model, problem):
    _, k, y = problem
    result = dps_nonblind(y, k, image_model, short_sched, GuidanceConfig(step_size=0.0), 23)
    np.testing.assert_array_equal(result.x0, sample_prior(image_model, short_sched, IMAGE_SHAPE, 23))
    np.testing.assert_array_equal(result.k0, k)


def test_dps_reduces_the_residual(short_sched, image_model, problem):
    x, k, y = problem
    guided = dps_nonblind(y, k, image_model, short_sched, GuidanceConfig(step_size=0.3), 2, x_true=x)
    unguided = dps_nonblind(y, k, image_model, short_sched, GuidanceConfig(step_size=0.0), 2, x_true=x)
    assert guided.final_residual < unguided.final_residual
    assert guided.method == 'dps'


def test_turbulence_without_tilt_model_is_blind_deblur(short_sched, image_model, kernel_model, problem):
    x, k, y = problem
    deblur = blind_dps_deblur(y, image_model, kernel_model, short_sched, GuidanceConfig(), RandomStreams(4),
                              x_true=x, k_true=k)
    turb = blind_dps_turbulence(y, image_model, kernel_model, None, short_sched, GuidanceConfig(),
                                RandomStreams(4), x_true=x, k_true=k)
    assert deblur.x0.tobytes() == turb.x0.tobytes()
    assert deblur.k0.tobytes() == turb.k0.tobytes()
    np.testing.assert_array_equal(turb.phi0, 0.0)
    assert deblur.final_residual == turb.final_residual


def test_turbulence_with_tilt_chain(short_sched, image_model, kernel_model, problem):
    _, _, y = problem
    tilt_model = GaussianScore(GaussianPrior(0.0, 0.25), IMAGE_SHAPE + (2,))
    result = blind_dps_turbulence(y, image_model, kernel_model, tilt_model, short_sched,
                                  GuidanceConfig(tilt_step_size=0.05), 6)
    assert result.phi0.shape == IMAGE_SHAPE + (2,)
    assert np.all(np.isfinite(result.phi0))
    assert in_simplex(result.k0)
    assert result.method == 'blind-turbulence'


def test_blind_deblur_result(short_sched, image_model, kernel_model, problem):
    x, k, y = problem
    options = SamplerOptions(snapshot_stride=10)
    result = blind_dps_deblur(y, image_model, kernel_model, short_sched, GuidanceConfig(), 11, options, x, k)
    assert result.x0.shape == IMAGE_SHAPE
    assert result.k0.shape == KERNEL_SHAPE
    assert in_simplex(result.k0)
    assert [s.step for s in result.trajectory] == [50, 40, 30, 20, 10, 1]
    for snap in result.trajectory:
        assert in_simplex(snap.k_hat)
        assert snap.mse_kernel is not None
    frame = result.trajectory_frame()
    assert list(frame.columns) == TRAJECTORY_COLUMNS
    assert len(frame) == 6
    assert result.argmin_kernel_mse_step() in {50, 40, 30, 20, 10, 1}
    assert result.seed == 11
    assert result.config['n_steps'] == 50


def test_blind_deblur_is_deterministic(short_sched, image_model, kernel_model, problem):
    _, _, y = problem
    a = blind_dps_deblur(y, image_model, kernel_model, short_sched, GuidanceConfig(reg_kind='l0', reg_weight=5.0), 9)
    b = blind_dps_deblur(y, image_model, kernel_model, short_sched, GuidanceConfig(reg_kind='l0', reg_weight=5.0), 9)
    assert a.x0.tobytes() == b.x0.tobytes()
    assert a.k0.tobytes() == b.k0.tobytes()


def test_default_snapshot_stride():
    assert SamplerOptions().stride(1000) == 20
    assert SamplerOptions().stride(30) == 1
    options = SamplerOptions.from_dict({'snapshot_stride': 5, 'final_noise': True})
    assert options.stride(1000) == 5 and options.final_noise
    with pytest.raises(ParameterError):
        SamplerOptions(snapshot_stride=0)


def test_uniform_baseline_without_kernel_steps_keeps_the_gaussian_start(short_sched, image_model, problem):
    _, _, y = problem
    config = GuidanceConfig(baseline_kernel_step=0.0, sigma_init=1.0)
    result = uniform_prior_baseline(y, image_model, short_sched, config, 3, kernel_shape=(5, 5))
    np.testing.assert_allclose(result.k0, gen_gaussian_kernel(1.0, 5), atol=1e-15)
    assert result.method == 'uniform-baseline'


def test_uniform_baseline_kernel_stays_in_simplex(short_sched, image_model, problem):
    x, k, y = problem
    result = uniform_prior_baseline(y, image_model, short_sched, GuidanceConfig(), 3, kernel_shape=(3, 3),
                                    x_true=x, k_true=k)
    assert in_simplex(result.k0)
    assert all(in_simplex(s.k_hat) for s in result.trajectory)


def test_divergence_reports_the_last_snapshot(short_sched, image_model, problem):
    _, k, y = problem
    with np.errstate(over='ignore', invalid='ignore'):
        with pytest.raises(DivergenceError) as info:
            dps_nonblind(y, k, image_model, short_sched, GuidanceConfig(step_size=1e300), 1)
    error = info.value
    assert error.step < short_sched.n_steps
    assert error.last_snapshot['step'] == error.step + 1
    assert error.last_snapshot['x'].shape == IMAGE_SHAPE
    assert error.to_record()['exit_code'] == 4
