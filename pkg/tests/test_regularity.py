"""Tests for the fluctuation, its Hoelder fits and the smoothing and interpolation bounds."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from nsmild.errors import DomainError, FitError
from nsmild.field_core import GridSpec, VectorField, lp_norm, random_smooth_field
from nsmild.regularity import (
    admissible_p_limit,
    compute_fluctuation,
    fluctuation_norms,
    interpolation_check,
    l1r_norm,
    loglog_fit,
    smoothing_difference_bound,
    smoothing_difference_check,
    spatial_holder_fit,
    temporal_holder_fit,
)


def cos_mode(grid, k=(1, 2, 0), a=(2.0, -1.0, 0.0)):
    return VectorField.from_function(
        grid, lambda x, y, z: tuple(c * np.cos(k[0] * x + k[1] * y + k[2] * z) for c in a)
    )


def shifted_sine(grid, phase):
    # a sin(k.x + phase) for the same k and a as cos_mode
    return VectorField.from_function(
        grid, lambda x, y, z: tuple(c * np.sin(x + 2 * y + phase) for c in (2.0, -1.0, 0.0))
    )


class TestFluctuation:
    def test_zero_at_start(self, tg_traj):
        assert np.abs(compute_fluctuation(tg_traj, 0.0).components).max() <= 1e-15

    def test_zero_for_heat_flow(self, tg_heat_traj):
        v = compute_fluctuation(tg_heat_traj, 0.5)
        assert np.abs(v.components).max() <= 1e-12

    def test_taylor_green_nontrivial_and_bounded(self, tg_traj):
        v = compute_fluctuation(tg_traj, 0.5)
        assert 0 < lp_norm(v, 2) <= 2 * lp_norm(tg_traj.initial, 2)

    def test_out_of_range(self, tg_traj):
        with pytest.raises(DomainError):
            compute_fluctuation(tg_traj, 0.75)

    def test_norms_start_at_zero(self, tg_traj):
        norms = fluctuation_norms(tg_traj, 0.5, times=[0.0, 0.125, 0.25])
        assert norms[0] == 0 and np.all(norms[1:] > 0)


class TestL1rNorm:
    def test_r_zero_is_l1(self, grid16, rng):
        f = random_smooth_field(grid16, rng)
        assert l1r_norm(f, 0.0) == lp_norm(f, 1)

    def test_nondecreasing_in_r(self, grid16, rng):
        f = random_smooth_field(grid16, rng, bandwidth=4)
        vals = [l1r_norm(f, r) for r in (0.0, 0.25, 0.5, 0.75, 0.99)]
        assert np.all(np.diff(vals) >= 0)

    def test_single_mode_scaling(self, grid16):
        f = cos_mode(grid16)
        assert l1r_norm(f, 0.5) == pytest.approx(6.0**0.25 * lp_norm(f, 1), rel=1e-12)

    @pytest.mark.parametrize("r", [-0.1, 1.0, 1.5])
    def test_rejects(self, grid16, r):
        with pytest.raises(DomainError):
            l1r_norm(VectorField.zeros(grid16), r)


class TestTemporalFit:
    def test_degenerate_for_heat_flow(self, tg_heat_traj):
        assert np.all(fluctuation_norms(tg_heat_traj, 0.5) == 0)
        fit = temporal_holder_fit(tg_heat_traj, 0.25, 0.5, [1 / 64, 1 / 32, 1 / 16])
        assert fit.degenerate and np.isnan(fit.slope)

    def test_smooth_flow_is_lipschitz_in_time(self, tg_traj):
        fit = temporal_holder_fit(tg_traj, 0.25, 0.5, [1 / 64, 1 / 32, 1 / 16, 1 / 8])
        assert not fit.degenerate
        assert 0.8 < fit.slope < 1.2

    def test_needs_three_offsets(self, tg_traj):
        with pytest.raises(FitError):
            temporal_holder_fit(tg_traj, 0.25, 0.5, [1 / 64, 0.5])

    def test_rejects_repeated_offsets(self, tg_traj):
        with pytest.raises(FitError):
            temporal_holder_fit(tg_traj, 0.25, 0.5, [1 / 64, 1 / 64, 1 / 32])


class TestSpatialFit:
    def test_single_mode_oracle(self, grid16):
        # a cos(k.x + k.h) - a cos(k.x) = -2 sin(k.h/2) a sin(k.x + k.h/2), k.h = h here
        f = cos_mode(grid16)
        hs = [0.5, 0.25, 0.125, 0.0625]
        fit = spatial_holder_fit(f, 1.0, 0.5, hs)
        expected = np.array([
            2 * abs(np.sin(h / 2)) * lp_norm(shifted_sine(grid16, h / 2), 1) for h in hs
        ])
        np.testing.assert_allclose(fit.norms, expected, rtol=1e-10)
        assert fit.slope == pytest.approx(1.0, abs=0.02)
        assert fit.constant == pytest.approx(
            (expected / (np.array(hs) ** 0.5 * l1r_norm(f, 0.5))).max(), rel=1e-10
        )

    def test_vector_displacements(self, grid16):
        f = cos_mode(grid16)
        hs = np.array([[0.0, 0.2, 0.0], [0.0, 0.1, 0.0], [0.0, 0.05, 0.0]])
        fit = spatial_holder_fit(f, 1.0, 0.5, hs)
        expected = [2 * abs(np.sin(h)) * lp_norm(shifted_sine(grid16, h), 1) for h in hs[:, 1]]
        np.testing.assert_allclose(fit.norms, expected, rtol=1e-10)

    def test_p_range(self, grid16):
        f = cos_mode(grid16)
        assert admissible_p_limit(3, 0.5) == pytest.approx(1.2)
        with pytest.raises(DomainError):
            spatial_holder_fit(f, 1.2, 0.5, [0.1, 0.2, 0.3])
        with pytest.raises(DomainError):
            spatial_holder_fit(f, 1.0, 0.5, [0.5, 1.5, 0.2])


class TestSmoothingDifference:
    def test_bound_value(self):
        assert smoothing_difference_bound(0.5, 0.25) == pytest.approx(2 * 0.5 / gamma(1.5))

    def test_single_mode_closed_form(self, grid16):
        f = cos_mode(grid16)
        eps, hs = 0.3, [0.0, 0.01, 0.1, 1.0]
        got = smoothing_difference_check(f, eps, hs)
        expected = [(1 - np.exp(-5 * h)) * 6.0**-eps for h in hs]
        np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-15)
        assert all(g <= smoothing_difference_bound(eps, h) for g, h in zip(got[1:], hs[1:]))

    def test_rejects(self, grid16):
        with pytest.raises(DomainError):
            smoothing_difference_check(cos_mode(grid16), 0.0, [0.1])
        with pytest.raises(DomainError):
            smoothing_difference_check(VectorField.zeros(grid16), 0.5, [0.1])
        with pytest.raises(DomainError):
            smoothing_difference_check(cos_mode(grid16), 0.5, [-0.1])


class TestInterpolation:
    def test_equality_for_constant_modulus(self, grid16):
        # |v| constant on its support makes Hoelder sharp
        mask = np.broadcast_to((np.abs(grid16.coords[0]) < 1.0) & (np.abs(grid16.coords[1]) < 2.0), grid16.shape)
        v = VectorField(grid16, np.stack([mask * 1.0, mask * -1.0, 0 * mask]).astype(float))
        for p in (1.2, 1.5, 1.9):
            assert interpolation_check(v, p).ratio == pytest.approx(1.0, abs=1e-6)

    def test_gaussian_strict(self, grid16):
        v = VectorField.from_function(grid16, lambda x, y, z: (np.exp(-(x * x + y * y + z * z)),))
        rec = interpolation_check(v, 1.5)
        assert rec.ratio < 1 and rec.theta == pytest.approx(1 / 3)

    def test_degenerate_zero(self, grid16):
        assert interpolation_check(VectorField.zeros(grid16), 1.5).degenerate

    def test_rejects_p(self, grid16):
        with pytest.raises(DomainError):
            interpolation_check(VectorField.zeros(grid16), 2.0)


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.floats(1.01, 1.99))
    def test_interpolation_inequality(self, seed, p):
        v = random_smooth_field(GridSpec(8), np.random.default_rng(seed))
        assert interpolation_check(v, p).ratio <= 1 + 1e-10

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0.05, 1.0), h=st.floats(1e-4, 2.0))
    def test_smoothing_bound(self, seed, eps, h):
        f = random_smooth_field(GridSpec(8), np.random.default_rng(seed), bandwidth=3)
        assert smoothing_difference_check(f, eps, [h])[0] <= smoothing_difference_bound(eps, h)

    def test_loglog_fit_exact(self):
        x = np.geomspace(0.01, 1, 7)
        slope, intercept, resid = loglog_fit(x, 2 * x**0.7)
        assert slope == pytest.approx(0.7) and intercept == pytest.approx(np.log(2)) and resid < 1e-12
