"""Tests for the grid, field containers, transforms and norms."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmild.errors import DomainError, InvalidFieldError, SymmetryError
from nsmild.field_core import (
    GridSpec,
    SpectralField,
    Trajectory,
    VectorField,
    forward_transform,
    fft_coeffs,
    inner_product,
    inverse_transform,
    lp_norm,
    random_smooth_field,
    spectral_divergence,
    sup_norm,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestGridSpec:
    def test_defaults(self):
        g = GridSpec()
        assert (g.dim, g.points) == (3, 32)
        assert g.spacing == pytest.approx(2 * np.pi / 32)

    @pytest.mark.parametrize("points", [4, 6, 9, 15])
    def test_rejects_small_or_odd(self, points):
        with pytest.raises(DomainError):
            GridSpec(points)

    def test_rejects_low_dimension(self):
        with pytest.raises(DomainError):
            GridSpec(8, dim=2)

    def test_rejects_bad_length(self):
        with pytest.raises(DomainError):
            GridSpec(8, length=-1.0)

    def test_wavenumber_range(self):
        g = GridSpec(8, length=3.0)
        n = g.mode_numbers[0].ravel()
        assert n.min() == -4 and n.max() == 3
        np.testing.assert_allclose(g.wavevector[0].ravel(), 2 * np.pi * n / 3.0)


class TestVectorField:
    def test_rejects_nonfinite(self, grid16):
        arr = np.zeros((3,) + grid16.shape)
        arr[0, 1, 2, 3] = np.nan
        with pytest.raises(InvalidFieldError):
            VectorField(grid16, arr)

    def test_rejects_wrong_shape(self, grid16):
        with pytest.raises(InvalidFieldError):
            VectorField(grid16, np.zeros((3, 8, 8, 8)))

    def test_immutable(self, grid16):
        f = VectorField.zeros(grid16)
        with pytest.raises(ValueError):
            f.components[0, 0, 0, 0] = 1.0

    def test_curl_field_is_divergence_free(self, grid16, rng):
        from nsmild.field_core import curl

        psi = random_smooth_field(grid16, rng)
        assert curl(psi).is_divergence_free()
        assert not psi.is_divergence_free()


class TestForwardTransform:
    def test_zero(self, grid16):
        F = forward_transform(VectorField.zeros(grid16))
        assert np.all(F.coefficients == 0)

    def test_single_cosine(self):
        g = GridSpec(16, length=5.0)
        f = VectorField.from_function(g, lambda x, y, z: (np.cos(2 * np.pi * x / 5.0), 0 * x, 0 * x))
        F = forward_transform(f)
        c = F.coefficients[0]
        np.testing.assert_allclose(F.at_mode((1, 0, 0))[0], 0.5, atol=1e-14)
        np.testing.assert_allclose(F.at_mode((-1, 0, 0))[0], 0.5, atol=1e-14)
        assert np.count_nonzero(np.abs(c) > 1e-13) == 2
        assert np.abs(F.coefficients[1:]).max() == 0

    def test_round_trip_random(self, grid16, rng):
        f = random_smooth_field(grid16, rng)
        back = inverse_transform(forward_transform(f))
        assert np.abs(back.components - f.components).max() <= 1e-12 * f.max_modulus()

    def test_hermitian(self, grid16, rng):
        assert forward_transform(random_smooth_field(grid16, rng)).hermitian


class TestInverseTransform:
    def test_zero(self, grid16):
        f = inverse_transform(SpectralField(grid16, np.zeros((3,) + grid16.shape, dtype=complex)))
        assert np.all(f.components == 0)

    def test_hermitian_pair_gives_cosine(self, grid16):
        c = np.zeros((1,) + grid16.shape, dtype=complex)
        c[0, 2, 1, 0] = 0.5
        c[0, -2, -1, 0] = 0.5
        f = inverse_transform(SpectralField(grid16, c))
        x, y, _ = grid16.coords
        expected = np.broadcast_to(np.cos(2 * x + y), grid16.shape)
        np.testing.assert_allclose(f.components[0], expected, atol=1e-13)

    def test_symmetry_violation(self, grid16):
        c = np.zeros((1,) + grid16.shape, dtype=complex)
        c[0, 2, 1, 0] = 0.5
        with pytest.raises(SymmetryError):
            inverse_transform(SpectralField(grid16, c))


class TestLpNorm:
    def test_zero(self, grid16):
        for p in (1, 2, 3.5, np.inf):
            assert lp_norm(VectorField.zeros(grid16), p) == 0

    def test_constant(self):
        g = GridSpec(8, length=3.0)
        f = VectorField.from_function(g, lambda x, y, z: (-2.5 + 0 * x, 0 * x, 0 * x))
        assert lp_norm(f, 2) == pytest.approx(2.5 * 3.0**1.5, rel=1e-14)

    def test_gaussian_l1_closed_form(self):
        # int exp(-|x|^2 / (2 s^2)) dx = (2 pi s^2)^{3/2}
        g = GridSpec(64, length=12.0)
        s = 0.8
        f = VectorField.from_function(g, lambda x, y, z: (np.exp(-(x**2 + y**2 + z**2) / (2 * s * s)),))
        assert lp_norm(f, 1) == pytest.approx((2 * np.pi * s * s) ** 1.5, rel=1e-6)

    def test_rejects_p_below_one(self, grid16):
        with pytest.raises(DomainError):
            lp_norm(VectorField.zeros(grid16), 0.5)

    def test_sup_norm_catches_off_grid_peak(self):
        g = GridSpec(16)
        shift = g.spacing / 2
        f = VectorField.from_function(g, lambda x, y, z: (np.cos(3 * (x - shift)),))
        assert lp_norm(f, np.inf) < 0.99
        assert sup_norm(f) == pytest.approx(1.0, abs=1e-12)


class TestSpectralDivergence:
    def test_gradient_field(self, grid16, rng):
        p = random_smooth_field(grid16, rng, ncomp=1, bandwidth=4)
        pc = fft_coeffs(grid16, p.components)[0]
        grad = np.stack([1j * k * pc for k in grid16.derivative_wavevector])
        div = spectral_divergence(SpectralField(grid16, grad)).coefficients[0]
        np.testing.assert_allclose(div, -grid16.ksq * pc, atol=1e-14)

    def test_transverse_mode(self, grid16):
        c = np.zeros((3,) + grid16.shape, dtype=complex)
        a = np.array([0.0, 1.0, -2.0])
        c[:, 1, 2, 1] = a
        c[:, -1, -2, -1] = a
        div = spectral_divergence(SpectralField(grid16, c)).coefficients
        assert np.abs(div).max() < 1e-15

    def test_matches_finite_differences(self, rng):
        errs = []
        for n in (16, 32):
            g = GridSpec(n)
            f = VectorField.from_function(
                g, lambda x, y, z: (np.sin(x) * np.cos(2 * y), np.cos(y + z), np.sin(x - 2 * z))
            )
            div = np.real(np.fft.ifftn(spectral_divergence(forward_transform(f)).coefficients[0] * g.parity)) * n**3
            h = g.spacing
            fd = sum(
                (np.roll(f.components[a], -1, axis=a) - np.roll(f.components[a], 1, axis=a)) / (2 * h)
                for a in range(3)
            )
            errs.append(np.abs(div - fd).max())
        # second-order: halving h divides the gap by ~4
        assert errs[1] < errs[0] / 3.5


class TestTrajectory:
    def test_rejects_unsorted_times(self, grid16):
        z = VectorField.zeros(grid16)
        with pytest.raises(InvalidFieldError):
            Trajectory(grid16, [0.0, 0.2, 0.1], (z, z, z))

    def test_state_interpolation(self, grid16):
        a = VectorField.zeros(grid16)
        b = VectorField(grid16, np.ones((3,) + grid16.shape))
        tr = Trajectory(grid16, [0.0, 1.0], (a, b))
        np.testing.assert_allclose(tr.state_at(0.25).components, 0.25)
        assert tr.state_at(0.0) is not None and tr.initial is a
        with pytest.raises(DomainError):
            tr.state_at(1.5)


class TestProperties:
    @settings(max_examples=100, deadline=None)
    @given(seed=seeds)
    def test_parseval(self, seed):
        g = GridSpec(8)
        f = random_smooth_field(g, np.random.default_rng(seed))
        assert forward_transform(f).l2_norm() == pytest.approx(lp_norm(f, 2), rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, n=st.sampled_from([8, 16, 32]))
    def test_round_trip(self, seed, n):
        f = random_smooth_field(GridSpec(n), np.random.default_rng(seed))
        back = inverse_transform(forward_transform(f))
        assert np.abs(back.components - f.components).max() <= 1e-12 * f.max_modulus()

    @settings(max_examples=50, deadline=None)
    @given(
        seed=seeds,
        c=st.floats(1e-6, 1e3) | st.floats(-1e3, -1e-6) | st.just(0.0),
        p=st.sampled_from([1, 1.5, 2, 3, np.inf]),
    )
    def test_homogeneity(self, seed, c, p):
        f = random_smooth_field(GridSpec(8), np.random.default_rng(seed))
        assert lp_norm(c * f, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, p=st.sampled_from([2.0, 3.0, 1.5]))
    def test_holder(self, seed, p):
        g = GridSpec(8)
        rng = np.random.default_rng(seed)
        f = random_smooth_field(g, rng, ncomp=1)
        h = random_smooth_field(g, rng, ncomp=1)
        q = p / (p - 1)
        prod = VectorField(g, f.components * h.components)
        assert lp_norm(prod, 1) <= lp_norm(f, p) * lp_norm(h, q) * (1 + 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds)
    def test_inner_product_symmetric(self, seed):
        g = GridSpec(8)
        rng = np.random.default_rng(seed)
        f, h = random_smooth_field(g, rng), random_smooth_field(g, rng)
        assert inner_product(f, h) == pytest.approx(inner_product(h, f), rel=1e-13)
