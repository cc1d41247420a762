import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixheat.errors import GridMismatch, InvalidOrder, SymmetryViolation
from mixheat.spectral import (
    Field,
    GridSpec,
    Spectrum,
    apply_multiplier,
    divergence,
    forward_transform,
    fractional_laplacian_half,
    gradient,
    inner,
    inverse_transform,
    laplacian,
    norms,
    pointwise_product,
    spectral_l2,
)

TWO_PI = 2 * np.pi


def random_field(grid, seed):
    rng = np.random.default_rng(seed)
    return Field(grid, rng.standard_normal(grid.shape))


class TestGridSpec:
    @pytest.mark.parametrize("n", [8, 15, 24, 0])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError, match="power of two"):
            GridSpec(1, n)

    def test_rejects_dimension_and_period(self):
        with pytest.raises(ValueError):
            GridSpec(3, 16)
        with pytest.raises(ValueError):
            GridSpec(1, 16, period=-1.0)

    def test_spacing_and_coordinates(self):
        g = GridSpec(2, 32, period=4.0)
        assert g.spacing == 4.0 / 32
        assert g.shape == (32, 32)
        x, y = g.coordinates
        assert x.shape == (32, 1) and y.shape == (1, 32)

    def test_field_flat_row_major(self):
        g = GridSpec(2, 16)
        flat = np.arange(256.0)
        f = Field(g, flat)
        assert f.values[1, 0] == 16.0
        np.testing.assert_array_equal(f.flat, flat)

    def test_field_rejects_nonfinite(self):
        g = GridSpec(1, 16)
        with pytest.raises(ValueError, match="finite"):
            Field(g, np.full(16, np.nan))


class TestTransforms:
    def test_constant_mode(self):
        g = GridSpec(2, 16, period=3.0)
        U = forward_transform(Field.constant(g, 1.0))
        expected = np.zeros(g.shape)
        expected[0, 0] = 1.0
        np.testing.assert_allclose(U.coefficients, expected, atol=1e-15)

    def test_cosine_mode(self):
        g = GridSpec(1, 64, period=5.0)
        u = Field.from_function(g, lambda x: np.cos(TWO_PI * x / 5.0))
        c = forward_transform(u).coefficients
        nonzero = np.flatnonzero(np.abs(c) > 1e-12)
        assert set(nonzero) == {1, 63}
        np.testing.assert_allclose(np.abs(c[[1, 63]]), 0.5, atol=1e-14)

    @pytest.mark.parametrize("d,n", [(1, 16), (1, 256), (2, 16), (2, 64)])
    def test_round_trip(self, d, n):
        u = random_field(GridSpec(d, n), seed=n + d)
        back = inverse_transform(forward_transform(u))
        assert np.max(np.abs(back.values - u.values)) <= 1e-12 * u.max_abs()

    def test_zero_spectrum(self):
        g = GridSpec(1, 32)
        back = inverse_transform(Spectrum(g, np.zeros(32)))
        assert np.all(back.values == 0)

    def test_inverse_of_cos_spectrum(self):
        g = GridSpec(1, 32)
        c = np.zeros(32, dtype=complex)
        c[1] = c[-1] = 0.5
        x = g.coordinates[0]
        np.testing.assert_allclose(inverse_transform(Spectrum(g, c)).values, np.cos(x), atol=1e-12)

    def test_broken_symmetry(self):
        g = GridSpec(1, 32)
        c = np.zeros(32, dtype=complex)
        c[1] = 1.0
        with pytest.raises(SymmetryViolation):
            inverse_transform(Spectrum(g, c))

    def test_spectrum_of_real_field_is_symmetric(self):
        U = forward_transform(random_field(GridSpec(2, 32), 3))
        assert U.conjugate_symmetry_error() <= 1e-12


class TestFractional:
    @pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
    def test_eigenfunction(self, s):
        L = 7.0
        g = GridSpec(1, 64, period=L)
        k = TWO_PI * 3 / L
        u = Field.from_function(g, lambda x: np.cos(k * x))
        out = fractional_laplacian_half(u, s)
        np.testing.assert_allclose(out.values, k**s * u.values, atol=1e-12)

    def test_constant_maps_to_zero(self):
        g = GridSpec(2, 16)
        out = fractional_laplacian_half(Field.constant(g, 3.0), 0.4)
        assert np.max(np.abs(out.values)) < 1e-14

    @pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
    def test_invalid_order(self, s):
        with pytest.raises(InvalidOrder):
            fractional_laplacian_half(Field.zeros(GridSpec(1, 16)), s)

    @pytest.mark.parametrize("d", [1, 2])
    def test_semigroup(self, d):
        g = GridSpec(d, 32, period=3.0)
        u = random_field(g, 11)
        s = 0.35
        twice = fractional_laplacian_half(fractional_laplacian_half(u, s), s)
        once = apply_multiplier(u, g.abs_wavenumber() ** (2 * s))
        assert np.max(np.abs(twice.values - once.values)) <= 1e-12 * max(1.0, once.max_abs())


class TestDerivatives:
    def test_gradient_sin(self):
        g = GridSpec(1, 64)
        u = Field.from_function(g, lambda x: np.sin(2 * x))
        (du,) = gradient(u)
        np.testing.assert_allclose(du.values, 2 * np.cos(2 * g.coordinates[0]), atol=1e-12)

    def test_gradient_constant(self):
        g = GridSpec(2, 16)
        for comp in gradient(Field.constant(g, 2.0)):
            assert np.max(np.abs(comp.values)) < 1e-14

    def test_gradient_2d(self):
        L = 4.0
        k = TWO_PI / L
        g = GridSpec(2, 32, period=L)
        u = Field.from_function(g, lambda x, y: np.sin(k * x) * np.sin(k * y))
        gx, gy = gradient(u)
        x, y = g.coordinates
        np.testing.assert_allclose(gx.values, k * np.cos(k * x) * np.sin(k * y), atol=1e-12)
        np.testing.assert_allclose(gy.values, k * np.sin(k * x) * np.cos(k * y), atol=1e-12)

    def test_div_grad_is_laplacian(self):
        g = GridSpec(1, 64)
        u = Field.from_function(g, lambda x: np.cos(3 * x))
        lap = divergence(gradient(u))
        np.testing.assert_allclose(lap.values, -9 * u.values, atol=1e-11)
        np.testing.assert_allclose(laplacian(u).values, lap.values, atol=1e-11)

    def test_div_of_constant(self):
        g = GridSpec(2, 16)
        out = divergence([Field.constant(g, 1.0), Field.constant(g, -2.0)])
        assert np.max(np.abs(out.values)) < 1e-14

    def test_div_curl_zero(self):
        g = GridSpec(2, 32)
        phi = random_field(g, 5)
        px, py = gradient(phi)
        out = divergence([-py, px])
        assert np.max(np.abs(out.values)) <= 1e-12 * max(px.max_abs(), 1.0)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            divergence([Field.zeros(GridSpec(2, 16)), Field.zeros(GridSpec(2, 32))])


class TestNorms:
    def test_cos_norms(self):
        g = GridSpec(1, 64)
        u = Field.from_function(g, np.cos)
        nm = norms(u, 0.5)
        assert nm.l2**2 == pytest.approx(np.pi, rel=1e-13)
        assert nm.hs_seminorm**2 == pytest.approx(np.pi, rel=1e-13)
        assert nm.h1**2 == pytest.approx(2 * np.pi, rel=1e-13)

    @pytest.mark.parametrize("d,n", [(1, 16), (1, 64), (1, 256), (2, 16), (2, 64), (2, 256)])
    def test_plancherel(self, d, n):
        u = random_field(GridSpec(d, n, period=2.5), 100 + n)
        phys = norms(u, 0.5).l2
        assert spectral_l2(forward_transform(u)) == pytest.approx(phys, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), s=st.floats(0.05, 0.95), d=st.sampled_from([1, 2]))
def test_fractional_self_adjoint_and_nonneg(seed, s, d):
    g = GridSpec(d, 32, period=3.0)
    u, v = random_field(g, seed), random_field(g, seed + 1)
    lu, lv = fractional_laplacian_half(u, s), fractional_laplacian_half(v, s)
    a, b = inner(lu, v), inner(u, lv)
    assert abs(a - b) <= 1e-12 * max(abs(a), np.sqrt(inner(lu, lu) * inner(v, v)))
    assert inner(lu, lu) >= 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), s=st.sampled_from([0.1 * j for j in range(1, 10)]))
def test_fourier_domination(seed, s):
    g = GridSpec(1, 64, period=1.3)
    k = g.abs_wavenumber()
    assert np.all(k ** (2 * s) <= 1 + k**2)
    u = random_field(g, seed)
    nm = norms(u, s)
    assert nm.hs_seminorm**2 <= nm.h1**2


class TestDealias:
    def test_padded_product_of_low_modes_is_exact(self):
        g = GridSpec(1, 32)
        f = Field.from_function(g, lambda x: np.cos(5 * x))
        h = Field.from_function(g, lambda x: np.sin(6 * x))
        plain = pointwise_product(f, h)
        padded = pointwise_product(f, h, dealias=True)
        np.testing.assert_allclose(padded.values, plain.values, atol=1e-13)

    def test_padded_product_removes_aliasing(self):
        g = GridSpec(1, 32)
        f = Field.from_function(g, lambda x: np.cos(12 * x))
        padded = pointwise_product(f, f, dealias=True)
        # cos^2(12x) = 1/2 + cos(24x)/2 and mode 24 is not represented
        np.testing.assert_allclose(padded.values, 0.5, atol=1e-13)

    def test_padded_product_adjoint(self):
        g = GridSpec(2, 16)
        a, u, w = (random_field(g, j) for j in range(3))
        lhs = inner(pointwise_product(a, u, dealias=True), w)
        rhs = inner(pointwise_product(a, w, dealias=True), u)
        assert lhs == pytest.approx(rhs, rel=1e-12)
