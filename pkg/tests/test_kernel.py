import numpy as np
import pytest

from nlch.errors import InvalidParameter, ResolutionGuard, SupportOverflow
from nlch.grid import Grid
from nlch.kernel import build_kernel, convolve, effective_D, moment, profile_values


def test_guards():
    g = Grid(1, 64)
    with pytest.raises(ResolutionGuard):
        build_kernel("poly_bump", 0.02, g)
    with pytest.raises(SupportOverflow):
        build_kernel("poly_bump", 0.5, Grid(1, 256))
    with pytest.raises(InvalidParameter):
        build_kernel("tent", 0.1, g)


def test_profiles_vanish_outside_unit_ball():
    r = np.array([0.0, 0.5, 1.0, 1.5])
    assert np.array_equal(profile_values("poly_bump", r), [1.0, 0.75, 0.0, 0.0])
    assert profile_values("smooth_bump", r)[0] == np.exp(-1.0)
    assert profile_values("smooth_bump", r)[2] == 0.0


@pytest.mark.parametrize("profile", ["poly_bump", "smooth_bump"])
@pytest.mark.parametrize("dim,n,eps", [(1, 64, 0.1), (2, 32, 0.15)])
def test_normalized_and_symmetric(profile, dim, n, eps):
    g = Grid(dim, n)
    k = build_kernel(profile, eps, g)
    assert abs(np.sum(k.weights) * g.cell_volume - 1.0) <= 1e-14
    assert np.all(k.weights > 0)
    lookup = {tuple(o): w for o, w in zip(k.offsets, k.weights)}
    assert all(lookup[tuple(-np.array(o))] == w for o, w in lookup.items())
    assert k.radius <= int(np.ceil(eps * n))
    # first moments vanish
    for i in range(dim):
        y = k.offsets[:, i] * g.h
        assert abs(np.sum(k.weights * y)) <= 1e-12


# exact rational evaluation of the discrete second moment (Fraction arithmetic)
@pytest.mark.parametrize(
    "eps,n,expected",
    [
        (0.2, 256, 0.09999890410446728),
        (0.1, 256, 0.1000653689454431),
        (0.05, 256, 0.09994834277762875),
        (0.1, 64, 0.10116984653189912),
        (0.1, 1024, 0.10000422277902507),
    ],
)
def test_effective_D_poly_bump_1d(eps, n, expected):
    k = build_kernel("poly_bump", eps, Grid(1, n))
    assert effective_D(k) == pytest.approx(expected, rel=1e-13)


def test_effective_D_limits():
    # continuum values: poly_bump 1/10 in 1D and 1/12 in 2D; smooth_bump 1D from quadrature
    assert build_kernel("poly_bump", 0.1, Grid(1, 4096)).D2 == pytest.approx(0.1, rel=1e-5)
    assert build_kernel("poly_bump", 0.2, Grid(2, 256)).D2 == pytest.approx(1.0 / 12.0, rel=2e-3)
    assert build_kernel("smooth_bump", 0.1, Grid(1, 4096)).D2 == pytest.approx(0.07905681813189833, rel=1e-5)


def test_second_moment_isotropic_2d():
    k = build_kernel("poly_bump", 0.2, Grid(2, 128))
    assert moment(k, 0, 1) == pytest.approx(0.0, abs=1e-15)
    assert moment(k, 0, 0) == pytest.approx(moment(k, 1, 1), rel=1e-14)
    assert (moment(k, 0, 0) + moment(k, 1, 1)) / (4 * 0.2**2) == pytest.approx(k.D2, rel=1e-14)


@pytest.mark.parametrize("dim,n,eps", [(1, 64, 0.1), (2, 32, 0.1), (1, 100, 0.07)])
def test_fft_matches_direct(dim, n, eps, rng):
    g = Grid(dim, n)
    k = build_kernel("poly_bump", eps, g)
    f = rng.standard_normal(g.shape)
    a = convolve(k, f, path="fft")
    b = convolve(k, f, path="direct")
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_convolution_preserves_mass(k1, rng):
    f = rng.standard_normal(k1.grid.shape)
    assert abs(np.sum(convolve(k1, f)) - np.sum(f)) <= 1e-12 * np.sum(np.abs(f))


def test_dense_layout(k1):
    arr = k1.dense()
    assert arr.shape == k1.grid.shape
    assert arr.sum() == pytest.approx(k1.weights.sum(), rel=1e-15)
