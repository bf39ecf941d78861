import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlch.errors import DegenerateInput
from nlch.grid import Grid, face_norm2, grad, integrate, laplacian
from nlch.kernel import build_kernel
from nlch.nonlocal_ops import (
    B_symbol,
    apply_B,
    bbm_energy,
    consistency_error,
    duality_gap,
    entropy_dissipation_nl,
    h1_poincare_constant,
    poincare_ratio,
    product_rule_residual,
    quad_form_report,
    s_inner,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def _scale(k, f, g):
    return 2.0 * np.max(np.abs(f)) * np.max(np.abs(g)) / k.eps**2


def test_B_annihilates_constants(k1, k2):
    for k in (k1, k2):
        for c in (0.0, 1.0, -3.3, 1e4 / 3):
            f = np.full(k.grid.shape, c)
            assert np.max(np.abs(apply_B(k, f))) <= 1e-13
            assert np.max(np.abs(apply_B(k, f, path="direct"))) <= 1e-13


def test_B_preserves_zero_mean(k1, rng):
    f = rng.standard_normal(k1.grid.shape)
    assert abs(integrate(k1.grid, apply_B(k1, f))) <= 1e-13 * np.max(np.abs(f)) / k1.eps**2


def test_B_symbol_eigenvalue(k1):
    g = k1.grid
    x = g.coords()[0]
    for q in (1, 3, 7):
        f = np.cos(2 * np.pi * q * x)
        assert np.max(np.abs(apply_B(k1, f) - B_symbol(k1)[q] * f)) <= 1e-11


@pytest.mark.parametrize("fixture", ["k1", "k2"])
def test_duality_random(fixture, request, rng):
    k = request.getfixturevalue(fixture)
    for _ in range(5):
        f = rng.standard_normal(k.grid.shape)
        g = rng.standard_normal(k.grid.shape)
        assert duality_gap(k, f, g) <= 1e-12 * _scale(k, f, g)


def test_duality_f_equals_g_gives_twice_bbm(k1, rng):
    f = rng.standard_normal(k1.grid.shape)
    assert s_inner(k1, f, f) == pytest.approx(2.0 * bbm_energy(k1, f), rel=1e-13)
    assert duality_gap(k1, f, f) <= 1e-12 * _scale(k1, f, f)


def test_duality_constant_f(k1, rng):
    f = np.full(k1.grid.shape, 2.0)
    g = rng.standard_normal(k1.grid.shape)
    assert duality_gap(k1, f, g) == 0.0


def test_product_rule(k1, k2, rng):
    for k in (k1, k2):
        f = rng.standard_normal(k.grid.shape)
        g = rng.standard_normal(k.grid.shape)
        c = np.sqrt(np.max(k.weights)) / (np.sqrt(2) * k.eps)
        assert product_rule_residual(k, f, np.ones(k.grid.shape)) == 0.0
        assert product_rule_residual(k, f, f) <= 1e-13 * c * np.max(np.abs(f)) ** 2
        assert product_rule_residual(k, f, g) <= 1e-13 * c * np.max(np.abs(f)) * np.max(np.abs(g))
        mode = np.cos(2 * np.pi * k.grid.coords()[0])
        assert product_rule_residual(k, f, mode) <= 1e-13 * c * np.max(np.abs(f))


def test_quad_form_report(k1, rng):
    probes = [rng.standard_normal(k1.grid.shape) for _ in range(4)]
    rep = quad_form_report(k1, probes)
    scale = 2.0 * max(np.max(np.abs(p)) for p in probes) ** 2 / k1.eps**2
    assert rep.symmetry_residual <= 1e-12 * scale
    assert rep.psd_witness > 0


def test_bbm_constant_zero_and_paths_agree(k1, rng):
    assert bbm_energy(k1, np.full(k1.grid.shape, 4.0)) == 0.0
    f = rng.standard_normal(k1.grid.shape)
    assert bbm_energy(k1, f, path="fft") == pytest.approx(bbm_energy(k1, f), rel=1e-12)


def test_bbm_limit_sine_order_two():
    g = Grid(1, 1024)
    f = np.sin(2 * np.pi * g.coords()[0])
    errs = []
    for eps in (0.2, 0.1, 0.05):
        k = build_kernel("poly_bump", eps, g)
        errs.append(abs(bbm_energy(k, f) - 0.5 * k.D2 * 2 * np.pi**2))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_consistency_order():
    g = Grid(1, 1024)
    u = 1 + 0.5 * np.sin(2 * np.pi * g.coords()[0])
    errs = [consistency_error(build_kernel("poly_bump", e, g), u) for e in (0.2, 0.1, 0.05)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_entropy_dissipation_componentwise(k2, rng):
    f = rng.standard_normal(k2.grid.shape)
    gf = grad(k2.grid, f)
    val = entropy_dissipation_nl(k2, gf)
    assert val == pytest.approx(sum(2 * bbm_energy(k2, c) for c in gf), rel=1e-14)
    assert val == pytest.approx(entropy_dissipation_nl(k2, gf, path="fft"), rel=1e-12)
    assert entropy_dissipation_nl(k2, grad(k2.grid, np.ones(k2.grid.shape))) == 0.0


def test_entropy_dissipation_limit():
    # grad sin -> D_eff * ||lap_h f||^2 in the limit; Richardson-style order check
    g = Grid(1, 1024)
    f = np.sin(2 * np.pi * g.coords()[0])
    target = integrate(g, laplacian(g, f) ** 2)
    errs = []
    for eps in (0.2, 0.1, 0.05):
        k = build_kernel("poly_bump", eps, g)
        errs.append(abs(entropy_dissipation_nl(k, grad(g, f)) - k.D2 * target))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_poincare_ratio():
    g = Grid(1, 1024)
    f = np.sin(2 * np.pi * g.coords()[0])
    k = build_kernel("poly_bump", 0.05, g)
    r = poincare_ratio(k, f)
    assert r == pytest.approx(2 * k.D2 * 4 * np.pi**2, rel=5e-3)
    assert poincare_ratio(k, 3.0 * f - 7.0) == pytest.approx(r, rel=1e-12)
    with pytest.raises(DegenerateInput):
        poincare_ratio(k, np.full(g.shape, 2.0))


def test_h1_poincare_constant_finite(k1):
    x = k1.grid.coords()[0]
    probes = [np.sin(2 * np.pi * q * x) + 1.0 for q in (1, 2, 3)]
    C = h1_poincare_constant(k1, probes)
    assert np.isfinite(C)
    for f in probes:
        lhs = integrate(k1.grid, f**2) + face_norm2(k1.grid, grad(k1.grid, f))
        rhs = 0.5 * entropy_dissipation_nl(k1, grad(k1.grid, f)) + C * integrate(k1.grid, f**2)
        assert lhs <= rhs * (1 + 1e-12)


_K = build_kernel("poly_bump", 0.1, Grid(1, 32))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 32, elements=finite), arrays(np.float64, 32, elements=finite))
def test_property_duality_and_symmetry(f, g):
    scale = 2.0 * (1 + np.max(np.abs(f))) * (1 + np.max(np.abs(g))) / _K.eps**2
    assert duality_gap(_K, f, g) <= 1e-12 * scale
    sym = integrate(_K.grid, apply_B(_K, f) * g) - integrate(_K.grid, f * apply_B(_K, g))
    assert abs(sym) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 32, elements=finite), finite)
def test_property_psd_and_shift_invariance(f, c):
    scale = 2.0 * (1 + np.max(np.abs(f))) ** 2 / _K.eps**2
    assert integrate(_K.grid, apply_B(_K, f) * f) >= -1e-12 * scale
    assert bbm_energy(_K, f + c) == pytest.approx(bbm_energy(_K, f), rel=1e-9, abs=1e-9 * scale)
