import numpy as np
import pytest

from nlch.errors import InvalidParameter, NonFiniteField
from nlch.grid import (
    Grid,
    check_finite,
    div,
    face_dot,
    grad,
    integrate,
    laplacian,
    read_snapshot,
    shift,
    write_snapshot,
)


def test_grid_guards():
    with pytest.raises(InvalidParameter):
        Grid(3, 16)
    with pytest.raises(InvalidParameter):
        Grid(1, 4)


def test_basic_geometry():
    g = Grid(2, 16)
    assert g.shape == (16, 16)
    assert g.size == 256
    assert g.cell_volume == 1.0 / 256
    assert integrate(g, np.ones(g.shape)) == 1.0


@pytest.mark.parametrize("dim,n", [(1, 64), (2, 32)])
def test_summation_by_parts(dim, n, rng):
    g = Grid(dim, n)
    f = rng.standard_normal(g.shape)
    v = tuple(rng.standard_normal(g.shape) for _ in range(dim))
    lhs = integrate(g, f * div(g, v))
    rhs = -face_dot(g, grad(g, f), v)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_constants_have_zero_gradient():
    g = Grid(2, 16)
    f = np.full(g.shape, 0.37)
    assert all(not np.any(c) for c in grad(g, f))
    assert not np.any(laplacian(g, f))


@pytest.mark.parametrize("dim,n", [(1, 32), (2, 16)])
def test_laplacian_symbol_matches_fft_eigenvalues(dim, n, rng):
    g = Grid(dim, n)
    f = rng.standard_normal(g.shape)
    via_fft = np.fft.irfftn(-g.laplacian_symbol() * np.fft.rfftn(f), s=g.shape, axes=tuple(range(dim)))
    assert np.max(np.abs(via_fft - laplacian(g, f))) <= 1e-10


def test_second_order_laplacian():
    errs = []
    for n in (32, 64, 128):
        g = Grid(1, n)
        x = g.coords()[0]
        errs.append(np.max(np.abs(laplacian(g, np.sin(2 * np.pi * x)) + 4 * np.pi**2 * np.sin(2 * np.pi * x))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2) < 0.05)


def test_shift_convention():
    f = np.arange(8.0)
    assert shift(f, 1)[3] == f[2]
    g2 = np.arange(16.0).reshape(4, 4)
    assert shift(g2, (1, -1))[2, 1] == g2[1, 2]


def test_check_finite():
    with pytest.raises(NonFiniteField):
        check_finite(np.array([1.0, np.nan]))


@pytest.mark.parametrize("binary", [False, True])
@pytest.mark.parametrize("dim", [1, 2])
def test_snapshot_round_trip(tmp_path, rng, binary, dim):
    g = Grid(dim, 16)
    f = rng.standard_normal(g.shape)
    path = tmp_path / "snap.dat"
    write_snapshot(path, g, f, 0.125, binary=binary)
    g2, f2, t2 = read_snapshot(path)
    assert g2 == g and t2 == 0.125
    assert np.array_equal(f, f2)
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_binary_snapshot_layout(tmp_path):
    g = Grid(1, 8)
    f = np.arange(8.0)
    path = tmp_path / "b.dat"
    write_snapshot(path, g, f, 2.5, binary=True)
    raw = path.read_bytes()
    assert raw[:8] == b"NLCHFLD1"
    assert np.array_equal(np.frombuffer(raw[8:32], "<f8"), [1.0, 8.0, 2.5])
    assert len(raw) == 32 + 8 * 8
