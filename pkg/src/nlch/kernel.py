"""Discrete radial mollifiers on the periodic grid and periodic convolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, ResolutionGuard, SupportOverflow
from .grid import Grid, shift

PROFILES = ("poly_bump", "smooth_bump")


def profile_values(name: str, r: np.ndarray) -> np.ndarray:
    """Unnormalized radial profile on r = |y|/eps; zero for r >= 1."""
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    out = np.zeros_like(r)
    if name == "poly_bump":
        out[inside] = 1.0 - r[inside] ** 2
    elif name == "smooth_bump":
        out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    else:
        raise InvalidParameter(f"unknown kernel profile {name!r}; expected one of {PROFILES}")
    return out


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Normalized symmetric kernel weights at scale ``eps``.

    ``offsets`` has shape (m, dim) with integer cell offsets j, ``weights``
    has shape (m,) and satisfies sum(weights) * h**dim == 1.  Only offsets
    with strictly positive weight are kept.
    """

    grid: Grid
    eps: float
    profile: str
    offsets: np.ndarray
    weights: np.ndarray
    D2: float = field(default=float("nan"))
    _symbol: np.ndarray = field(default=None, repr=False)

    @property
    def radius(self) -> int:
        return int(np.max(np.abs(self.offsets))) if len(self.offsets) else 0

    def dense(self) -> np.ndarray:
        """Weights laid out on the grid at index j mod n (no wrap collisions)."""
        arr = np.zeros(self.grid.shape)
        idx = tuple(np.mod(self.offsets[:, a], self.grid.n) for a in range(self.grid.dim))
        arr[idx] = self.weights
        return arr

    @property
    def symbol(self) -> np.ndarray:
        """Real Fourier multiplier of f -> k*f on the rfftn modes."""
        return self._symbol


def build_kernel(profile: str, eps: float, grid: Grid) -> DiscreteKernel:
    h = grid.h
    if not eps >= 2.0 * h:
        raise ResolutionGuard(f"eps={eps} is below 2h={2.0 * h} on n={grid.n}")
    if eps >= 0.5:
        raise SupportOverflow(f"eps={eps} must be < 1/2 for the support to fit the torus")
    R = int(np.ceil(eps / h))
    axis = np.arange(-R, R + 1)
    mesh = np.meshgrid(*([axis] * grid.dim), indexing="ij")
    offsets = np.stack([m.ravel() for m in mesh], axis=1)
    # |y| is computed from |j| so that w(j) and w(-j) agree bitwise
    r = np.sqrt(np.sum((np.abs(offsets) * h) ** 2, axis=1)) / eps
    w = profile_values(profile, r) / eps**grid.dim
    keep = w > 0.0
    offsets, w = offsets[keep], w[keep]
    w = w / (np.sum(w) * grid.cell_volume)

    y2 = np.sum((offsets * h) ** 2, axis=1)
    D2 = float(np.sum(w * y2) * grid.cell_volume / (2 * grid.dim * eps**2))

    k = DiscreteKernel(grid, float(eps), profile, offsets, w, D2)
    sym = np.fft.rfftn(k.dense()).real * grid.cell_volume
    object.__setattr__(k, "_symbol", sym)
    return k


def moment(k: DiscreteKernel, i: int, j: int) -> float:
    y = k.offsets * k.grid.h
    return float(np.sum(k.weights * y[:, i] * y[:, j]) * k.grid.cell_volume)


def effective_D(k: DiscreteKernel) -> float:
    """D_eff = (1 / (2 d eps^2)) sum_y w(y) |y|^2 h^d, so that B_eps -> -D_eff * Laplacian."""
    return k.D2


def convolve(k: DiscreteKernel, f: np.ndarray, path: str = "fft") -> np.ndarray:
    """Circular convolution (k*f)(x) = sum_y w(y) f(x - y) h^d."""
    if path == "fft":
        return np.fft.irfftn(np.fft.rfftn(f) * k.symbol, s=f.shape, axes=tuple(range(f.ndim)))
    if path == "direct":
        out = np.zeros_like(f, dtype=float)
        for off, w in zip(k.offsets, k.weights):
            out += w * shift(f, off)
        return out * k.grid.cell_volume
    raise ValueError(f"unknown convolution path {path!r}")
