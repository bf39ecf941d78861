"""Uniform periodic grid on the unit torus and its staggered discrete calculus.

Cell-centred fields are numpy arrays of shape ``grid.shape``.  A face field
(``VecField``) is a tuple with one array per axis; component ``a`` at index
``i`` lives on the face between cell ``i`` and cell ``i + e_a``.

``grad`` is the forward difference and ``div`` the matching backward
difference, so ``div(grad(f))`` is the standard second-order Laplacian and
summation by parts holds exactly:

    integrate(f * div(v)) == -sum_a h**d * sum(grad(f)[a] * v[a])
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParameter, NonFiniteField

VecField = tuple  # tuple[np.ndarray, ...], one face array per axis

SNAPSHOT_MAGIC = b"NLCHFLD1"


@dataclass(frozen=True)
class Grid:
    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidParameter(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8:
            raise InvalidParameter(f"n must be >= 8, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def coords(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinates x_i = i*h, one broadcastable array per axis."""
        x = np.arange(self.n) * self.h
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def face_coords(self, axis: int) -> tuple[np.ndarray, ...]:
        """Coordinates of the faces carrying component ``axis`` of a VecField."""
        xs = list(self.coords())
        xs[axis] = xs[axis] + 0.5 * self.h
        return tuple(xs)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers matching ``np.fft.rfftn`` output, per axis."""
        q_full = np.fft.fftfreq(self.n, d=1.0 / self.n)
        q_half = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        if self.dim == 1:
            return (q_half,)
        return tuple(np.meshgrid(q_full, q_half, indexing="ij"))

    def laplacian_symbol(self) -> np.ndarray:
        """Eigenvalues of -laplacian on the rfftn modes: sum_a 4 sin^2(pi q_a h)/h^2."""
        h = self.h
        return sum(4.0 * np.sin(np.pi * q * h) ** 2 / h**2 for q in self.wavenumbers())


def check_finite(f: np.ndarray, what: str = "field") -> np.ndarray:
    if not np.all(np.isfinite(f)):
        raise NonFiniteField(f"{what} contains non-finite values")
    return f


def integrate(grid: Grid, f) -> float:
    return float(np.sum(f) * grid.cell_volume)


def grad(grid: Grid, f: np.ndarray) -> VecField:
    h = grid.h
    return tuple((np.roll(f, -1, axis=a) - f) / h for a in range(grid.dim))


def div(grid: Grid, v: VecField) -> np.ndarray:
    h = grid.h
    out = (v[0] - np.roll(v[0], 1, axis=0)) / h
    for a in range(1, grid.dim):
        out = out + (v[a] - np.roll(v[a], 1, axis=a)) / h
    return out


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    return div(grid, grad(grid, f))


def face_dot(grid: Grid, v: VecField, w: VecField) -> float:
    """Discrete face inner product sum_a h^d sum(v[a] * w[a])."""
    return float(sum(np.sum(va * wa) for va, wa in zip(v, w)) * grid.cell_volume)


def face_norm2(grid: Grid, v: VecField) -> float:
    return face_dot(grid, v, v)


def shift(f: np.ndarray, offset) -> np.ndarray:
    """Periodic shift: returns g with g[i] = f[i - offset]."""
    offset = tuple(int(o) for o in np.atleast_1d(offset))
    return np.roll(f, offset, axis=tuple(range(len(offset))))


# --- snapshots --------------------------------------------------------------


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def snapshot_text(grid: Grid, f: np.ndarray, time: float) -> bytes:
    lines = [f"# {grid.dim} {grid.n} {time!r}"]
    lines.extend(f"{v:.17g}" for v in np.asarray(f, dtype=float).ravel(order="C"))
    return ("\n".join(lines) + "\n").encode()


def snapshot_binary(grid: Grid, f: np.ndarray, time: float) -> bytes:
    header = struct.pack("<3d", float(grid.dim), float(grid.n), float(time))
    body = np.ascontiguousarray(f, dtype="<f8").tobytes(order="C")
    return SNAPSHOT_MAGIC + header + body


def write_snapshot(path, grid: Grid, f: np.ndarray, time: float, binary: bool = False) -> None:
    data = snapshot_binary(grid, f, time) if binary else snapshot_text(grid, f, time)
    atomic_write(path, data)


def read_snapshot(path) -> tuple[Grid, np.ndarray, float]:
    raw = Path(path).read_bytes()
    if raw.startswith(SNAPSHOT_MAGIC):
        dim, n, time = struct.unpack("<3d", raw[8:32])
        grid = Grid(int(dim), int(n))
        values = np.frombuffer(raw[32:], dtype="<f8").astype(float)
    else:
        text = raw.decode().splitlines()
        head = text[0].lstrip("#").split()
        grid = Grid(int(head[0]), int(head[1]))
        time = float(head[2])
        values = np.array([float(s) for s in text[1:] if s.strip()])
    if values.size != grid.size:
        raise InvalidParameter(f"snapshot {path} has {values.size} values, expected {grid.size}")
    return grid, values.reshape(grid.shape), time
