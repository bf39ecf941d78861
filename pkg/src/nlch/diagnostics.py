"""Functionals and residuals evaluated on discrete fields and trajectories."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InsufficientOutputs, MismatchedRuns
from .grid import Grid, face_dot, face_norm2, grad, integrate, laplacian
from .kernel import DiscreteKernel
from .mobility import MobilityProfile, phi
from .nonlocal_ops import bbm_energy, entropy_dissipation_nl
from .potential import Potential

CSV_HEADER = "t,mass,E_eps,E_local,Phi,Phi_delta,diss_E,diss_S,min_u,neg_measure,dt"


@dataclass
class DiagRecord:
    t: float
    mass: float
    E_eps: float
    E_local: float
    Phi: float | None  # None flags an undefined entropy (negative values present)
    Phi_delta: float
    diss_E: float
    diss_S: float
    min_u: float
    neg_measure: float
    dt: float

    def csv_row(self) -> str:
        def fmt(v, undefined="nan"):
            if v is None:
                return undefined
            return repr(float(v))

        vals = [
            fmt(self.t),
            fmt(self.mass),
            fmt(self.E_eps),
            fmt(self.E_local),
            fmt(self.Phi, "undefined"),
            fmt(self.Phi_delta),
            fmt(self.diss_E),
            fmt(self.diss_S),
            fmt(self.min_u),
            fmt(self.neg_measure),
            fmt(self.dt),
        ]
        return ",".join(vals)


def energy_nonlocal(k: DiscreteKernel, p: Potential, u: np.ndarray, path: str = "fft") -> float:
    return integrate(k.grid, p.F(u)) + bbm_energy(k, u, path=path)


def energy_local(grid: Grid, D_eff: float, p: Potential, u: np.ndarray) -> float:
    return integrate(grid, p.F(u)) + 0.5 * D_eff * face_norm2(grid, grad(grid, u))


def negativity_measure(grid: Grid, u: np.ndarray, alpha: float) -> float:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return grid.cell_volume * float(np.count_nonzero(u <= -alpha))


def entropy_total(grid: Grid, m: MobilityProfile | None, u: np.ndarray):
    """Integrated entropy; ``None`` when no profile is given and u has negative values."""
    if m is not None:
        return integrate(grid, m.phi_delta(u))
    if float(np.min(u)) < 0.0:
        return None
    return integrate(grid, phi(u))


def energy_dissipation_rate(grid: Grid, M, grad_mu) -> float:
    """sum over faces of M |grad mu|^2 h^d."""
    return face_dot(grid, tuple(m * g for m, g in zip(M, grad_mu)), grad_mu)


def entropy_dissipation_rate(grid: Grid, p: Potential, u: np.ndarray, k: DiscreteKernel | None = None,
                             D_eff: float | None = None) -> float:
    """Entropy dissipation at u: nonlocal second-difference term plus F'' |grad u|^2.

    The F'' term is evaluated on faces through the secant slope
    grad(u) . grad(F'(u)).  With ``k`` given the nonlocal term
    entropy_dissipation_nl(grad u) is used; otherwise D_eff * ||lap u||^2.
    """
    gu = grad(grid, u)
    curv = face_dot(grid, gu, grad(grid, p.dF(u)))
    if k is not None:
        return entropy_dissipation_nl(k, gu, path="fft") + curv
    return D_eff * integrate(grid, laplacian(grid, u) ** 2) + curv


def dissipation_ledgers(records: Sequence[DiagRecord]) -> tuple[float, float]:
    """Absolute energy and entropy ledger residuals at the end of a record window.

    Each record carries the signed residual value(t) + cumulative dissipation
    - value(0) accumulated by the solver since the window start.
    """
    last = records[-1]
    return abs(last.diss_E), abs(last.diss_S)


# --- weak formulations --------------------------------------------------------


def _eta(t, T):
    s = 2.0 * np.asarray(t, dtype=float) / T - 1.0
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@dataclass(frozen=True)
class TestFunction:
    """psi(x) = trig(2 pi q x_axis) with analytic spatial derivatives, times a time bump."""

    __test__ = False  # not a pytest class

    axis: int
    q: int
    kind: str  # "cos" or "sin"

    @property
    def label(self) -> str:
        return f"{self.kind}{self.q}_x{self.axis}"

    def _parts(self, grid: Grid):
        x = grid.coords()[self.axis]
        w = 2.0 * np.pi * self.q
        c, s = np.cos(w * x), np.sin(w * x)
        if self.kind == "cos":
            f, f1 = c, -w * s
        else:
            f, f1 = s, w * c
        return w, f, f1

    def values(self, grid: Grid):
        """(psi, grad psi, hessian psi (axis-axis only), lap psi, grad lap psi)."""
        w, f, f1 = self._parts(grid)
        zero = np.zeros(grid.shape)
        g = [zero] * grid.dim
        g[self.axis] = f1 * np.ones(grid.shape)
        hess = -w * w * f * np.ones(grid.shape)
        lap = hess
        gl = [zero] * grid.dim
        gl[self.axis] = -w * w * f1 * np.ones(grid.shape)
        return f * np.ones(grid.shape), tuple(g), hess, lap, tuple(gl)


def default_tests(grid: Grid) -> list[TestFunction]:
    return [TestFunction(a, q, kind) for a in range(grid.dim) for q in (1, 2, 3) for kind in ("cos", "sin")]


def _central_grad(grid: Grid, u):
    h = grid.h
    return tuple((np.roll(u, -1, axis=a) - np.roll(u, 1, axis=a)) / (2.0 * h) for a in range(grid.dim))


def weak_rhs(grid: Grid, D: float, p: Potential, u: np.ndarray, test: TestFunction) -> tuple[float, float]:
    """Right-hand sides of both weak formulations at a frozen field.

    Returns (first-form, twice-integrated form) for spatial test psi:

        A = -D <lap u grad u, grad psi> - D <u lap u, lap psi> - <u F''(u) grad u, grad psi>
        B =  D <grad u (x) grad u, D^2 psi> + D/2 <|grad u|^2, lap psi>
             + D <u grad u, grad lap psi> - <u F''(u) grad u, grad psi>
    """
    psi, gpsi, hess, lap_psi, glap = test.values(grid)
    gu = _central_grad(grid, u)
    lu = laplacian(grid, u)
    a = test.axis
    ga = gu[a]
    curv = integrate(grid, u * p.d2F(u) * ga * gpsi[a])
    A = -D * integrate(grid, lu * ga * gpsi[a]) - D * integrate(grid, u * lu * lap_psi) - curv
    grad2 = sum(g * g for g in gu)
    B = (
        D * integrate(grid, ga * ga * hess)
        + 0.5 * D * integrate(grid, grad2 * lap_psi)
        + D * integrate(grid, u * ga * glap[a])
        - curv
    )
    return A, B


@dataclass
class WeakResidualReport:
    labels: list
    residual_first: list
    residual_twice: list
    form_gap: list
    n: int
    dim: int
    n_times: int
    T: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def weak_residual(grid: Grid, D: float, p: Potential, times, fields, tests=None) -> WeakResidualReport:
    """Residual of both weak formulations along a trajectory sampled at output times.

    Test functions are eta(t) psi(x) with eta a smooth bump on (t_0, t_end).
    The time-derivative pairing uses differences of <u, psi> between
    consecutive outputs weighted by eta at the interval midpoint; spatial
    terms use trapezoid weights over the output times.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise InsufficientOutputs(f"weak residual needs >= 3 output times, got {len(times)}")
    tests = default_tests(grid) if tests is None else list(tests)
    t0 = times[0]
    T = times[-1] - t0
    tau = times - t0
    eta = _eta(tau, T)
    eta_mid = _eta(0.5 * (tau[1:] + tau[:-1]), T)
    wts = np.zeros_like(times)
    dts = np.diff(times)
    wts[:-1] += 0.5 * dts
    wts[1:] += 0.5 * dts

    labels, r1, r2, gap = [], [], [], []
    for test in tests:
        psi = test.values(grid)[0]
        pair = np.array([integrate(grid, u * psi) for u in fields])
        lhs = float(np.sum(eta_mid * np.diff(pair)))
        A = np.zeros(len(times))
        B = np.zeros(len(times))
        for i, u in enumerate(fields):
            if eta[i] != 0.0:
                A[i], B[i] = weak_rhs(grid, D, p, u, test)
        ra = lhs - float(np.sum(wts * eta * A))
        rb = lhs - float(np.sum(wts * eta * B))
        labels.append(test.label)
        r1.append(abs(ra))
        r2.append(abs(rb))
        gap.append(abs(ra - rb))
    return WeakResidualReport(labels, r1, r2, gap, grid.n, grid.dim, len(times), float(T))


def frozen_form_gap(grid: Grid, D: float, p: Potential, u: np.ndarray, tests=None) -> float:
    """max over tests of |A - B| for a frozen field (pure integration-by-parts defect)."""
    tests = default_tests(grid) if tests is None else tests
    return max(abs(a - b) for a, b in (weak_rhs(grid, D, p, u, t) for t in tests))


# --- epsilon convergence ------------------------------------------------------


def trajectory_distance(grid: Grid, times, fields_a, fields_b) -> float:
    """Discrete L^2(0,T; H^1) distance with trapezoid weights in time."""
    times = np.asarray(times, dtype=float)
    wts = np.zeros_like(times)
    if len(times) > 1:
        dts = np.diff(times)
        wts[:-1] += 0.5 * dts
        wts[1:] += 0.5 * dts
    total = 0.0
    for w, ua, ub in zip(wts, fields_a, fields_b):
        e = ua - ub
        total += w * (integrate(grid, e * e) + face_norm2(grid, grad(grid, e)))
    return math.sqrt(total)


@dataclass
class EpsRow:
    eps: float
    distance: float
    order: float | None


def eps_convergence_report(runs: dict, local) -> list[EpsRow]:
    """Distance of each nonlocal run (keyed by eps) to the local run.

    ``runs`` maps eps -> trajectory and ``local`` is a trajectory; each
    trajectory exposes ``grid``, ``times`` and ``fields``.  Observed orders
    are log2 ratios between consecutive eps in descending order and assume
    a halving sequence.
    """
    if local is None or not runs:
        raise MismatchedRuns("eps convergence needs a local run and at least one nonlocal run")
    for eps, tr in runs.items():
        if tr.grid != local.grid:
            raise MismatchedRuns(f"run eps={eps} uses grid {tr.grid}, local uses {local.grid}")
        if len(tr.times) != len(local.times) or not np.array_equal(np.asarray(tr.times), np.asarray(local.times)):
            raise MismatchedRuns(f"run eps={eps} has different output times")
    rows = []
    prev = None
    for eps in sorted(runs, reverse=True):
        tr = runs[eps]
        d = trajectory_distance(local.grid, local.times, tr.fields, local.fields)
        order = None
        if prev is not None and prev[1] > 0 and d > 0:
            order = math.log(prev[1] / d) / math.log(prev[0] / eps)
        rows.append(EpsRow(float(eps), d, order))
        prev = (eps, d)
    return rows
