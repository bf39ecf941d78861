"""Truncated mobility T_delta, the Boltzmann entropy density and its regularization.

T_delta equals delta below delta, the identity on [2 delta, 1/delta - 1] and
1/delta above 1/delta.  The two transition bands are cubic Hermite pieces
with matching values and slopes, so T_delta is C^1 and nondecreasing.

phi_delta is the unique function with phi_delta'' = 1/T_delta and
phi_delta(1) = phi_delta'(1) = 0.  Writing

    Psi0(x) = int_1^x dz / T(z),     Psi1(x) = int_1^x z / T(z) dz,

we have phi_delta'(x) = Psi0(x) and phi_delta(x) = x Psi0(x) - Psi1(x).
Both antiderivatives are closed form outside the bands; inside a band they
are a cached band total plus a Gauss-Legendre partial integral.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as spi

from .errors import DomainError, InvalidParameter, QuadratureFailure

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def phi(x):
    """Boltzmann entropy density x (log x - 1) + 1, extended by 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(np.isnan(x)):
        raise DomainError("phi is defined only for x >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0.0, x * (np.log(np.where(x > 0.0, x, 1.0)) - 1.0) + 1.0, 1.0)
    return out if out.ndim else float(out)


def _band_quad(fn, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", spi.IntegrationWarning)
        try:
            val, err = spi.quad(fn, a, b, epsabs=1e-12, epsrel=1e-13, limit=200)
        except spi.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not err <= 1e-12:
        raise QuadratureFailure(f"band quadrature error {err:.3g} exceeds 1e-12")
    return val


@dataclass(frozen=True)
class MobilityProfile:
    delta: float
    _cache: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        d = self.delta
        if not (0.0 < d < 0.25 and 2.0 * d < 1.0 / d - 1.0):
            raise InvalidParameter(f"mobility truncation needs 0 < delta < 1/4, got {d}")
        object.__setattr__(self, "_cache", self._band_totals())

    @property
    def lo(self) -> float:
        return self.delta

    @property
    def top(self) -> float:
        """Lower end of the upper band, 1/delta - 1."""
        return 1.0 / self.delta - 1.0

    # --- mobility -------------------------------------------------------

    def T(self, u):
        d = self.delta
        a = self.top
        u0 = np.asarray(u, dtype=float)
        u = np.atleast_1d(u0)
        out = np.clip(u, d, 1.0 / d)
        low = (u > d) & (u < 2.0 * d)
        t = (u[low] - d) / d
        out[low] = d + d * t * t * (2.0 - t)
        up = (u > a) & (u < 1.0 / d)
        t = u[up] - a
        out[up] = a + t * (1.0 + t - t * t)
        return out.reshape(u0.shape) if u0.ndim else float(out[0])

    def dT(self, u):
        d = self.delta
        a = self.top
        u0 = np.asarray(u, dtype=float)
        u = np.atleast_1d(u0)
        out = np.where((u >= 2.0 * d) & (u <= a), 1.0, 0.0)
        low = (u > d) & (u < 2.0 * d)
        t = (u[low] - d) / d
        out[low] = t * (4.0 - 3.0 * t)
        up = (u > a) & (u < 1.0 / d)
        t = u[up] - a
        out[up] = (1.0 + 3.0 * t) * (1.0 - t)
        return out.reshape(u0.shape) if u0.ndim else float(out[0])

    # --- entropy antiderivatives ------------------------------------------

    def _band_totals(self) -> dict:
        d = self.delta
        a = self.top
        inv = lambda z: 1.0 / float(self.T(z))  # noqa: E731
        lin = lambda z: z / float(self.T(z))  # noqa: E731
        lo0, lo1 = _band_quad(inv, d, 2.0 * d), _band_quad(lin, d, 2.0 * d)
        up0, up1 = _band_quad(inv, a, 1.0 / d), _band_quad(lin, a, 1.0 / d)
        # values of Psi0, Psi1 at the four band endpoints
        return dict(
            p0_2d=np.log(2.0 * d),
            p1_2d=2.0 * d - 1.0,
            p0_d=np.log(2.0 * d) - lo0,
            p1_d=2.0 * d - 1.0 - lo1,
            p0_a=np.log(a),
            p1_a=a - 1.0,
            p0_top=np.log(a) + up0,
            p1_top=a - 1.0 + up1,
        )

    def _gl(self, lo, hi):
        """Gauss-Legendre integrals of 1/T and z/T from lo to hi (vectorized)."""
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        z = mid[:, None] + half[:, None] * _GL_X[None, :]
        invT = 1.0 / self.T(z)
        i0 = half * np.sum(_GL_W * invT, axis=1)
        i1 = half * np.sum(_GL_W * z * invT, axis=1)
        return i0, i1

    def _psi(self, x):
        d = self.delta
        a = self.top
        c = self._cache
        x = np.asarray(x, dtype=float)
        p0 = np.empty_like(x)
        p1 = np.empty_like(x)

        m = x <= d
        p0[m] = c["p0_d"] + (x[m] - d) / d
        p1[m] = c["p1_d"] + (x[m] ** 2 - d * d) / (2.0 * d)

        m = (x > d) & (x < 2.0 * d)
        if np.any(m):
            i0, i1 = self._gl(x[m], np.full(np.count_nonzero(m), 2.0 * d))
            p0[m] = c["p0_2d"] - i0
            p1[m] = c["p1_2d"] - i1

        m = (x >= 2.0 * d) & (x <= a)
        p0[m] = np.log(x[m])
        p1[m] = x[m] - 1.0

        m = (x > a) & (x < 1.0 / d)
        if np.any(m):
            i0, i1 = self._gl(np.full(np.count_nonzero(m), a), x[m])
            p0[m] = c["p0_a"] + i0
            p1[m] = c["p1_a"] + i1

        m = x >= 1.0 / d
        p0[m] = c["p0_top"] + d * (x[m] - 1.0 / d)
        p1[m] = c["p1_top"] + 0.5 * d * (x[m] ** 2 - 1.0 / d**2)
        return p0, p1

    def phi_delta_prime(self, x):
        x = np.asarray(x, dtype=float)
        p0, _ = self._psi(np.atleast_1d(x))
        return p0.reshape(x.shape) if x.ndim else float(p0[0])

    def phi_delta(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.atleast_1d(x)
        p0, p1 = self._psi(xs)
        out = xs * p0 - p1
        # on the pure region use the entropy formula itself so the two agree bitwise
        pure = (xs >= 2.0 * self.delta) & (xs <= self.top)
        out[pure] = phi(xs[pure])
        return out.reshape(x.shape) if x.ndim else float(out[0])


def T_delta(m: MobilityProfile, u):
    return m.T(u)


def phi_delta(m: MobilityProfile, x):
    return m.phi_delta(x)


def phi_delta_prime(m: MobilityProfile, x):
    return m.phi_delta_prime(x)


def entropy_property_suite(deltas=(0.2, 0.1, 0.05)) -> dict:
    """Check the five structural properties of phi_delta on fixed probe sets.

    Returns {name: (worst value, passed)}; a worst value is the smallest
    slack (or largest defect for P1) over all deltas and probes.
    """
    deltas = sorted(deltas, reverse=True)
    out = {}
    profiles = [MobilityProfile(d) for d in deltas]

    # P1: phi_delta(1) = phi_delta'(1) = 0 and phi_delta'' = 1/T_delta
    defect = 0.0
    for m in profiles:
        d = m.delta
        defect = max(defect, abs(m.phi_delta(1.0)), abs(m.phi_delta_prime(1.0)))
        xs = np.array([-1.0, 0.5 * d, 1.5 * d, 0.5, 3.0, m.top + 0.5, 1.0 / d + 1.0])
        h = 1e-5
        fd = (m.phi_delta_prime(xs + h) - m.phi_delta_prime(xs - h)) / (2.0 * h)
        defect = max(defect, float(np.max(np.abs(fd * m.T(xs) - 1.0))))
    out["P1"] = (defect, defect <= 1e-6)

    # P2: |phi_delta - phi| nonincreasing as delta decreases, for x >= 0
    xs = np.array([0.0, 0.5, 1.0, 2.0, 5.0])
    resid = np.array([np.abs(m.phi_delta(xs) - phi(xs)) for m in profiles])
    growth = float(np.max(np.diff(resid, axis=0))) if len(profiles) > 1 else 0.0
    out["P2"] = (growth, growth <= 1e-12)

    # P3: phi_delta >= 0
    xs = np.linspace(-5.0, 20.0, 10_000)
    low = min(float(np.min(m.phi_delta(xs))) for m in profiles)
    out["P3"] = (low, low >= 0.0)

    # P4: phi_delta(x) <= phi(x) + delta/(2(1-delta)) x^2 + 3 for x >= 0
    xs = np.linspace(0.0, 20.0, 10_000)
    slack = min(
        float(np.min(phi(xs) + m.delta / (2.0 * (1.0 - m.delta)) * xs**2 + 3.0 - m.phi_delta(xs)))
        for m in profiles
    )
    out["P4"] = (slack, slack >= 0.0)

    # P5: phi_delta(x) >= x^2/(2 delta) for x < 0, and grows as delta decreases
    xs = np.array([-0.5, -1.0, -2.0])
    slack = min(float(np.min(m.phi_delta(xs) - xs**2 / (2.0 * m.delta))) for m in profiles)
    vals = np.array([m.phi_delta(xs) for m in profiles])
    if len(profiles) > 1:
        slack = min(slack, float(np.min(np.diff(vals, axis=0))))
    out["P5"] = (slack, slack >= 0.0)

    # convexity and mobility bounds
    xs = np.linspace(-5.0, 20.0, 10_001)
    conv = min(float(np.min(np.diff(m.phi_delta(xs), 2))) for m in profiles)
    out["convex"] = (conv, conv >= -1e-12)
    us = np.linspace(-5.0, 30.0, 100_001)
    mono = min(float(np.min(np.diff(m.T(us)))) for m in profiles)
    bounds = all(np.all((m.T(us) >= m.delta) & (m.T(us) <= 1.0 / m.delta)) for m in profiles)
    out["T_monotone"] = (mono, mono >= 0.0 and bounds)
    return out
