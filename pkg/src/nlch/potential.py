"""Interaction potentials F = F1 + F2 and the mollification constants check."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as spi

from .errors import InvalidParameter, QuadratureFailure

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Potential:
    """Split potential with a convex k-growth part F1 and a bounded-curvature part F2.

    ``growth`` holds the growth-bound constants (C1..C10) used by
    :func:`mollify_check`; ``F2pp_bound`` bounds |F2''| globally.
    """

    name: str
    k: float
    F1: Fn
    dF1: Fn
    d2F1: Fn
    F2: Fn
    dF2: Fn
    d2F2: Fn
    F2pp_bound: float
    growth: dict

    def F(self, u):
        return self.F1(u) + self.F2(u)

    def dF(self, u):
        return self.dF1(u) + self.dF2(u)

    def d2F(self, u):
        return self.d2F1(u) + self.d2F2(u)


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


def _sup_on(fn, lo=-50.0, hi=50.0, m=200001):
    u = np.linspace(lo, hi, m)
    return float(np.max(fn(u)))


def make_double_well() -> Potential:
    """F(u) = u^2 (u-1)^2 split as F1 = u^4 - 2u^3 + 3u^2/2 (convex), F2 = -u^2/2."""

    def F1(u):
        u = np.asarray(u, dtype=float)
        return u**4 - 2.0 * u**3 + 1.5 * u**2

    def dF1(u):
        u = np.asarray(u, dtype=float)
        return 4.0 * u**3 - 6.0 * u**2 + 3.0 * u

    def d2F1(u):
        u = np.asarray(u, dtype=float)
        return 3.0 * (2.0 * u - 1.0) ** 2

    def F2(u):
        return -0.5 * np.asarray(u, dtype=float) ** 2

    def dF2(u):
        return -np.asarray(u, dtype=float)

    def d2F2(u):
        return np.full_like(np.asarray(u, dtype=float), -1.0)

    # growth constants; the additive ones are sup-norm witnesses (both sides
    # are dominated by the quartic outside [-50, 50])
    C1, C3, C5, C7 = 1.0 / 8.0, 2.0, 6.0, 18.0
    growth = dict(
        C1=C1,
        C2=max(0.0, _sup_on(lambda u: C1 * u**4 - F1(u))),
        C3=C3,
        C4=max(0.0, _sup_on(lambda u: F1(u) - C3 * u**4)),
        C5=C5,
        C6=max(0.0, _sup_on(lambda u: C5 * u**2 - d2F1(u))),
        C7=C7,
        C8=max(0.0, _sup_on(lambda u: d2F1(u) - C7 * u**2)),
        C9=0.0,
        C10=0.5,
    )
    return Potential("double_well", 4.0, F1, dF1, d2F1, F2, dF2, d2F2, 1.0, growth)


def make_power(gamma: float) -> Potential:
    """F(u) = |u|^gamma, gamma > 2, entirely convex part."""
    if not gamma > 2.0:
        raise InvalidParameter(f"power potential needs gamma > 2, got {gamma}")
    g = float(gamma)

    def F1(u):
        return np.abs(np.asarray(u, dtype=float)) ** g

    def dF1(u):
        u = np.asarray(u, dtype=float)
        return g * np.sign(u) * np.abs(u) ** (g - 1.0)

    def d2F1(u):
        return g * (g - 1.0) * np.abs(np.asarray(u, dtype=float)) ** (g - 2.0)

    c2 = g * (g - 1.0)
    growth = dict(C1=1.0, C2=0.0, C3=1.0, C4=0.0, C5=c2, C6=0.0, C7=c2, C8=0.0, C9=0.0, C10=0.0)
    return Potential(f"power({g:g})", g, F1, dF1, d2F1, _zero, _zero, _zero, 0.0, growth)


def make_potential(name: str, gamma: float | None = None) -> Potential:
    if name == "double_well":
        return make_double_well()
    if name == "power":
        if gamma is None:
            raise InvalidParameter("power potential requires gamma")
        return make_power(gamma)
    raise InvalidParameter(f"unknown potential {name!r}")


# --- mollification -----------------------------------------------------------


def _eta_unit(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


_ETA_MASS = None


def _eta_mass() -> float:
    global _ETA_MASS
    if _ETA_MASS is None:
        _ETA_MASS = spi.quad(lambda s: float(_eta_unit(s)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)[0]
    return _ETA_MASS


def _quad(fn, a, b, tol=1e-10):
    # tolerance is relative to max(1, |value|) since F grows like |u|^k
    with warnings.catch_warnings():
        warnings.simplefilter("error", spi.IntegrationWarning)
        try:
            val, err = spi.quad(fn, a, b, epsabs=tol, epsrel=tol, limit=200)
        except spi.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not err <= tol * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} exceeds {tol:g}")
    return val


def mollify(fn: Fn, u: float, delta: float) -> float:
    """(fn * eta_delta)(u) with the standard exp(-1/(1-s^2)) mollifier."""
    m = _eta_mass()
    return _quad(lambda s: float(fn(u - delta * s)) * float(_eta_unit(s)) / m, -1.0, 1.0)


@dataclass
class MollifyReport:
    delta: float
    constants: dict
    slacks: dict
    worst_slack: float
    smallness_note: str


def mollified_constants(c: dict, k: float) -> dict:
    t3 = 2.0 ** (k - 1.0) * c["C3"]
    t7 = max(2.0 ** (k - 3.0), 1.0) * c["C7"]
    return dict(
        C1=2.0 ** (1.0 - k) * c["C1"],
        C2=c["C1"] + c["C2"],
        C3=t3,
        C4=t3 + c["C4"],
        C5=min(2.0 ** (3.0 - k), 1.0) * c["C5"],
        C6=c["C5"] + c["C6"],
        C7=t7,
        C8=t7 + c["C8"],
        C9=c["C9"] + 2.0 * c["C10"],
        C10=2.0 * c["C10"],
    )


def mollify_check(p: Potential, delta: float, probes=None) -> MollifyReport:
    """Verify the growth sandwich for F_delta = F * eta_delta with the mollified constants.

    Returns the worst slack (bound minus value, >= 0 when every inequality
    holds) over the probe grid, per inequality and overall.
    """
    if not 0.0 < delta <= 1.0:
        raise InvalidParameter(f"mollify_check needs 0 < delta <= 1, got {delta}")
    if probes is None:
        probes = np.linspace(-10.0, 10.0, 81)
    k = p.k
    ct = mollified_constants(p.growth, k)
    F1d = np.array([mollify(p.F1, u, delta) for u in probes])
    F1ppd = np.array([mollify(p.d2F1, u, delta) for u in probes])
    F2d = np.array([mollify(p.F2, u, delta) for u in probes])
    a = np.abs(probes)
    slacks = {
        "F1_lower": F1d - (ct["C1"] * a**k - ct["C2"]),
        "F1_upper": ct["C3"] * a**k + ct["C4"] - F1d,
        "F1pp_lower": F1ppd - (ct["C5"] * a ** (k - 2.0) - ct["C6"]),
        "F1pp_upper": ct["C7"] * a ** (k - 2.0) + ct["C8"] - F1ppd,
        "F2_lower": F2d + ct["C9"] + ct["C10"] * probes**2,
    }
    worst = {name: float(np.min(v)) for name, v in slacks.items()}
    note = (
        f"C10 = {ct['C10']:g}; the condition 4*C10 < C_p involves the nonlocal "
        "Poincare constant and is not checked numerically"
    )
    return MollifyReport(delta, ct, worst, min(worst.values()), note)
