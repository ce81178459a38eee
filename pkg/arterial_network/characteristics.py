"""Characteristic structure of B = [[0, a], [b, 2c]] and the solvability checks.

lambda_L = c - u and lambda_R = c + u with u = sqrt(c^2 + ab). The Riemann
variables r = -lambda_L P + a Q and s = -lambda_R P + a Q travel with
lambda_R and lambda_L respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import HyperbolicityLoss
from .models import Coefficients

# c^2 + ab must exceed this multiple of (c^2 + |ab| + 1)
HYPERBOLICITY_RTOL = 1e-14


@dataclass(frozen=True)
class EigenData:
    lambda_l: Any
    lambda_r: Any
    u: Any

    @property
    def speed_bound(self) -> float:
        return float(np.max(np.maximum(np.abs(self.lambda_l), np.abs(self.lambda_r))))

    def at(self, n: int) -> EigenData:
        return EigenData(
            float(np.asarray(self.lambda_l)[n]), float(np.asarray(self.lambda_r)[n]), float(np.asarray(self.u)[n])
        )


@dataclass(frozen=True)
class RiemannPair:
    r: Any
    s: Any


@dataclass(frozen=True)
class CheckResult:
    """ok, or a violation with the offending value."""

    ok: bool
    detail: str = ""
    value: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def eigen(co: Coefficients) -> EigenData:
    a = np.asarray(co.a, dtype=float)
    b = np.asarray(co.b, dtype=float)
    c = np.asarray(co.c, dtype=float)
    ab = a * b
    disc = c * c + ab
    bad = ~(disc > HYPERBOLICITY_RTOL * (c * c + np.abs(ab) + 1.0))
    if np.any(bad):
        idx = int(np.flatnonzero(np.atleast_1d(bad))[0])
        value = float(np.atleast_1d(disc)[idx])
        raise HyperbolicityLoss(
            f"c^2 + ab = {value:.6g} is not positive",
            n=idx if np.ndim(disc) else None,
            value=value,
        )
    u = np.sqrt(disc)
    if np.ndim(u) == 0:
        return EigenData(float(c - u), float(c + u), float(u))
    return EigenData(c - u, c + u, u)


def to_riemann(p, q, co: Coefficients, e: EigenData) -> RiemannPair:
    return RiemannPair(r=-e.lambda_l * p + co.a * q, s=-e.lambda_r * p + co.a * q)


def from_riemann(rp: RiemannPair, co: Coefficients, e: EigenData) -> tuple[Any, Any]:
    p = (rp.r - rp.s) / (2.0 * e.u)
    q = (e.lambda_r * rp.r - e.lambda_l * rp.s) / (2.0 * e.u * co.a)
    return p, q


def normal_rhs(co: Coefficients, e: EigenData) -> tuple[Any, Any]:
    """Right-hand sides (d_R, d_L) of the transport equations for r and s."""
    return -e.lambda_l * co.f + co.a * co.g, -e.lambda_r * co.f + co.a * co.g


def check_boundary_sign(e: EigenData) -> CheckResult:
    """Boundary solvability: lambda_L < 0 < lambda_R (equivalently ab > 0)."""
    ll, lr = float(e.lambda_l), float(e.lambda_r)
    if ll < 0.0 < lr:
        return CheckResult(True)
    if not ll < 0.0:
        return CheckResult(False, f"left-going speed lambda_L = {ll:.6g} is not negative", ll)
    return CheckResult(False, f"right-going speed lambda_R = {lr:.6g} is not positive", lr)


def cfl_check(sigma: float, speed_bound: float) -> CheckResult:
    """Strict: sigma * max(|lambda_L|, |lambda_R|) < 1."""
    courant = sigma * speed_bound
    if courant < 1.0:
        return CheckResult(True, value=courant)
    return CheckResult(False, f"sigma * speed bound = {sigma:.6g} * {speed_bound:.6g} = {courant:.6g} >= 1", courant)


def riemann_state(model, x, t, p, q) -> RiemannPair:
    """Riemann variables of a node array under the given model."""
    co = model.eval(x, t, p, q)
    return to_riemann(np.asarray(p, dtype=float), np.asarray(q, dtype=float), co, eigen(co))
