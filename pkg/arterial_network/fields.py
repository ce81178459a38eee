"""Closed-form fields of (x, t) with analytic first partials.

Fields supply initial data, manufactured solutions and the coefficients of
the variable linear model. Every field is vectorized over numpy arrays and
exact: no numerical differentiation happens anywhere in the package.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Protocol, runtime_checkable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConfigError

_PI_RE = re.compile(r"^\s*([-+]?\d*\.?\d*(?:[eE][-+]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_number(value: Any, what: str = "value") -> float:
    """Accept plain numbers and the strings ``pi``, ``2*pi``, ``pi/2``, ``0.5pi``."""
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            coeff = m.group(1)
            scale = float(coeff) if coeff not in ("", "+", "-") else (-1.0 if coeff == "-" else 1.0)
            denom = float(m.group(2)) if m.group(2) else 1.0
            return scale * math.pi / denom
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{what}: expected a number, got {value!r}")


@runtime_checkable
class Field(Protocol):
    """A scalar function of (x, t) with its first partial derivatives."""

    def value(self, x, t): ...

    def dx(self, x, t): ...

    def dt(self, x, t): ...

    def to_spec(self) -> Any: ...


def _full(x, t, v: float):
    return np.full(np.broadcast(np.asarray(x, dtype=float), np.asarray(t, dtype=float)).shape, v)


@dataclass(frozen=True)
class ConstantField:
    level: float

    def value(self, x, t):
        return _full(x, t, self.level)

    def dx(self, x, t):
        return _full(x, t, 0.0)

    def dt(self, x, t):
        return _full(x, t, 0.0)

    def to_spec(self) -> Any:
        return {"constant": self.level}


@dataclass(frozen=True)
class PolynomialField:
    """px(x) * pt(t) with coefficients in increasing degree."""

    x_coeffs: tuple[float, ...]
    t_coeffs: tuple[float, ...] = (1.0,)

    def value(self, x, t):
        return npoly.polyval(np.asarray(x, dtype=float), self.x_coeffs) * npoly.polyval(
            np.asarray(t, dtype=float), self.t_coeffs
        )

    def dx(self, x, t):
        return npoly.polyval(np.asarray(x, dtype=float), npoly.polyder(self.x_coeffs)) * npoly.polyval(
            np.asarray(t, dtype=float), self.t_coeffs
        )

    def dt(self, x, t):
        return npoly.polyval(np.asarray(x, dtype=float), self.x_coeffs) * npoly.polyval(
            np.asarray(t, dtype=float), npoly.polyder(self.t_coeffs)
        )

    def to_spec(self) -> Any:
        return {"polynomial": {"x": list(self.x_coeffs), "t": list(self.t_coeffs)}}


@dataclass(frozen=True)
class SineField:
    """amplitude * sin(kx*x + phase_x) * sin(kt*t + phase_t).

    The default phases of pi/2 with zero wavenumbers make an omitted factor
    identically one, so ``cos(pi x)`` is ``kx=pi, phase_x=pi/2``.
    """

    amplitude: float = 1.0
    kx: float = 0.0
    phase_x: float = math.pi / 2
    kt: float = 0.0
    phase_t: float = math.pi / 2

    def _parts(self, x, t):
        ax = self.kx * np.asarray(x, dtype=float) + self.phase_x
        at = self.kt * np.asarray(t, dtype=float) + self.phase_t
        return ax, at

    def value(self, x, t):
        ax, at = self._parts(x, t)
        return self.amplitude * np.sin(ax) * np.sin(at)

    def dx(self, x, t):
        ax, at = self._parts(x, t)
        return self.amplitude * self.kx * np.cos(ax) * np.sin(at)

    def dt(self, x, t):
        ax, at = self._parts(x, t)
        return self.amplitude * self.kt * np.sin(ax) * np.cos(at)

    def to_spec(self) -> Any:
        return {
            "sine": {
                "amplitude": self.amplitude,
                "kx": self.kx,
                "phase_x": self.phase_x,
                "kt": self.kt,
                "phase_t": self.phase_t,
            }
        }


@dataclass(frozen=True)
class BumpField:
    """C1 bump: height * cos^2(pi (x - center) / (2 width)) on |x - center| < width."""

    center: float = 0.5
    width: float = 0.25
    height: float = 1.0

    def _theta(self, x):
        return math.pi * (np.asarray(x, dtype=float) - self.center) / (2.0 * self.width)

    def _inside(self, x):
        return np.abs(np.asarray(x, dtype=float) - self.center) < self.width

    def value(self, x, t):
        v = np.where(self._inside(x), self.height * np.cos(self._theta(x)) ** 2, 0.0)
        return v * _full(x, t, 1.0)

    def dx(self, x, t):
        slope = -self.height * np.sin(2.0 * self._theta(x)) * math.pi / (2.0 * self.width)
        return np.where(self._inside(x), slope, 0.0) * _full(x, t, 1.0)

    def dt(self, x, t):
        return _full(x, t, 0.0)

    def to_spec(self) -> Any:
        return {"bump": {"center": self.center, "width": self.width, "height": self.height}}


@dataclass(frozen=True)
class SumField:
    terms: tuple[Any, ...]

    def value(self, x, t):
        return sum((f.value(x, t) for f in self.terms), _full(x, t, 0.0))

    def dx(self, x, t):
        return sum((f.dx(x, t) for f in self.terms), _full(x, t, 0.0))

    def dt(self, x, t):
        return sum((f.dt(x, t) for f in self.terms), _full(x, t, 0.0))

    def to_spec(self) -> Any:
        return {"sum": [f.to_spec() for f in self.terms]}


@dataclass(frozen=True)
class TableField:
    """Piecewise-linear profile in x, constant in t. For initial data only."""

    points: tuple[tuple[float, float], ...]

    def _xs(self):
        return np.array([p[0] for p in self.points]), np.array([p[1] for p in self.points])

    def value(self, x, t):
        xs, vs = self._xs()
        return np.interp(np.asarray(x, dtype=float), xs, vs) * _full(x, t, 1.0)

    def dx(self, x, t):
        xs, vs = self._xs()
        slopes = np.diff(vs) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, np.asarray(x, dtype=float), side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx] * _full(x, t, 1.0)

    def dt(self, x, t):
        return _full(x, t, 0.0)

    def to_spec(self) -> Any:
        return {"table": [list(p) for p in self.points]}


def parse_field(spec: Any, what: str = "field") -> Field:
    """Build a field from its document form."""
    if isinstance(spec, (int, float, str)) and not isinstance(spec, bool):
        return ConstantField(parse_number(spec, what))
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"{what}: expected a number or a single-key mapping, got {spec!r}")
    kind, body = next(iter(spec.items()))

    if kind == "constant":
        return ConstantField(parse_number(body, what))

    if kind == "polynomial":
        if not isinstance(body, dict) or "x" not in body:
            raise ConfigError(f"{what}: polynomial needs an 'x' coefficient list")
        xs = tuple(parse_number(c, what) for c in body["x"])
        ts = tuple(parse_number(c, what) for c in body.get("t", [1.0]))
        return PolynomialField(xs, ts)

    if kind == "sine":
        body = body or {}
        allowed = {"amplitude", "kx", "phase_x", "kt", "phase_t"}
        unknown = set(body) - allowed
        if unknown:
            raise ConfigError(f"{what}: unknown sine keys {sorted(unknown)}")
        return SineField(**{k: parse_number(v, f"{what}.{k}") for k, v in body.items()})

    if kind == "bump":
        body = body or {}
        return BumpField(**{k: parse_number(v, f"{what}.{k}") for k, v in body.items()})

    if kind == "sum":
        if not isinstance(body, list) or not body:
            raise ConfigError(f"{what}: sum needs a non-empty list")
        return SumField(tuple(parse_field(s, what) for s in body))

    if kind == "table":
        pts = tuple((parse_number(p[0], what), parse_number(p[1], what)) for p in body)
        if len(pts) < 2 or any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ConfigError(f"{what}: table needs at least two points with increasing x")
        return TableField(pts)

    raise ConfigError(f"{what}: unknown field kind {kind!r}")
