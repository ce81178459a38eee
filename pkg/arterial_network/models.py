"""Coefficient models: the functions a, b, c, f, g of (x, t, P, Q) for one branch.

Each branch solves  P_t + a Q_x = f,  Q_t + b P_x + 2c Q_x = g.
All models implement the CoefficientModel protocol and evaluate vectorized
over numpy arrays of nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, runtime_checkable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, ModelDomainError, ModelParameterError
from .fields import Field


@dataclass(frozen=True)
class Coefficients:
    """B = [[0, a], [b, 2c]] and the forcing (f, g); scalars or node arrays."""

    a: Any
    b: Any
    c: Any
    f: Any
    g: Any


@runtime_checkable
class CoefficientModel(Protocol):
    """Common interface for every coefficient model."""

    name: str

    def eval(self, x, t, p, q) -> Coefficients:
        """Evaluate at (x, t, P, Q); raises ModelDomainError outside the admissible domain."""
        ...

    def to_spec(self) -> dict[str, Any]:
        """The model's parameter block in the network document."""
        ...


def _first_bad(mask, x, p) -> tuple[float, float]:
    idx = np.flatnonzero(np.broadcast_to(mask, np.broadcast(x, p).shape))[0]
    xs = np.broadcast_to(np.asarray(x, dtype=float), np.broadcast(x, p).shape).ravel()
    ps = np.broadcast_to(np.asarray(p, dtype=float), np.broadcast(x, p).shape).ravel()
    return float(xs[idx]), float(ps[idx])


class BaseModel:
    """Shared broadcasting helpers."""

    name = "base"

    @staticmethod
    def _shape(x, p) -> tuple[int, ...]:
        return np.broadcast(np.asarray(x, dtype=float), np.asarray(p, dtype=float)).shape

    def _const(self, x, p, v: float):
        return np.full(self._shape(x, p), v)


# -- area law ----------------------------------------------------------------


@dataclass(frozen=True)
class ConstantArea:
    level: float

    def value(self, x):
        return np.full(np.shape(x), self.level)

    def derivative(self, x):
        return np.zeros(np.shape(x))

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "constant", "value": self.level}


@dataclass(frozen=True)
class LinearTaper:
    """alpha + gamma * x."""

    alpha: float
    gamma: float

    def value(self, x):
        return self.alpha + self.gamma * np.asarray(x, dtype=float)

    def derivative(self, x):
        return np.full(np.shape(x), self.gamma)

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "taper", "alpha": self.alpha, "gamma": self.gamma}


@dataclass(frozen=True)
class TableArea:
    """Cubic-spline interpolant through (x, area) points; differentiable."""

    points: tuple[tuple[float, float], ...]
    _spline: CubicSpline | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        xs = [p[0] for p in self.points]
        if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ModelParameterError("area table needs at least two points with strictly increasing x")
        object.__setattr__(self, "_spline", CubicSpline(xs, [p[1] for p in self.points]))

    def value(self, x):
        return self._spline(np.asarray(x, dtype=float))

    def derivative(self, x):
        return self._spline(np.asarray(x, dtype=float), 1)

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "table", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class AreaLaw:
    """A(x, P) = a0(x) + beta * ln(P / p0)."""

    a0: Any
    beta: float
    p0: float

    def area(self, x, p):
        return self.a0.value(x) + self.beta * np.log(np.asarray(p, dtype=float) / self.p0)

    def area_p(self, p):
        return self.beta / np.asarray(p, dtype=float)

    def area_x(self, x):
        return self.a0.derivative(x)


# -- models ------------------------------------------------------------------


@dataclass(frozen=True)
class BloodFlowModel(BaseModel):
    """Distensible vessel with the logarithmic area law."""

    rho: float
    mu: float
    area: AreaLaw
    p_min: float | None = None
    name = "blood_flow"

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ModelParameterError(f"rho must be positive, got {self.rho}")
        if not self.mu >= 0:
            raise ModelParameterError(f"mu must be nonnegative, got {self.mu}")
        if not self.area.beta > 0:
            raise ModelParameterError(f"beta must be positive, got {self.area.beta}")
        if not self.area.p0 > 0:
            raise ModelParameterError(f"p0 must be positive, got {self.area.p0}")
        if self.p_min is None:
            object.__setattr__(self, "p_min", 1e-9 * self.area.p0)
        elif not self.p_min > 0:
            raise ModelParameterError(f"p_min must be positive, got {self.p_min}")

    def eval(self, x, t, p, q) -> Coefficients:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        low = ~(p >= self.p_min)
        if np.any(low):
            bx, bp = _first_bad(low, x, p)
            raise ModelDomainError("pressure below admissible minimum", bx, float(t), bp)
        area = self.area.area(x, p)
        collapsed = ~(area > 0)
        if np.any(collapsed):
            bx, bp = _first_bad(collapsed, x, p)
            raise ModelDomainError("vessel collapse (area <= 0)", bx, float(t), bp)
        area_p = self.area.area_p(p)
        area_x = self.area.area_x(x)
        return Coefficients(
            a=1.0 / area_p * np.ones_like(area),
            b=area / self.rho - q * q * area_p / (area * area),
            c=q / area,
            f=np.zeros_like(area),
            g=q * q * area_x / (area * area) - 8.0 * math.pi * self.mu * q / (self.rho * area),
        )

    def to_spec(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "rho": self.rho,
            "mu": self.mu,
            "beta": self.area.beta,
            "p0": self.area.p0,
            "p_min": self.p_min,
            "a0": self.area.a0.to_spec(),
        }


@dataclass(frozen=True)
class LinearConstantModel(BaseModel):
    a: float
    b: float
    c: float = 0.0
    f: float = 0.0
    g: float = 0.0
    name = "linear"

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ModelParameterError(f"linear model needs a > 0, got a={self.a}")

    def eval(self, x, t, p, q) -> Coefficients:
        return Coefficients(
            a=self._const(x, p, self.a),
            b=self._const(x, p, self.b),
            c=self._const(x, p, self.c),
            f=self._const(x, p, self.f),
            g=self._const(x, p, self.g),
        )

    def to_spec(self) -> dict[str, Any]:
        return {"name": self.name, "a": self.a, "b": self.b, "c": self.c, "f": self.f, "g": self.g}


@dataclass(frozen=True)
class LinearFieldModel(BaseModel):
    """Linear system with coefficients that vary in (x, t) but not in (P, Q)."""

    a: Field
    b: Field
    c: Field
    f: Field
    g: Field
    name = "linear_field"

    def eval(self, x, t, p, q) -> Coefficients:
        shape = self._shape(x, p)
        x_b = np.broadcast_to(np.asarray(x, dtype=float), shape)
        vals = [np.broadcast_to(fld.value(x_b, t), shape).astype(float) for fld in (self.a, self.b, self.c, self.f, self.g)]
        bad = ~(vals[0] > 0)
        if np.any(bad):
            bx, bp = _first_bad(bad, x_b, p)
            raise ModelDomainError("coefficient a is not positive", bx, float(t), bp)
        return Coefficients(*vals)

    def to_spec(self) -> dict[str, Any]:
        return {
            "name": self.name,
            **{k: getattr(self, k).to_spec() for k in ("a", "b", "c", "f", "g")},
        }


@dataclass(frozen=True)
class ManufacturedModel(BaseModel):
    """base with f, g replaced so that (pressure, flow) solves the system exactly."""

    base: Any
    pressure: Field
    flow: Field
    name = "manufactured"

    def eval(self, x, t, p, q) -> Coefficients:
        co = self.base.eval(x, t, p, q)
        shape = self._shape(x, p)
        x_b = np.broadcast_to(np.asarray(x, dtype=float), shape)
        ps = self.pressure.value(x_b, t)
        qs = self.flow.value(x_b, t)
        star = self.base.eval(x_b, t, ps, qs)
        f = self.pressure.dt(x_b, t) + star.a * self.flow.dx(x_b, t)
        g = self.flow.dt(x_b, t) + star.b * self.pressure.dx(x_b, t) + 2.0 * star.c * self.flow.dx(x_b, t)
        return Coefficients(co.a, co.b, co.c, np.broadcast_to(f, shape), np.broadcast_to(g, shape))

    def to_spec(self) -> dict[str, Any]:
        raise ConfigError("manufactured models are built by studies and cannot be serialized")


def blood_flow_eval(m: BloodFlowModel, x, t, p, q) -> Coefficients:
    return m.eval(x, t, p, q)


def linear_constant_eval(params: Mapping[str, float], x, t, p, q) -> Coefficients:
    return LinearConstantModel(**params).eval(x, t, p, q)


def manufactured_wrap(base: CoefficientModel, pstar: Field, qstar: Field) -> ManufacturedModel:
    return ManufacturedModel(base, pstar, qstar)
