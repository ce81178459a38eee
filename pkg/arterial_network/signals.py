"""Boundary signals: total functions of time."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Protocol, runtime_checkable

import numpy as np

from .errors import ConfigError
from .fields import Field, parse_number


@runtime_checkable
class Signal(Protocol):
    """A boundary value P^B, Q^B or W^B as a function of t."""

    differentiable: bool

    def value(self, t: float) -> float: ...

    def problems(self) -> list[str]:
        """Invariant violations, empty when the signal is well formed."""
        ...

    def to_spec(self) -> Any: ...


@dataclass(frozen=True)
class Constant:
    level: float
    differentiable = True

    def value(self, t: float) -> float:
        return self.level

    def problems(self) -> list[str]:
        return [] if math.isfinite(self.level) else ["constant signal is not finite"]

    def to_spec(self) -> Any:
        return {"kind": "constant", "value": self.level}


@dataclass(frozen=True)
class Sinusoid:
    """mean + amplitude * sin(2 pi t / period + phase)."""

    mean: float
    amplitude: float
    period: float
    phase: float = 0.0
    differentiable = True

    def value(self, t: float) -> float:
        return self.mean + self.amplitude * math.sin(2.0 * math.pi * t / self.period + self.phase)

    def problems(self) -> list[str]:
        return [] if self.period > 0 else [f"sinusoid period must be positive, got {self.period}"]

    def to_spec(self) -> Any:
        return {
            "kind": "sinusoid",
            "mean": self.mean,
            "amplitude": self.amplitude,
            "period": self.period,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class Table:
    """Linear interpolation between (t, value) points, held constant outside them."""

    points: tuple[tuple[float, float], ...]
    differentiable = False

    def value(self, t: float) -> float:
        ts = [p[0] for p in self.points]
        vs = [p[1] for p in self.points]
        return float(np.interp(t, ts, vs))

    def problems(self) -> list[str]:
        if not self.points:
            return ["table signal has no points"]
        bad = [i for i, (a, b) in enumerate(zip(self.points, self.points[1:])) if b[0] <= a[0]]
        if bad:
            return [f"table signal times not strictly increasing at point {bad[0] + 1}"]
        return []

    def to_spec(self) -> Any:
        return {"kind": "table", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class FieldTrace:
    """The trace of a closed-form field at a fixed position, used as boundary data."""

    field: Field
    x: float
    differentiable = True

    def value(self, t: float) -> float:
        return float(self.field.value(self.x, t))

    def problems(self) -> list[str]:
        return []

    def to_spec(self) -> Any:
        raise ConfigError("field traces are generated by studies and cannot be serialized")


@dataclass(frozen=True)
class WindkesselTrace:
    """W^B implied by fields (P*, Q*) at x: P_t - eta Q_t + delta P - epsilon Q."""

    pressure: Field
    flow: Field
    eta: float
    delta: float
    epsilon: float
    x: float = 1.0
    differentiable = True

    def value(self, t: float) -> float:
        x = self.x
        return float(
            self.pressure.dt(x, t)
            - self.eta * self.flow.dt(x, t)
            + self.delta * self.pressure.value(x, t)
            - self.epsilon * self.flow.value(x, t)
        )

    def problems(self) -> list[str]:
        return []

    def to_spec(self) -> Any:
        raise ConfigError("field traces are generated by studies and cannot be serialized")


def parse_signal(spec: Any, what: str = "signal") -> Signal:
    if isinstance(spec, (int, float, str)) and not isinstance(spec, bool):
        return Constant(parse_number(spec, what))
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{what}: expected a number or a mapping with 'kind'")
    kind = spec["kind"]
    try:
        if kind == "constant":
            return Constant(parse_number(spec["value"], what))
        if kind == "sinusoid":
            return Sinusoid(
                mean=parse_number(spec.get("mean", 0.0), what),
                amplitude=parse_number(spec["amplitude"], what),
                period=parse_number(spec["period"], what),
                phase=parse_number(spec.get("phase", 0.0), what),
            )
        if kind == "table":
            return Table(tuple((parse_number(p[0], what), parse_number(p[1], what)) for p in spec["points"]))
    except KeyError as exc:
        raise ConfigError(f"{what}: missing required field {exc.args[0]!r}") from None
    raise ConfigError(f"{what}: unknown signal kind {kind!r}")
