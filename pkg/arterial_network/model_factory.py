"""Factory that creates the right coefficient model from a parameter block."""

from __future__ import annotations

from typing import Any

from .errors import ConfigError, ModelParameterError
from .fields import parse_field, parse_number
from .models import (
    AreaLaw,
    BloodFlowModel,
    CoefficientModel,
    ConstantArea,
    LinearConstantModel,
    LinearFieldModel,
    LinearTaper,
    TableArea,
)

MODEL_NAMES = ("blood_flow", "linear", "linear_field")


def _require(spec: dict[str, Any], key: str, where: str) -> Any:
    if key not in spec:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return spec[key]


def _area_profile(spec: Any, where: str):
    if not isinstance(spec, dict):
        return ConstantArea(parse_number(spec, where))
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return ConstantArea(parse_number(_require(spec, "value", where), where))
    if kind == "taper":
        return LinearTaper(
            alpha=parse_number(_require(spec, "alpha", where), where),
            gamma=parse_number(_require(spec, "gamma", where), where),
        )
    if kind == "table":
        pts = tuple((parse_number(p[0], where), parse_number(p[1], where)) for p in _require(spec, "points", where))
        return TableArea(pts)
    raise ConfigError(f"{where}: unknown area profile kind {kind!r}. Use: constant, taper, table")


def create_model(spec: Any, where: str = "model") -> CoefficientModel:
    """Create a coefficient model from its document form ({name: ..., params...})."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a mapping with 'name'")
    name = str(_require(spec, "name", where)).lower()

    try:
        if name == "blood_flow":
            p_min = spec.get("p_min")
            return BloodFlowModel(
                rho=parse_number(_require(spec, "rho", where), f"{where}.rho"),
                mu=parse_number(spec.get("mu", 0.0), f"{where}.mu"),
                area=AreaLaw(
                    a0=_area_profile(_require(spec, "a0", where), f"{where}.a0"),
                    beta=parse_number(_require(spec, "beta", where), f"{where}.beta"),
                    p0=parse_number(_require(spec, "p0", where), f"{where}.p0"),
                ),
                p_min=None if p_min is None else parse_number(p_min, f"{where}.p_min"),
            )

        if name == "linear":
            _require(spec, "a", where)
            _require(spec, "b", where)
            return LinearConstantModel(
                **{k: parse_number(spec.get(k, 0.0), f"{where}.{k}") for k in ("a", "b", "c", "f", "g")}
            )

        if name == "linear_field":
            return LinearFieldModel(
                **{k: parse_field(spec.get(k, 0.0), f"{where}.{k}") for k in ("a", "b", "c", "f", "g")}
            )
    except ModelParameterError as exc:
        raise ConfigError(f"{where}: {exc}") from None

    raise ConfigError(f"{where}: unknown model {name!r}. Use: {', '.join(MODEL_NAMES)}")
