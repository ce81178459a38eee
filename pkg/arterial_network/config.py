"""Environment-based solver settings with sensible defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass, field


def _env(name: str, default: str = "") -> str:
    return os.environ.get(name, default)


def _env_flag(name: str, default: str = "1") -> bool:
    return _env(name, default).strip().lower() not in ("0", "false", "no", "off", "")


@dataclass
class Config:
    # Magnitude of p or q beyond which a run is declared blown up
    blowup_bound: float = field(default_factory=lambda: float(_env("ARTERIAL_BLOWUP_BOUND", "1e12")))

    # Junction mass residual tolerance, relative to 1 + sum |q|
    junction_tol: float = field(default_factory=lambda: float(_env("ARTERIAL_JUNCTION_TOL", "1e-10")))

    # Condition-number ceiling for junction systems
    condition_limit: float = field(default_factory=lambda: float(_env("ARTERIAL_CONDITION_LIMIT", "1e12")))

    # Initial/boundary compatibility warning threshold (relative)
    compat_tol: float = field(default_factory=lambda: float(_env("ARTERIAL_COMPAT_TOL", "1e-8")))

    # Assert determinant signs of the junction and windkessel solves every step
    debug_checks: bool = field(default_factory=lambda: _env_flag("ARTERIAL_DEBUG_CHECKS"))

    # Characteristics oracle
    picard_tol: float = field(default_factory=lambda: float(_env("ARTERIAL_PICARD_TOL", "1e-10")))
    picard_max_iter: int = field(default_factory=lambda: int(_env("ARTERIAL_PICARD_MAX_ITER", "200")))
    oracle_trace_points: int = field(default_factory=lambda: int(_env("ARTERIAL_ORACLE_POINTS", "4001")))

    log_level: str = field(default_factory=lambda: _env("ARTERIAL_LOG_LEVEL", "INFO"))

    def __post_init__(self) -> None:
        self.log_level = self.log_level.upper()


def load_config(**overrides) -> Config:
    """Create a Config, optionally overriding fields."""
    cfg = Config()
    for k, v in overrides.items():
        if v is not None and hasattr(cfg, k):
            setattr(cfg, k, v)
    cfg.__post_init__()
    return cfg
