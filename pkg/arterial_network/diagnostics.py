"""Per-step diagnostics, the run summary, and the line-oriented diagnostics log."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any

logger = logging.getLogger("arterial_network.scheme")


@dataclass
class StepDiagnostics:
    time: float
    speed_bound: float = 0.0
    speed_bounds: dict[str, float] = field(default_factory=dict)
    # junction -> (|sum in q - sum out q|, max port pressure mismatch)
    junction_residuals: dict[str, tuple[float, float]] = field(default_factory=dict)
    junction_determinants: dict[str, float] = field(default_factory=dict)
    windkessel_determinants: dict[str, float] = field(default_factory=dict)
    # "branch:x0" / "branch:x1" -> lambda_L < 0 < lambda_R
    boundary_sign_ok: dict[str, bool] = field(default_factory=dict)

    @property
    def max_junction_residual(self) -> float:
        return max((r[0] for r in self.junction_residuals.values()), default=0.0)

    def to_detail(self) -> dict[str, Any]:
        return {
            "speed_bound": self.speed_bound,
            "junction_residuals": {k: list(v) for k, v in self.junction_residuals.items()},
            "junction_determinants": dict(self.junction_determinants),
            "windkessel_determinants": dict(self.windkessel_determinants),
        }


@dataclass
class RunSummary:
    final_time: float = 0.0
    steps: int = 0
    wall_time_s: float = 0.0
    max_speed: float = 0.0
    max_junction_residual: float = 0.0
    max_pressure_mismatch: float = 0.0
    min_junction_determinant: float = math.inf
    max_windkessel_determinant: float = -math.inf
    warnings: int = 0
    abort: dict[str, Any] | None = None

    def absorb(self, diag: StepDiagnostics) -> None:
        self.max_speed = max(self.max_speed, diag.speed_bound)
        for residual, mismatch in diag.junction_residuals.values():
            self.max_junction_residual = max(self.max_junction_residual, residual)
            self.max_pressure_mismatch = max(self.max_pressure_mismatch, mismatch)
        for det in diag.junction_determinants.values():
            self.min_junction_determinant = min(self.min_junction_determinant, det)
        for det in diag.windkessel_determinants.values():
            self.max_windkessel_determinant = max(self.max_windkessel_determinant, det)

    def format_compact(self) -> str:
        parts = [f"t={self.final_time:.6g}", f"steps: {self.steps}", f"max speed: {self.max_speed:.4g}"]
        if math.isfinite(self.min_junction_determinant):
            parts.append(f"junction residual: {self.max_junction_residual:.2e}")
        if self.abort:
            parts.append(f"aborted: {self.abort.get('event')}")
        if self.wall_time_s:
            parts.append(f"wall: {self.wall_time_s:.2f}s")
        return " · ".join(parts)

    def to_dict(self) -> dict[str, Any]:
        def finite(v: float) -> float | None:
            return v if math.isfinite(v) else None

        return {
            "final_time": self.final_time,
            "steps": self.steps,
            "wall_time_s": round(self.wall_time_s, 6),
            "max_speed": self.max_speed,
            "max_junction_residual": self.max_junction_residual,
            "max_pressure_mismatch": self.max_pressure_mismatch,
            "min_junction_determinant": finite(self.min_junction_determinant),
            "max_windkessel_determinant": finite(self.max_windkessel_determinant),
            "warnings": self.warnings,
            "abort": self.abort,
        }


class DiagnosticsLog:
    """Collects {t, event, branch, n, detail} records in emission order."""

    def __init__(self) -> None:
        self.records: list[dict[str, Any]] = []

    def emit(
        self,
        t: float | None,
        event: str,
        branch: str | None = None,
        n: int | None = None,
        detail: Any = None,
        level: int = logging.DEBUG,
    ) -> None:
        record = {"t": t, "event": event, "branch": branch, "n": n, "detail": detail}
        self.records.append(record)
        logger.log(level, "%s t=%s branch=%s n=%s %s", event, t, branch, n, detail)

    def events(self, name: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["event"] == name]

    def to_text(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records)
