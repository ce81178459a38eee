"""Exception hierarchy shared by the solver, the verification harness and the CLI."""

from __future__ import annotations

import math
from typing import Any


class ArterialError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ArterialError):
    """A configuration document could not be parsed or resolved."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column if column is not None else '?'})"
        super().__init__(message)


class UsageError(ArterialError):
    """The command line was used incorrectly."""


class ModelParameterError(ArterialError, ValueError):
    """A coefficient model was constructed with invalid parameters."""


class ModelDomainError(ArterialError):
    """A coefficient model was evaluated outside its admissible domain."""

    def __init__(self, reason: str, x: float, t: float, p: float) -> None:
        self.reason = reason
        self.x = x
        self.t = t
        self.p = p
        self.branch: str | None = None
        self.n: int | None = None
        super().__init__(self._message())

    def _message(self) -> str:
        where = f" on branch {self.branch!r} node {self.n}" if self.branch is not None else ""
        return f"{self.reason} at x={self.x:.6g}, t={self.t:.6g}, P={self.p:.6g}{where}"

    def locate(self, branch: str, n: int) -> ModelDomainError:
        self.branch = branch
        self.n = n
        self.args = (self._message(),)
        return self


class SolverAbort(ArterialError):
    """The time stepper stopped; carries the location of the failure."""

    event = "abort"

    def __init__(
        self,
        detail: str,
        branch: str | None = None,
        n: int | None = None,
        t: float | None = None,
        value: float | None = None,
    ) -> None:
        self.detail = detail
        self.branch = branch
        self.n = n
        self.t = t
        self.value = value
        super().__init__(self._message())

    def _message(self) -> str:
        parts = [f"{self.event}: {self.detail}"]
        if self.branch is not None:
            parts.append(f"branch={self.branch}")
        if self.n is not None:
            parts.append(f"n={self.n}")
        if self.t is not None:
            parts.append(f"t={self.t:.6g}")
        return " ".join(parts)

    def locate(self, branch: str | None = None, n: int | None = None, t: float | None = None) -> SolverAbort:
        if branch is not None:
            self.branch = branch
        if n is not None:
            self.n = n
        if t is not None:
            self.t = t
        self.args = (self._message(),)
        return self

    def to_record(self) -> dict[str, Any]:
        detail: dict[str, Any] = {"message": self.detail}
        if self.value is not None:
            # JSON has no inf or nan literals
            detail["value"] = self.value if math.isfinite(self.value) else str(self.value)
        return {"t": self.t, "event": self.event, "branch": self.branch, "n": self.n, "detail": detail}


class HyperbolicityLoss(SolverAbort):
    """c^2 + ab is not positive: the characteristic speeds are not real and distinct."""

    event = "hyperbolicity_loss"


class BoundarySignViolation(SolverAbort):
    """A boundary node does not have lambda_L < 0 < lambda_R."""

    event = "boundary_sign"


class CFLViolation(SolverAbort):
    event = "cfl"


class Blowup(SolverAbort):
    """Non-finite values or values beyond the configured bound."""

    event = "blowup"


class JunctionInconsistency(SolverAbort):
    """A junction system was singular, ill-conditioned, or failed its residual check."""

    event = "junction"


class DeterminantSignError(SolverAbort):
    event = "determinant"


class DomainAbort(SolverAbort):
    """A coefficient model left its admissible domain during a run."""

    event = "domain"


class OracleError(ArterialError):
    pass


class StudyError(ArterialError):
    """A convergence or stability study could not complete one of its runs."""

    def __init__(self, message: str, abort: ArterialError | None = None) -> None:
        self.abort = abort
        super().__init__(message if abort is None else f"{message}: {abort}")
