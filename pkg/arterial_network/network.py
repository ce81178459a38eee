"""Network topology, boundary specifications and well-formedness checks.

Every branch is parameterized by x in [0, 1]. Its x=0 end is either a
source or an outgoing junction port; its x=1 end is either a terminal or an
incoming junction port.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterator, Literal, Union

from .errors import ModelParameterError
from .signals import Constant, Signal, Sinusoid

End = Literal["x0", "x1"]


@dataclass(frozen=True)
class Branch:
    id: str
    cells: int
    model: Any

    @property
    def h(self) -> float:
        return 1.0 / self.cells


@dataclass(frozen=True)
class Junction:
    """incoming branches attach by x=1, outgoing by x=0."""

    incoming: tuple[str, ...]
    outgoing: tuple[str, ...]
    id: str = ""

    def ports(self) -> Iterator[tuple[str, End]]:
        for b in self.incoming:
            yield b, "x1"
        for b in self.outgoing:
            yield b, "x0"


@dataclass(frozen=True)
class Pressure:
    signal: Signal


@dataclass(frozen=True)
class Flow:
    signal: Signal


@dataclass(frozen=True)
class Windkessel:
    """dP/dt - eta dQ/dt + delta P - epsilon Q = W(t) at x=1."""

    eta: float
    delta: float
    epsilon: float
    w_signal: Signal


SourceKind = Union[Pressure, Flow]
TerminalKind = Union[Pressure, Flow, Windkessel]


@dataclass(frozen=True)
class SourceSpec:
    branch: str
    kind: SourceKind


@dataclass(frozen=True)
class TerminalSpec:
    branch: str
    kind: TerminalKind


@dataclass(frozen=True)
class Network:
    branches: tuple[Branch, ...]
    junctions: tuple[Junction, ...] = ()
    sources: tuple[SourceSpec, ...] = ()
    terminals: tuple[TerminalSpec, ...] = ()

    def branch(self, branch_id: str) -> Branch:
        for b in self.branches:
            if b.id == branch_id:
                return b
        raise KeyError(branch_id)

    @property
    def branch_ids(self) -> list[str]:
        return [b.id for b in self.branches]


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    branch: str | None = None
    end: str | None = None

    def __str__(self) -> str:
        where = ""
        if self.branch is not None:
            where = f" [{self.branch}{':' + self.end if self.end else ''}]"
        return f"{self.code}: {self.message}{where}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, branch: str | None = None, end: str | None = None) -> None:
        self.violations.append(Violation(code, message, branch, end))

    def to_dict(self) -> dict[str, Any]:
        return {
            "violations": [
                {"code": v.code, "message": v.message, "branch": v.branch, "end": v.end} for v in self.violations
            ],
            "warnings": list(self.warnings),
        }


def _check_signal(report: ValidationReport, signal: Signal, where: str, branch: str, end: str) -> None:
    for problem in signal.problems():
        report.add("signal", f"{where}: {problem}", branch, end)
    if not signal.differentiable:
        report.warnings.append(f"{where} on {branch}:{end} is piecewise linear (not differentiable)")


def validate_topology(net: Network) -> ValidationReport:
    """Check every structural invariant; violations are returned, never raised."""
    report = ValidationReport()
    ids = [b.id for b in net.branches]
    known = set(ids)

    if not net.branches:
        report.add("empty", "network has no branches")
        return report

    seen: set[str] = set()
    for b in net.branches:
        if b.id in seen:
            report.add("duplicate_id", f"branch id {b.id!r} declared more than once", b.id)
        seen.add(b.id)
        if b.cells < 2:
            report.add("cells", f"branch needs at least 2 cells, has {b.cells}", b.id)

    roles: dict[tuple[str, str], list[str]] = defaultdict(list)

    for s in net.sources:
        if s.branch not in known:
            report.add("unknown_branch", f"source references unknown branch {s.branch!r}", s.branch, "x0")
            continue
        roles[(s.branch, "x0")].append("source")
        _check_signal(report, s.kind.signal, "source signal", s.branch, "x0")

    for s in net.terminals:
        if s.branch not in known:
            report.add("unknown_branch", f"terminal references unknown branch {s.branch!r}", s.branch, "x1")
            continue
        roles[(s.branch, "x1")].append("terminal")
        if isinstance(s.kind, Windkessel):
            for pname in ("eta", "delta", "epsilon"):
                v = getattr(s.kind, pname)
                if not v > 0:
                    report.add("windkessel", f"{pname} must be positive, got {v}", s.branch, "x1")
            _check_signal(report, s.kind.w_signal, "windkessel forcing", s.branch, "x1")
        else:
            _check_signal(report, s.kind.signal, "terminal signal", s.branch, "x1")

    for j_idx, j in enumerate(net.junctions):
        name = j.id or f"J{j_idx + 1}"
        if not j.incoming or not j.outgoing:
            report.add("junction", f"junction {name} needs at least one incoming and one outgoing branch")
        for b, end in j.ports():
            if b not in known:
                report.add("unknown_branch", f"junction {name} references unknown branch {b!r}", b, end)
                continue
            roles[(b, end)].append(f"junction {name}")
        for b in set(j.incoming) & set(j.outgoing):
            report.warnings.append(f"branch {b} attaches to junction {name} by both ends (self-loop)")

    for b in ids:
        for end in ("x0", "x1"):
            r = roles.get((b, end), [])
            if not r:
                report.add("unassigned_end", "unassigned end", b, end)
            elif len(r) > 1:
                report.add("doubly_assigned", f"end doubly assigned ({', '.join(r)})", b, end)

    # connectivity over branches, linked through junctions
    parent = {b: b for b in known}

    def find(b: str) -> str:
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        return b

    for j in net.junctions:
        members = [b for b, _ in j.ports() if b in known]
        for other in members[1:]:
            parent[find(other)] = find(members[0])
    components = {find(b) for b in known}
    if len(components) > 1:
        report.add("disconnected", f"network has {len(components)} connected components")

    return report


# -- windkessel --------------------------------------------------------------


def windkessel_from_circuit(r1: float, r2: float, cap: float, pv: Signal) -> Windkessel:
    """Map an RCR circuit with venous pressure pv to the windkessel terminal form.

    Dividing  C d(P-Pv)/dt - R1 C dQ/dt + (P-Pv)/R2 - (1 + R1/R2) Q = 0  by C gives
    eta = R1, delta = 1/(R2 C), epsilon = (1 + R1/R2)/C and W = dPv/dt + Pv/(R2 C).
    """
    for pname, v in (("r1", r1), ("r2", r2), ("cap", cap)):
        if not v > 0:
            raise ModelParameterError(f"circuit parameter {pname} must be positive, got {v}")
    if pv.problems():
        raise ModelParameterError(f"venous pressure: {pv.problems()[0]}")
    delta = 1.0 / (r2 * cap)
    eta = r1
    epsilon = (1.0 + r1 / r2) / cap

    if isinstance(pv, Constant):
        w: Signal = Constant(pv.level * delta)
    elif isinstance(pv, Sinusoid):
        omega = 2.0 * math.pi / pv.period
        # delta*A sin(wt+ph) + A w cos(wt+ph) folded into one sinusoid
        w = Sinusoid(
            mean=pv.mean * delta,
            amplitude=pv.amplitude * math.hypot(delta, omega),
            period=pv.period,
            phase=pv.phase + math.atan2(omega, delta),
        )
    else:
        raise ModelParameterError("venous pressure must be differentiable (constant or sinusoid)")
    return Windkessel(eta=eta, delta=delta, epsilon=epsilon, w_signal=w)
