"""Run documents: the network plus everything a simulation or study needs beyond it."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .fields import BumpField, Field, parse_field, parse_number
from .network import Network
from .parser import load_yaml, network_from_document
from .scheme import CLOSURES, Probe
from .state import StepSizes
from .verify import EPS_LADDER, ORDER_WINDOW, StudyProblem, initial_speed_bound

_STEP_KEYS = ("sigma", "dt", "courant")


@dataclass(frozen=True)
class StudySettings:
    manufactured: Mapping[str, tuple[Field, Field]] | None = None
    levels: tuple[int, ...] = (40, 80, 160, 320)
    order_window: tuple[float, float] = ORDER_WINDOW
    reference: str = "auto"
    eps: tuple[float, ...] = EPS_LADDER
    bump: BumpField = field(default_factory=BumpField)


@dataclass(frozen=True)
class RunConfig:
    network: Network
    initial: Mapping[str, tuple[Field, Field]]
    horizon: float
    sigma: float | None = None
    dt: float | None = None
    courant: float | None = None
    probes: tuple[Probe, ...] = ()
    stride: int = 1
    out: Path = Path("out")
    closure: str = "trapezoidal"
    study: StudySettings = field(default_factory=StudySettings)

    def __post_init__(self) -> None:
        if not self.horizon >= 0:
            raise ConfigError(f"horizon must be non-negative, got {self.horizon}")
        if self.stride < 1:
            raise ConfigError(f"stride must be at least 1, got {self.stride}")
        given = [k for k in _STEP_KEYS if getattr(self, k) is not None]
        if len(given) != 1:
            raise ConfigError(f"give exactly one of sigma, dt, courant (got {', '.join(given) or 'none'})")
        if self.closure not in CLOSURES:
            raise ConfigError(f"windkessel_closure must be one of {', '.join(CLOSURES)}")
        ids = set(self.network.branch_ids)
        for p in self.probes:
            if p.branch not in ids:
                raise ConfigError(f"probe {p.branch}:{p.x} references unknown branch {p.branch!r}")
            if not 0.0 <= p.x <= 1.0:
                raise ConfigError(f"probe {p.branch}:{p.x} is outside [0, 1]")

    def resolved_sigma(self) -> float:
        """sigma as given, or courant over the speed bound of the initial data."""
        if self.sigma is not None:
            return self.sigma
        if self.courant is not None:
            return self.courant / initial_speed_bound(self.network, self.initial)
        return self.dt / min(b.h for b in self.network.branches)

    def step_sizes(self) -> StepSizes:
        if self.dt is not None:
            return StepSizes.from_dt(self.network, self.dt)
        return StepSizes.from_sigma(self.network, self.resolved_sigma())

    def with_overrides(
        self,
        sigma: float | None = None,
        dt: float | None = None,
        horizon: float | None = None,
        stride: int | None = None,
        probes: list[str] | None = None,
        out: str | Path | None = None,
        levels: list[int] | None = None,
    ) -> RunConfig:
        """Command-line values replace document values; a step flag replaces any step key."""
        changes: dict[str, Any] = {}
        if sigma is not None:
            changes.update(sigma=sigma, dt=None, courant=None)
        if dt is not None:
            changes.update(sigma=None, dt=dt, courant=None)
        if horizon is not None:
            changes["horizon"] = horizon
        if stride is not None:
            changes["stride"] = stride
        if probes:
            changes["probes"] = tuple(_parse_probe(p) for p in probes)
        if out is not None:
            changes["out"] = Path(out)
        if levels:
            changes["study"] = replace(self.study, levels=tuple(levels))
        return replace(self, **changes) if changes else self

    def study_problem(self) -> StudyProblem:
        return StudyProblem(
            network=self.network,
            initial=self.initial,
            horizon=self.horizon,
            sigma=self.resolved_sigma() if self.courant is None else None,
            courant=self.courant,
            manufactured=self.study.manufactured,
        )


def _parse_probe(text: str) -> Probe:
    try:
        return Probe.parse(str(text))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _field_pair(spec: Any, where: str) -> tuple[Field, Field]:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a mapping with 'pressure' and 'flow'")
    return parse_field(spec.get("pressure", 0.0), f"{where}.pressure"), parse_field(spec.get("flow", 0.0), f"{where}.flow")


def _initial(spec: Any, net: Network) -> dict[str, tuple[Field, Field]]:
    if not isinstance(spec, dict):
        raise ConfigError("initial: expected a mapping with 'default' and/or 'branches'")
    default = _field_pair(spec["default"], "initial.default") if "default" in spec else None
    per_branch = spec.get("branches") or {}
    unknown = set(per_branch) - set(net.branch_ids)
    if unknown:
        raise ConfigError(f"initial.branches: unknown branch ids {', '.join(sorted(map(str, unknown)))}")
    out: dict[str, tuple[Field, Field]] = {}
    for bid in net.branch_ids:
        if bid in per_branch:
            out[bid] = _field_pair(per_branch[bid], f"initial.branches.{bid}")
        elif default is not None:
            out[bid] = default
        else:
            raise ConfigError(f"initial: no initial fields for branch {bid!r} and no default")
    return out


def _study(spec: Any, net: Network) -> StudySettings:
    if spec is None:
        return StudySettings()
    if not isinstance(spec, dict):
        raise ConfigError("study: expected a mapping")
    settings = StudySettings()
    if "manufactured" in spec:
        fields = spec["manufactured"] or {}
        missing = [b for b in net.branch_ids if b not in fields]
        if missing:
            raise ConfigError(f"study.manufactured: missing fields for branches {', '.join(missing)}")
        settings = replace(
            settings, manufactured={b: _field_pair(fields[b], f"study.manufactured.{b}") for b in net.branch_ids}
        )
    if "levels" in spec:
        levels = spec["levels"]
        if not isinstance(levels, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in levels):
            raise ConfigError("study.levels: expected a list of integers")
        settings = replace(settings, levels=tuple(levels))
    if "order_window" in spec:
        lo, hi = (parse_number(v, "study.order_window") for v in spec["order_window"])
        settings = replace(settings, order_window=(lo, hi))
    if "reference" in spec:
        if spec["reference"] not in ("auto", "manufactured", "oracle", "self"):
            raise ConfigError("study.reference must be auto, manufactured, oracle or self")
        settings = replace(settings, reference=spec["reference"])
    stab = spec.get("stability") or {}
    if "eps" in stab:
        settings = replace(settings, eps=tuple(parse_number(e, "study.stability.eps") for e in stab["eps"]))
    if "bump" in stab:
        b = stab["bump"] or {}
        settings = replace(
            settings,
            bump=BumpField(
                center=parse_number(b.get("center", 0.5), "bump.center"),
                width=parse_number(b.get("width", 0.25), "bump.width"),
                height=parse_number(b.get("height", 1.0), "bump.height"),
            ),
        )
    return settings


def run_config_from_document(doc: Any, base_dir: Path) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("run document must be a mapping")
    if "network" in doc:
        net = network_from_document(doc["network"])
    elif "network_file" in doc:
        net_path = base_dir / str(doc["network_file"])
        try:
            text = net_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read network file {net_path}: {exc.strerror}") from None
        try:
            net = network_from_document(load_yaml(text))
        except ConfigError as exc:
            raise ConfigError(f"{net_path.name}: {exc}") from None
    else:
        raise ConfigError("run document needs 'network' or 'network_file'")

    if "horizon" not in doc:
        raise ConfigError("run document: missing required field 'horizon'")
    stride = doc.get("stride", 1)
    if isinstance(stride, bool) or not isinstance(stride, int):
        raise ConfigError(f"stride must be an integer, got {stride!r}")

    steps = {k: parse_number(doc[k], k) for k in _STEP_KEYS if doc.get(k) is not None}
    return RunConfig(
        network=net,
        initial=_initial(doc.get("initial", {"default": {}}), net),
        horizon=parse_number(doc["horizon"], "horizon"),
        probes=tuple(_parse_probe(p) for p in doc.get("probes") or []),
        stride=stride,
        out=base_dir / str(doc.get("out", "out")),
        closure=str(doc.get("windkessel_closure", "trapezoidal")),
        study=_study(doc.get("study"), net),
        **steps,
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return run_config_from_document(load_yaml(text), path.parent)
