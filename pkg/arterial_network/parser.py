"""Read and write the YAML network document (see docs/config-format.md)."""

from __future__ import annotations

from typing import Any

import yaml

from .errors import ConfigError, ModelParameterError
from .fields import parse_number
from .model_factory import create_model
from .network import (
    Branch,
    Flow,
    Junction,
    Network,
    Pressure,
    SourceSpec,
    TerminalSpec,
    Windkessel,
    windkessel_from_circuit,
)
from .signals import parse_signal

_BOUNDARY_KINDS = ("pressure", "flow", "windkessel")


def load_yaml(text: str) -> Any:
    """yaml.safe_load with the error position carried into ConfigError."""
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        problem = exc.problem or exc.context or "invalid YAML"
        if mark is not None:
            raise ConfigError(f"syntax error: {problem}", line=mark.line + 1, column=mark.column + 1) from None
        raise ConfigError(f"syntax error: {problem}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from None


def _field(d: dict[str, Any], key: str, where: str) -> Any:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping")
    if key not in d:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return d[key]


def _id_list(value: Any, where: str) -> tuple[str, ...]:
    if isinstance(value, str):
        return (value,)
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list of branch ids")
    return tuple(str(v) for v in value)


def _check_known(ids: set[str], ref: str, where: str) -> None:
    if ref not in ids:
        raise ConfigError(f"{where}: unknown branch id {ref!r}")


def _parse_windkessel(b: dict[str, Any], where: str) -> Windkessel:
    if "circuit" in b:
        c = b["circuit"]
        try:
            return windkessel_from_circuit(
                r1=parse_number(_field(c, "r1", f"{where}.circuit"), f"{where}.circuit.r1"),
                r2=parse_number(_field(c, "r2", f"{where}.circuit"), f"{where}.circuit.r2"),
                cap=parse_number(_field(c, "cap", f"{where}.circuit"), f"{where}.circuit.cap"),
                pv=parse_signal(c.get("pv", 0.0), f"{where}.circuit.pv"),
            )
        except ModelParameterError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    params = _field(b, "params", where)
    return Windkessel(
        eta=parse_number(_field(params, "eta", f"{where}.params"), f"{where}.eta"),
        delta=parse_number(_field(params, "delta", f"{where}.params"), f"{where}.delta"),
        epsilon=parse_number(_field(params, "epsilon", f"{where}.params"), f"{where}.epsilon"),
        w_signal=parse_signal(params.get("w_signal", 0.0), f"{where}.w_signal"),
    )


def network_from_document(doc: Any) -> Network:
    if not isinstance(doc, dict):
        raise ConfigError("network document must be a mapping with 'branches', 'junctions', 'boundaries'")

    raw_branches = _field(doc, "branches", "document")
    if not isinstance(raw_branches, list):
        raise ConfigError("branches: expected a list")

    branches: list[Branch] = []
    ids: set[str] = set()
    for i, rb in enumerate(raw_branches):
        where = f"branches[{i}]"
        bid = str(_field(rb, "id", where))
        if bid in ids:
            raise ConfigError(f"{where}: duplicate branch id {bid!r}")
        ids.add(bid)
        cells = _field(rb, "cells", where)
        if isinstance(cells, bool) or not isinstance(cells, int):
            raise ConfigError(f"{where}: cells must be an integer, got {cells!r}")
        model = create_model(_field(rb, "model", where), f"{where}.model")
        branches.append(Branch(id=bid, cells=cells, model=model))

    junctions: list[Junction] = []
    for i, rj in enumerate(doc.get("junctions") or []):
        where = f"junctions[{i}]"
        incoming = _id_list(_field(rj, "incoming", where), f"{where}.incoming")
        outgoing = _id_list(_field(rj, "outgoing", where), f"{where}.outgoing")
        for ref in incoming + outgoing:
            _check_known(ids, ref, where)
        junctions.append(Junction(incoming=incoming, outgoing=outgoing, id=str(rj.get("id", ""))))

    sources: list[SourceSpec] = []
    terminals: list[TerminalSpec] = []
    for i, rb in enumerate(doc.get("boundaries") or []):
        where = f"boundaries[{i}]"
        ref = str(_field(rb, "branch", where))
        _check_known(ids, ref, where)
        end = _field(rb, "end", where)
        kind = _field(rb, "kind", where)
        if end not in ("x0", "x1"):
            raise ConfigError(f"{where}: end must be 'x0' or 'x1', got {end!r}")
        if kind not in _BOUNDARY_KINDS:
            raise ConfigError(f"{where}: kind must be one of {', '.join(_BOUNDARY_KINDS)}, got {kind!r}")

        if kind == "windkessel":
            if end != "x1":
                raise ConfigError(f"{where}: windkessel closures attach at x1 only")
            terminals.append(TerminalSpec(ref, _parse_windkessel(rb, where)))
            continue

        signal = parse_signal(_field(rb, "signal", where), f"{where}.signal")
        spec = Pressure(signal) if kind == "pressure" else Flow(signal)
        if end == "x0":
            sources.append(SourceSpec(ref, spec))
        else:
            terminals.append(TerminalSpec(ref, spec))

    return Network(
        branches=tuple(branches),
        junctions=tuple(junctions),
        sources=tuple(sources),
        terminals=tuple(terminals),
    )


def parse_network(text: str) -> Network:
    """Parse a network document; raises ConfigError on syntax or resolution errors."""
    return network_from_document(load_yaml(text))


def network_to_document(net: Network) -> dict[str, Any]:
    boundaries: list[dict[str, Any]] = []
    for s in net.sources:
        kind = "pressure" if isinstance(s.kind, Pressure) else "flow"
        boundaries.append({"branch": s.branch, "end": "x0", "kind": kind, "signal": s.kind.signal.to_spec()})
    for s in net.terminals:
        if isinstance(s.kind, Windkessel):
            wk = s.kind
            boundaries.append(
                {
                    "branch": s.branch,
                    "end": "x1",
                    "kind": "windkessel",
                    "params": {
                        "eta": wk.eta,
                        "delta": wk.delta,
                        "epsilon": wk.epsilon,
                        "w_signal": wk.w_signal.to_spec(),
                    },
                }
            )
        else:
            kind = "pressure" if isinstance(s.kind, Pressure) else "flow"
            boundaries.append({"branch": s.branch, "end": "x1", "kind": kind, "signal": s.kind.signal.to_spec()})

    junctions = []
    for j in net.junctions:
        entry: dict[str, Any] = {}
        if j.id:
            entry["id"] = j.id
        entry["incoming"] = list(j.incoming)
        entry["outgoing"] = list(j.outgoing)
        junctions.append(entry)

    return {
        "branches": [{"id": b.id, "cells": b.cells, "model": b.model.to_spec()} for b in net.branches],
        "junctions": junctions,
        "boundaries": boundaries,
    }


def serialize_network(net: Network) -> str:
    return yaml.safe_dump(network_to_document(net), sort_keys=False)
