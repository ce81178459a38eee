from __future__ import annotations

from pathlib import Path

import pytest

from arterial_network.config import load_config
from arterial_network.fields import ConstantField
from arterial_network.models import LinearConstantModel
from arterial_network.network import Branch, Flow, Junction, Network, Pressure, SourceSpec, TerminalSpec
from arterial_network.signals import Constant

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def cfg():
    return load_config(debug_checks=True)


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


def linear_branch_network(
    cells: int = 10,
    model=None,
    source=None,
    terminal=None,
) -> Network:
    """One branch, pressure source 1 and closed terminal unless told otherwise."""
    model = model or LinearConstantModel(a=1.0, b=1.0)
    return Network(
        branches=(Branch("A", cells, model),),
        sources=(SourceSpec("A", source or Pressure(Constant(1.0))),),
        terminals=(TerminalSpec("A", terminal or Flow(Constant(0.0))),),
    )


def bifurcation_network(cells: int = 10, model=None, inflow: float = 0.0, outlet_pressure: float = 1.0) -> Network:
    model = model or LinearConstantModel(a=1.0, b=1.0)
    return Network(
        branches=(Branch("A", cells, model), Branch("B", cells, model), Branch("C", cells, model)),
        junctions=(Junction(incoming=("A",), outgoing=("B", "C"), id="J1"),),
        sources=(SourceSpec("A", Flow(Constant(inflow))),),
        terminals=(
            TerminalSpec("B", Pressure(Constant(outlet_pressure))),
            TerminalSpec("C", Pressure(Constant(outlet_pressure))),
        ),
    )


def constant_fields(net: Network, p: float, q: float = 0.0) -> dict:
    return {b.id: (ConstantField(p), ConstantField(q)) for b in net.branches}
