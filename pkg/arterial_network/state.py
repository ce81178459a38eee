"""Single source of truth for the evolving grid solution and the step sizes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .fields import Field
from .network import Network


@dataclass(frozen=True)
class StepSizes:
    """One global time step k; each branch has its own h = 1/N and sigma = k/h."""

    k: float
    h: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"time step must be positive, got {self.k}")

    def sigma(self, branch_id: str) -> float:
        return self.k / self.h[branch_id]

    @classmethod
    def from_dt(cls, net: Network, k: float) -> StepSizes:
        return cls(k=k, h={b.id: b.h for b in net.branches})

    @classmethod
    def from_sigma(cls, net: Network, sigma: float) -> StepSizes:
        """k = sigma * (smallest h), so no branch exceeds the requested ratio."""
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return cls.from_dt(net, sigma * min(b.h for b in net.branches))


@dataclass(frozen=True)
class GridState:
    time: float
    step: int
    p: Mapping[str, np.ndarray]
    q: Mapping[str, np.ndarray]

    @classmethod
    def initial(cls, net: Network, fields: Mapping[str, tuple[Field, Field]]) -> GridState:
        """Sample P^I, Q^I at the nodes x = n/N of every branch."""
        p: dict[str, np.ndarray] = {}
        q: dict[str, np.ndarray] = {}
        for b in net.branches:
            pf, qf = fields[b.id]
            x = nodes(b.cells)
            p[b.id] = np.array(np.broadcast_to(pf.value(x, 0.0), x.shape), dtype=float)
            q[b.id] = np.array(np.broadcast_to(qf.value(x, 0.0), x.shape), dtype=float)
        return cls(time=0.0, step=0, p=p, q=q)

    def max_difference(self, other: GridState) -> float:
        """Max-norm distance over all branches, nodes and both fields."""
        worst = 0.0
        for bid in self.p:
            worst = max(worst, float(np.max(np.abs(self.p[bid] - other.p[bid]))))
            worst = max(worst, float(np.max(np.abs(self.q[bid] - other.q[bid]))))
        return worst


def nodes(cells: int) -> np.ndarray:
    return np.arange(cells + 1, dtype=float) / cells
