"""Explicit characteristic finite-difference scheme on a branch network.

On every branch the scheme discretizes the normal form

    -lL P_t + a Q_t + lR (-lL P_x + a Q_x) = dR
    -lR P_t + a Q_t + lL (-lR P_x + a Q_x) = dL

with a backward difference in the first equation (n = 1..N) and a forward
difference in the second (n = 0..N-1). All coefficients are evaluated at
level m. Interior nodes use both equations; each end uses the one equation
whose characteristic leaves the branch, closed by its boundary condition or
by the junction system it belongs to.
"""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .characteristics import EigenData, check_boundary_sign, cfl_check, eigen, normal_rhs
from .config import Config, load_config
from .diagnostics import DiagnosticsLog, RunSummary, StepDiagnostics
from .errors import (
    Blowup,
    BoundarySignViolation,
    CFLViolation,
    DeterminantSignError,
    DomainAbort,
    HyperbolicityLoss,
    JunctionInconsistency,
    ModelDomainError,
    SolverAbort,
)
from .fields import Field
from .models import Coefficients
from .network import Branch, Flow, Junction, Network, Pressure, Windkessel
from .state import GridState, StepSizes, nodes

logger = logging.getLogger(__name__)

CLOSURES = ("trapezoidal", "explicit")


@dataclass(frozen=True)
class BranchLevel:
    """Level-m data of one branch: state, coefficients, eigendata and the
    per-node right-hand sides of both difference equations (already times k).

    r1[n] (n >= 1) is k * (dR - lR/h * (-lL dp_back + a dq_back));
    r2[n] (n <= N-1) is k * (dL - lL/h * (-lR dp_fwd + a dq_fwd)).
    """

    branch: str
    p: np.ndarray
    q: np.ndarray
    co: Coefficients
    e: EigenData
    r1: np.ndarray
    r2: np.ndarray

    @property
    def cells(self) -> int:
        return len(self.p) - 1


def evaluate_level(branch: Branch, model, t: float, p: np.ndarray, q: np.ndarray, k: float) -> BranchLevel:
    """Coefficients, eigendata and difference right-hand sides at level m."""
    x = nodes(branch.cells)
    try:
        co = model.eval(x, t, p, q)
    except ModelDomainError as exc:
        n = int(round(exc.x * branch.cells))
        exc.locate(branch.id, n)
        raise DomainAbort(exc.reason, branch=branch.id, n=n, t=t, value=exc.p) from exc
    co = Coefficients(*(np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in (co.a, co.b, co.c, co.f, co.g)))
    try:
        e = eigen(co)
    except HyperbolicityLoss as exc:
        raise exc.locate(branch=branch.id, t=t)

    h = branch.h
    d_r, d_l = normal_rhs(co, e)
    ll, lr, a = e.lambda_l, e.lambda_r, co.a
    dp = np.diff(p)
    dq = np.diff(q)
    r1 = np.full(x.shape, np.nan)
    r2 = np.full(x.shape, np.nan)
    r1[1:] = k * (d_r[1:] - lr[1:] / h * (-ll[1:] * dp + a[1:] * dq))
    r2[:-1] = k * (d_l[:-1] - ll[:-1] / h * (-lr[:-1] * dp + a[:-1] * dq))
    return BranchLevel(branch.id, p, q, co, e, r1, r2)


# -- node updates --------------------------------------------------------------


def interior_update(level: BranchLevel) -> tuple[np.ndarray, np.ndarray]:
    """New (p, q) at n = 1..N-1 from both difference equations (closed-form 2x2)."""
    sl = slice(1, -1)
    r1, r2 = level.r1[sl], level.r2[sl]
    ll, u, a = level.e.lambda_l[sl], level.e.u[sl], level.co.a[sl]
    dp = (r1 - r2) / (2.0 * u)
    dq = (r1 + ll * dp) / a
    return level.p[sl] + dp, level.q[sl] + dq


def source_update(kind: Pressure | Flow, value: float, level: BranchLevel) -> tuple[float, float]:
    """(p, q) at n=0: the prescribed quantity, the other from the second equation."""
    p0, q0 = float(level.p[0]), float(level.q[0])
    r2, lr, a = float(level.r2[0]), float(level.e.lambda_r[0]), float(level.co.a[0])
    if isinstance(kind, Pressure):
        dp = value - p0
        return value, q0 + (r2 + lr * dp) / a
    dq = value - q0
    return p0 + (a * dq - r2) / lr, value


def terminal_update(kind: Pressure | Flow, value: float, level: BranchLevel) -> tuple[float, float]:
    """(p, q) at n=N: the prescribed quantity, the other from the first equation."""
    pn, qn = float(level.p[-1]), float(level.q[-1])
    r1, ll, a = float(level.r1[-1]), float(level.e.lambda_l[-1]), float(level.co.a[-1])
    if isinstance(kind, Pressure):
        dp = value - pn
        return value, qn + (r1 + ll * dp) / a
    dq = value - qn
    return pn + (a * dq - r1) / ll, value


def _solve_2x2(m00: float, m01: float, m10: float, m11: float, b0: float, b1: float) -> tuple[float, float, float]:
    det = m00 * m11 - m01 * m10
    return (b0 * m11 - m01 * b1) / det, (m00 * b1 - m10 * b0) / det, det


def windkessel_update(wk: Windkessel, w_half: float, level: BranchLevel, k: float) -> tuple[float, float, float]:
    """(p, q, det) at n=N from the first equation and the time-centered windkessel closure.

    The closure averages p and q over levels m and m+1 and takes W at (m + 1/2) k.
    """
    pn, qn = float(level.p[-1]), float(level.q[-1])
    r1, ll, a = float(level.r1[-1]), float(level.e.lambda_l[-1]), float(level.co.a[-1])
    dp, dq, det = _solve_2x2(
        -ll / k,
        a / k,
        1.0 / k + wk.delta / 2.0,
        -wk.eta / k - wk.epsilon / 2.0,
        r1 / k,
        w_half - wk.delta * pn + wk.epsilon * qn,
    )
    return pn + dp, qn + dq, det


def windkessel_update_explicit(wk: Windkessel, w_now: float, level: BranchLevel, k: float) -> tuple[float, float, float]:
    """As windkessel_update but with delta P - epsilon Q and W taken at level m."""
    pn, qn = float(level.p[-1]), float(level.q[-1])
    r1, ll, a = float(level.r1[-1]), float(level.e.lambda_l[-1]), float(level.co.a[-1])
    dp, dq, det = _solve_2x2(
        -ll / k,
        a / k,
        1.0 / k,
        -wk.eta / k,
        r1 / k,
        w_now - wk.delta * pn + wk.epsilon * qn,
    )
    return pn + dp, qn + dq, det


@dataclass(frozen=True)
class JunctionSolution:
    pressure: float
    flows: dict[tuple[str, str], float]
    determinant: float
    closed_form_determinant: float
    mass_residual: float


def junction_determinant(junction: Junction, levels: Mapping[str, BranchLevel], k: float) -> float:
    """(1/k^mu) (-sum_in lL/a + sum_out lR/a) prod a; positive under the sign conditions."""
    total = 0.0
    prod = 1.0
    for b, end in junction.ports():
        lv = levels[b]
        if end == "x1":
            a = float(lv.co.a[-1])
            total -= float(lv.e.lambda_l[-1]) / a
        else:
            a = float(lv.co.a[0])
            total += float(lv.e.lambda_r[0]) / a
        prod *= a / k
    return total * prod


def junction_update(
    junction: Junction, levels: Mapping[str, BranchLevel], k: float, condition_limit: float = 1e12
) -> JunctionSolution:
    """Common pressure and port flows at level m+1.

    Unknowns [p, q_port...]. Row 0 is mass balance (outgoing minus incoming),
    then the first equation at n=N for each incoming port and the second
    equation at n=0 for each outgoing port. Dense LU with partial pivoting.
    """
    ports = list(junction.ports())
    size = len(ports) + 1
    mat = np.zeros((size, size))
    rhs = np.zeros(size)
    for j, (b, end) in enumerate(ports, start=1):
        lv = levels[b]
        if end == "x1":
            a, lam = float(lv.co.a[-1]), float(lv.e.lambda_l[-1])
            pm, qm, r = float(lv.p[-1]), float(lv.q[-1]), float(lv.r1[-1])
            mat[0, j] = -1.0
        else:
            a, lam = float(lv.co.a[0]), float(lv.e.lambda_r[0])
            pm, qm, r = float(lv.p[0]), float(lv.q[0]), float(lv.r2[0])
            mat[0, j] = 1.0
        mat[j, 0] = -lam / k
        mat[j, j] = a / k
        rhs[j] = (-lam * pm + a * qm + r) / k

    name = junction.id or "junction"
    cond = float(np.linalg.cond(mat))
    closed = junction_determinant(junction, levels, k)
    if not math.isfinite(cond) or cond > condition_limit:
        raise JunctionInconsistency(
            f"junction {name} system is ill-conditioned (cond {cond:.3g}, determinant {closed:.6g})", value=closed
        )
    lu, piv = lu_factor(mat)
    swaps = int(np.count_nonzero(piv != np.arange(size)))
    det = float(np.prod(np.diag(lu))) * (-1.0 if swaps % 2 else 1.0)
    z = lu_solve((lu, piv), rhs)

    flows = {port: float(z[j]) for j, port in enumerate(ports, start=1)}
    incoming = sum(flows[(b, "x1")] for b in junction.incoming)
    outgoing = sum(flows[(b, "x0")] for b in junction.outgoing)
    return JunctionSolution(
        pressure=float(z[0]),
        flows=flows,
        determinant=det,
        closed_form_determinant=closed,
        mass_residual=abs(incoming - outgoing),
    )


# -- step ----------------------------------------------------------------------


def step(
    net: Network,
    state: GridState,
    sizes: StepSizes,
    models: Mapping[str, object] | None = None,
    config: Config | None = None,
    closure: str = "trapezoidal",
) -> tuple[GridState, StepDiagnostics]:
    """Advance every branch from level m to m+1."""
    cfg = config or load_config()
    k = sizes.k
    m = state.step
    t = state.time
    t_next = (m + 1) * k
    diag = StepDiagnostics(time=t_next)

    levels: dict[str, BranchLevel] = {}
    for b in net.branches:
        model = (models or {}).get(b.id, b.model)
        lv = evaluate_level(b, model, t, state.p[b.id], state.q[b.id], k)
        bound = lv.e.speed_bound
        diag.speed_bounds[b.id] = bound
        diag.speed_bound = max(diag.speed_bound, bound)
        cfl = cfl_check(sizes.sigma(b.id), bound)
        if not cfl:
            raise CFLViolation(cfl.detail, branch=b.id, t=t, value=cfl.value)
        for n, end in ((0, "x0"), (b.cells, "x1")):
            sign = check_boundary_sign(lv.e.at(n))
            diag.boundary_sign_ok[f"{b.id}:{end}"] = sign.ok
            if not sign:
                raise BoundarySignViolation(sign.detail, branch=b.id, n=n, t=t, value=sign.value)
        levels[b.id] = lv

    p_new: dict[str, np.ndarray] = {}
    q_new: dict[str, np.ndarray] = {}
    for bid, lv in levels.items():
        p_arr = np.empty_like(lv.p)
        q_arr = np.empty_like(lv.q)
        p_arr[1:-1], q_arr[1:-1] = interior_update(lv)
        p_new[bid] = p_arr
        q_new[bid] = q_arr

    for s in net.sources:
        p0, q0 = source_update(s.kind, s.kind.signal.value(t_next), levels[s.branch])
        p_new[s.branch][0] = p0
        q_new[s.branch][0] = q0

    for term in net.terminals:
        lv = levels[term.branch]
        if isinstance(term.kind, Windkessel):
            if closure == "explicit":
                pn, qn, det = windkessel_update_explicit(term.kind, term.kind.w_signal.value(t), lv, k)
            else:
                pn, qn, det = windkessel_update(term.kind, term.kind.w_signal.value(t + 0.5 * k), lv, k)
            diag.windkessel_determinants[term.branch] = det
            if cfg.debug_checks and not det < 0:
                raise DeterminantSignError(
                    f"windkessel determinant {det:.6g} is not negative", branch=term.branch, n=lv.cells, t=t, value=det
                )
        else:
            pn, qn = terminal_update(term.kind, term.kind.signal.value(t_next), lv)
        p_new[term.branch][-1] = pn
        q_new[term.branch][-1] = qn

    for j_idx, junction in enumerate(net.junctions):
        name = junction.id or f"J{j_idx + 1}"
        try:
            sol = junction_update(junction, levels, k, cfg.condition_limit)
        except JunctionInconsistency as exc:
            raise exc.locate(t=t)
        scale = 1.0
        for (b, end), qv in sol.flows.items():
            idx = -1 if end == "x1" else 0
            p_new[b][idx] = sol.pressure
            q_new[b][idx] = qv
            scale += abs(qv)
        mismatch = max(abs(p_new[b][-1 if end == "x1" else 0] - sol.pressure) for b, end in junction.ports())
        diag.junction_residuals[name] = (sol.mass_residual, mismatch)
        diag.junction_determinants[name] = sol.determinant
        if sol.mass_residual > cfg.junction_tol * scale:
            raise JunctionInconsistency(
                f"junction {name} mass residual {sol.mass_residual:.3g} exceeds tolerance",
                t=t,
                value=sol.mass_residual,
            )
        if cfg.debug_checks:
            closed = sol.closed_form_determinant
            if not (sol.determinant > 0 and closed > 0) or abs(sol.determinant - closed) > 1e-8 * abs(closed):
                raise DeterminantSignError(
                    f"junction {name} determinant {sol.determinant:.6g} disagrees with closed form {closed:.6g}",
                    t=t,
                    value=sol.determinant,
                )

    for bid in p_new:
        for arr in (p_new[bid], q_new[bid]):
            bad = ~(np.abs(arr) <= cfg.blowup_bound)
            if np.any(bad):
                n = int(np.flatnonzero(bad)[0])
                raise Blowup(f"value {float(arr[n])!r} beyond bound {cfg.blowup_bound:g}", branch=bid, n=n, t=t_next, value=float(arr[n]))

    return GridState(time=t_next, step=m + 1, p=p_new, q=q_new), diag


# -- run -----------------------------------------------------------------------


@dataclass(frozen=True)
class Probe:
    branch: str
    x: float

    @classmethod
    def parse(cls, text: str) -> Probe:
        branch, _, xs = text.rpartition(":")
        if not branch:
            raise ValueError(f"probe must look like BRANCH:X, got {text!r}")
        return cls(branch, float(xs))

    def snap(self, net: Network) -> tuple[str, int, float]:
        """(branch, node index, snapped x); the nearest grid node."""
        cells = net.branch(self.branch).cells
        n = int(round(self.x * cells))
        return self.branch, n, n / cells


@dataclass
class RunResult:
    state: GridState
    summary: RunSummary
    log: DiagnosticsLog
    probe_rows: list[tuple[float, str, float, float, float]] = field(default_factory=list)
    abort: SolverAbort | None = None
    last_diagnostics: StepDiagnostics | None = None


def compatibility_warnings(net: Network, state: GridState, tol: float) -> list[tuple[str, str, float]]:
    """(location, message, mismatch) for initial data that disagree with boundary data at t=0."""
    out: list[tuple[str, str, float]] = []

    def check(where: str, what: str, have: float, want: float) -> None:
        gap = abs(have - want)
        if gap > tol * (1.0 + abs(want)):
            out.append((where, f"initial {what} {have:.6g} differs from boundary value {want:.6g}", gap))

    for s in net.sources:
        quantity = "pressure" if isinstance(s.kind, Pressure) else "flow"
        have = state.p[s.branch][0] if isinstance(s.kind, Pressure) else state.q[s.branch][0]
        check(f"{s.branch}:x0", quantity, float(have), s.kind.signal.value(0.0))
    for s in net.terminals:
        if isinstance(s.kind, Windkessel):
            continue
        quantity = "pressure" if isinstance(s.kind, Pressure) else "flow"
        have = state.p[s.branch][-1] if isinstance(s.kind, Pressure) else state.q[s.branch][-1]
        check(f"{s.branch}:x1", quantity, float(have), s.kind.signal.value(0.0))
    for j_idx, j in enumerate(net.junctions):
        name = j.id or f"J{j_idx + 1}"
        pressures = [float(state.p[b][-1 if end == "x1" else 0]) for b, end in j.ports()]
        check(name, "junction pressure", max(pressures), min(pressures))
        q_in = sum(float(state.q[b][-1]) for b in j.incoming)
        q_out = sum(float(state.q[b][0]) for b in j.outgoing)
        check(name, "junction inflow", q_in, q_out)
    return out


def step_count(horizon: float, k: float) -> int:
    """Whole steps that fit in the horizon; a trailing partial step is not taken."""
    return int(math.floor(horizon / k + 1e-9))


def run(
    net: Network,
    initial: Mapping[str, tuple[Field, Field]] | GridState,
    horizon: float,
    sizes: StepSizes,
    probes: Sequence[Probe] = (),
    models: Mapping[str, object] | None = None,
    config: Config | None = None,
    stride: int = 1,
    closure: str = "trapezoidal",
    raise_on_abort: bool = True,
) -> RunResult:
    """Iterate step() from the sampled initial data until the horizon."""
    if closure not in CLOSURES:
        raise ValueError(f"unknown windkessel closure {closure!r}")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    cfg = config or load_config()
    state = initial if isinstance(initial, GridState) else GridState.initial(net, initial)
    log = DiagnosticsLog()
    summary = RunSummary()
    result = RunResult(state=state, summary=summary, log=log)
    snapped = [p.snap(net) for p in probes]

    log.emit(0.0, "start", detail={"horizon": horizon, "k": sizes.k, "branches": len(net.branches)}, level=logging.INFO)
    for where, message, gap in compatibility_warnings(net, state, cfg.compat_tol):
        log.emit(0.0, "compatibility", where, None, {"message": message, "mismatch": gap}, level=logging.WARNING)
        summary.warnings += 1

    total = step_count(horizon, sizes.k)
    started = _time.perf_counter()
    for m in range(total):
        try:
            state, diag = step(net, state, sizes, models=models, config=cfg, closure=closure)
        except SolverAbort as exc:
            record = exc.to_record()
            log.emit(record["t"], record["event"], record["branch"], record["n"], record["detail"], level=logging.ERROR)
            summary.abort = record
            result.abort = exc
            break
        summary.absorb(diag)
        result.last_diagnostics = diag
        result.state = state
        if state.step % stride == 0 or m == total - 1:
            log.emit(state.time, "step", detail=diag.to_detail())
            for bid, n, x in snapped:
                result.probe_rows.append((state.time, bid, x, float(state.p[bid][n]), float(state.q[bid][n])))

    summary.final_time = result.state.time
    summary.steps = result.state.step
    summary.wall_time_s = _time.perf_counter() - started
    log.emit(summary.final_time, "finish", detail={"steps": summary.steps}, level=logging.INFO)
    if result.abort is not None and raise_on_abort:
        raise result.abort
    return result
