"""Verification harness: characteristics oracle, convergence and stability studies.

The oracle solves linear constant-coefficient single-branch problems by
transporting the Riemann variables along straight characteristics, with a
Picard iteration for the windkessel terminal. Studies run the scheme at a
ladder of resolutions and measure max-norm errors at the final time against
manufactured fields, the oracle, or a fine-grid run.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.interpolate import CubicSpline

from .characteristics import EigenData, RiemannPair, eigen, from_riemann
from .config import Config, load_config
from .errors import OracleError, SolverAbort, StudyError
from .fields import BumpField, ConstantField, Field, SumField
from .models import Coefficients, LinearConstantModel, LinearFieldModel, ManufacturedModel, manufactured_wrap
from .network import Flow, Network, Pressure, SourceSpec, TerminalSpec, Windkessel
from .scheme import run
from .signals import FieldTrace, WindkesselTrace
from .state import GridState, StepSizes, nodes

logger = logging.getLogger(__name__)

ORDER_WINDOW = (0.8, 1.3)
EPS_LADDER = (1e-2, 1e-3, 1e-4)
# errors below this are treated as exact; their order is undefined and not gated
EXACT_ERROR = 1e-13


# -- characteristics oracle -----------------------------------------------------


def _constant_coefficients(model) -> tuple[Coefficients, Callable | None, Callable | None]:
    """(a, b, c, f, g) at a point and, when the forcing varies, callables for f and g."""
    if isinstance(model, LinearConstantModel):
        return Coefficients(model.a, model.b, model.c, model.f, model.g), None, None
    if isinstance(model, LinearFieldModel):
        if not all(isinstance(fld, ConstantField) for fld in (model.a, model.b, model.c)):
            raise OracleError("the oracle needs a, b, c constant in x and t")
        co = Coefficients(model.a.level, model.b.level, model.c.level, 0.0, 0.0)
        if isinstance(model.f, ConstantField) and isinstance(model.g, ConstantField):
            return replace(co, f=model.f.level, g=model.g.level), None, None
        return co, model.f.value, model.g.value
    raise OracleError(f"the oracle handles linear constant-coefficient models, not {getattr(model, 'name', model)!r}")


def _vectorized(signal) -> Callable[[np.ndarray], np.ndarray]:
    fn = np.vectorize(signal.value, otypes=[float])
    return lambda t: fn(np.asarray(t, dtype=float))


@dataclass
class OracleSolution:
    """Exact (up to quadrature and Picard tolerance) solution on one branch for t <= horizon."""

    co: Coefficients
    e: EigenData
    horizon: float
    r_initial: Callable[[np.ndarray], np.ndarray]
    s_initial: Callable[[np.ndarray], np.ndarray]
    # f and g when they vary in (x, t); None for constant forcing
    f_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    g_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    r_source: Callable[[np.ndarray], np.ndarray] | None = None
    s_terminal: Callable[[np.ndarray], np.ndarray] | None = None
    picard_iterations: int = 0
    picard_distances: list[float] = field(default_factory=list)

    def _along(self, d: Callable | None, d_const: float, speed: float, x, t, start) -> np.ndarray:
        """Integral of the transport forcing along the characteristic ending at (x, t), from time start."""
        if d is None:
            return d_const * (t - start)

        def one(xe: float, te: float, t0: float) -> float:
            if te <= t0:
                return 0.0
            return quad(lambda s: float(d(xe - speed * (te - s), s)), t0, te, epsabs=1e-13, epsrel=1e-12)[0]

        return np.vectorize(one, otypes=[float])(x, t, start)

    def _d_const(self) -> tuple[float, float]:
        e, co = self.e, self.co
        return -e.lambda_l * co.f + co.a * co.g, -e.lambda_r * co.f + co.a * co.g

    def _pointwise_d(self, which: str) -> Callable | None:
        if self.f_fn is None:
            return None
        e, a = self.e, self.co.a
        lam = e.lambda_l if which == "r" else e.lambda_r
        return lambda x, t: -lam * self.f_fn(x, t) + a * self.g_fn(x, t)

    def r(self, x, t) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        lr = self.e.lambda_r
        xi = x - lr * t
        inside = xi >= 0.0
        start = np.where(inside, 0.0, t - x / lr)
        base = self.r_initial(np.clip(xi, 0.0, 1.0))
        if not np.all(inside):
            if self.r_source is None:
                raise OracleError("point depends on source data but no source trace is available")
            base = np.where(inside, base, self.r_source(np.clip(start, 0.0, self.horizon)))
        dr, _ = self._d_const()
        return base + self._along(self._pointwise_d("r"), dr, lr, x, t, start)

    def s(self, x, t) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        ll = self.e.lambda_l
        xi = x - ll * t
        inside = xi <= 1.0
        start = np.where(inside, 0.0, t - (x - 1.0) / ll)
        base = self.s_initial(np.clip(xi, 0.0, 1.0))
        if not np.all(inside):
            if self.s_terminal is None:
                raise OracleError("point depends on terminal data but no terminal trace is available")
            base = np.where(inside, base, self.s_terminal(np.clip(start, 0.0, self.horizon)))
        _, dl = self._d_const()
        return base + self._along(self._pointwise_d("s"), dl, ll, x, t, start)

    def riemann(self, x, t) -> RiemannPair:
        return RiemannPair(self.r(x, t), self.s(x, t))

    def evaluate(self, x, t) -> tuple[np.ndarray, np.ndarray]:
        """(P, Q) at positions x and time t (or matching arrays of times)."""
        if np.any(np.asarray(t) > self.horizon * (1 + 1e-12)):
            raise OracleError(f"t={np.max(t):.6g} is beyond the oracle horizon {self.horizon:.6g}")
        return from_riemann(self.riemann(x, t), self.co, self.e)


def oracle_horizon(e: EigenData) -> float:
    """Longest T for which no characteristic meets a second boundary."""
    return min(1.0 / e.lambda_r, 1.0 / -e.lambda_l)


def _windkessel_trace(
    sol: OracleSolution, wk: Windkessel, p_init: Field, q_init: Field, cfg: Config
) -> tuple[Callable[[np.ndarray], np.ndarray], int, list[float]]:
    """Picard iteration for s at x=1 under dP/dt - eta dQ/dt + delta P - epsilon Q = W."""
    co, e = sol.co, sol.e
    a, ll, lr, u = co.a, e.lambda_l, e.lambda_r, e.u
    tau = np.linspace(0.0, sol.horizon, cfg.oracle_trace_points)
    r1 = sol.r(np.ones_like(tau), tau)
    w = _vectorized(wk.w_signal)(tau)
    alpha = (1.0 - wk.eta * lr / a) / (2.0 * u)
    beta = (1.0 - wk.eta * ll / a) / (2.0 * u)
    phi0 = float(p_init.value(1.0, 0.0)) - wk.eta * float(q_init.value(1.0, 0.0))

    s1 = np.full_like(tau, float(sol.s_initial(np.array([1.0]))[0]))
    distances: list[float] = []
    for it in range(1, cfg.picard_max_iter + 1):
        p = (r1 - s1) / (2.0 * u)
        q = (lr * r1 - ll * s1) / (2.0 * u * a)
        phi = phi0 + cumulative_trapezoid(w - wk.delta * p + wk.epsilon * q, tau, initial=0.0)
        s_next = (alpha * r1 - phi) / beta
        dist = float(np.max(np.abs(s_next - s1)))
        distances.append(dist)
        s1 = s_next
        if it > 3 and dist > 10 * cfg.picard_tol and dist > distances[-2] * (1 + 1e-9):
            raise OracleError(f"Picard distance increased at iteration {it}: {distances[-2]:.3e} -> {dist:.3e}")
        if dist < cfg.picard_tol:
            spline = CubicSpline(tau, s1)
            return (lambda t: spline(np.asarray(t, dtype=float))), it, distances
    raise OracleError(
        f"Picard iteration did not converge in {cfg.picard_max_iter} iterations (last distance {distances[-1]:.3e})"
    )


def characteristics_oracle(
    model,
    source: Pressure | Flow,
    terminal: Pressure | Flow | Windkessel,
    p_init: Field,
    q_init: Field,
    horizon: float,
    config: Config | None = None,
) -> OracleSolution:
    """Solve a linear constant-coefficient branch with one source and one terminal."""
    cfg = config or load_config()
    co, f_fn, g_fn = _constant_coefficients(model)
    e = eigen(co)
    if not e.lambda_l < 0.0 < e.lambda_r:
        raise OracleError("the oracle needs lambda_L < 0 < lambda_R")
    limit = oracle_horizon(e)
    if horizon > limit * (1 + 1e-12):
        raise OracleError(f"horizon {horizon:.6g} exceeds the single-reflection limit {limit:.6g}")

    a, ll, lr, u = co.a, e.lambda_l, e.lambda_r, e.u

    def r_initial(x):
        return -ll * p_init.value(x, 0.0) + a * q_init.value(x, 0.0)

    def s_initial(x):
        return -lr * p_init.value(x, 0.0) + a * q_init.value(x, 0.0)

    sol = OracleSolution(co, e, horizon, r_initial, s_initial, f_fn, g_fn)

    value = _vectorized(source.signal)
    if isinstance(source, Pressure):
        sol.r_source = lambda tau: sol.s(np.zeros_like(tau), tau) + 2.0 * u * value(tau)
    else:
        sol.r_source = lambda tau: (2.0 * u * a * value(tau) + ll * sol.s(np.zeros_like(tau), tau)) / lr

    if isinstance(terminal, Windkessel):
        trace, iterations, distances = _windkessel_trace(sol, terminal, p_init, q_init, cfg)
        sol.s_terminal = trace
        sol.picard_iterations = iterations
        sol.picard_distances = distances
    else:
        tvalue = _vectorized(terminal.signal)
        if isinstance(terminal, Pressure):
            sol.s_terminal = lambda tau: sol.r(np.ones_like(tau), tau) - 2.0 * u * tvalue(tau)
        else:
            sol.s_terminal = lambda tau: (lr * sol.r(np.ones_like(tau), tau) - 2.0 * u * a * tvalue(tau)) / ll
        sol.picard_iterations = 1
    logger.debug("oracle ready: horizon %.4g, picard iterations %d", horizon, sol.picard_iterations)
    return sol


# -- study problems ----------------------------------------------------------------


@dataclass(frozen=True)
class StudyProblem:
    """A network with initial fields and a horizon, plus how to choose k per level."""

    network: Network
    initial: Mapping[str, tuple[Field, Field]]
    horizon: float
    sigma: float | None = None
    courant: float | None = None
    manufactured: Mapping[str, tuple[Field, Field]] | None = None


def with_resolution(net: Network, cells: int) -> Network:
    """The coarsest branch gets `cells`; others keep their ratio to it."""
    base = min(b.cells for b in net.branches)
    return replace(
        net,
        branches=tuple(replace(b, cells=max(2, int(round(cells * b.cells / base)))) for b in net.branches),
    )


def _trace(kind, fields: tuple[Field, Field], x: float):
    pstar, qstar = fields
    if isinstance(kind, Pressure):
        return Pressure(FieldTrace(pstar, x))
    if isinstance(kind, Flow):
        return Flow(FieldTrace(qstar, x))
    return replace(
        kind, w_signal=WindkesselTrace(pstar, qstar, kind.eta, kind.delta, kind.epsilon, x)
    )


def manufactured_problem(net: Network, fields: Mapping[str, tuple[Field, Field]]) -> Network:
    """Wrap every branch model and replace every boundary signal with the trace of the fields."""
    missing = [b.id for b in net.branches if b.id not in fields]
    if missing:
        raise StudyError(f"manufactured fields missing for branches: {', '.join(missing)}")
    return replace(
        net,
        branches=tuple(replace(b, model=manufactured_wrap(b.model, *fields[b.id])) for b in net.branches),
        sources=tuple(SourceSpec(s.branch, _trace(s.kind, fields[s.branch], 0.0)) for s in net.sources),
        terminals=tuple(TerminalSpec(s.branch, _trace(s.kind, fields[s.branch], 1.0)) for s in net.terminals),
    )


def manufactured_residual(model: ManufacturedModel, horizon: float, samples: int = 33) -> float:
    """Max PDE residual of the model's own fields on a sample grid over [0,1] x [0,T]."""
    x, t = np.meshgrid(np.linspace(0.0, 1.0, samples), np.linspace(0.0, horizon, 9))
    x, t = x.ravel(), t.ravel()
    worst = 0.0
    for ti in np.unique(t):
        xs = x[t == ti]
        ps, qs = model.pressure, model.flow
        co = model.eval(xs, ti, ps.value(xs, ti), qs.value(xs, ti))
        r_p = ps.dt(xs, ti) + co.a * qs.dx(xs, ti) - co.f
        r_q = qs.dt(xs, ti) + co.b * ps.dx(xs, ti) + 2.0 * co.c * qs.dx(xs, ti) - co.g
        worst = max(worst, float(np.max(np.abs(r_p))), float(np.max(np.abs(r_q))))
    return worst


def junction_field_mismatch(net: Network, fields: Mapping[str, tuple[Field, Field]], horizon: float) -> float:
    """How far manufactured fields are from satisfying the junction conditions."""
    worst = 0.0
    for t in np.linspace(0.0, horizon, 11):
        for j in net.junctions:
            ps = [float(fields[b][0].value(1.0 if end == "x1" else 0.0, t)) for b, end in j.ports()]
            q_in = sum(float(fields[b][1].value(1.0, t)) for b in j.incoming)
            q_out = sum(float(fields[b][1].value(0.0, t)) for b in j.outgoing)
            worst = max(worst, max(ps) - min(ps), abs(q_in - q_out))
    return worst


def initial_speed_bound(net: Network, initial: Mapping[str, tuple[Field, Field]]) -> float:
    state = GridState.initial(net, initial)
    bound = 0.0
    for b in net.branches:
        co = b.model.eval(nodes(b.cells), 0.0, state.p[b.id], state.q[b.id])
        bound = max(bound, eigen(co).speed_bound)
    return bound


def resolve_sigma(problem: StudyProblem) -> float:
    if problem.sigma is not None:
        return problem.sigma
    if problem.courant is not None:
        initial = problem.manufactured or problem.initial
        return problem.courant / initial_speed_bound(problem.network, initial)
    raise StudyError("a study needs sigma or courant")


def level_sizes(net: Network, horizon: float, sigma: float) -> StepSizes:
    """k = T / ceil(T / (sigma h_min)) so that whole steps land on T."""
    h_min = min(b.h for b in net.branches)
    if horizon <= 0:
        return StepSizes.from_dt(net, sigma * h_min)
    return StepSizes.from_dt(net, horizon / math.ceil(horizon / (sigma * h_min) - 1e-9))


# -- reports -------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelResult:
    cells: int
    h: float
    k: float
    steps: int
    error: float


@dataclass
class ConvergenceReport:
    levels: list[LevelResult]
    orders: list[float | None]
    window: tuple[float, float] = ORDER_WINDOW
    reference: str = "manufactured"
    closure: str = "trapezoidal"
    horizon: float = 0.0
    sigma: float = 0.0
    gated: bool = True

    @property
    def passed(self) -> bool:
        lo, hi = self.window
        return all(o is None or lo <= o <= hi for o in self.orders)

    @property
    def horizon_over_half_sigma(self) -> float:
        """T relative to sigma/2, the horizon the first-order error argument covers."""
        return self.horizon / (self.sigma / 2.0) if self.sigma else math.inf

    def to_dict(self) -> dict[str, Any]:
        return {
            "levels": [{"N": lv.cells, "h": lv.h, "error": lv.error} for lv in self.levels],
            "orders": self.orders,
            "passed": self.passed if self.gated else None,
            "reference": self.reference,
            "closure": self.closure,
            "horizon": self.horizon,
            "sigma": self.sigma,
            "horizon_over_half_sigma": self.horizon_over_half_sigma,
            "window": list(self.window),
        }

    def table(self) -> str:
        lines = [f"{'N':>6}  {'h':>10}  {'k':>10}  {'steps':>6}  {'error':>12}  {'order':>6}"]
        for i, lv in enumerate(self.levels):
            order = "" if i == 0 else ("exact" if self.orders[i - 1] is None else f"{self.orders[i - 1]:.3f}")
            lines.append(f"{lv.cells:>6}  {lv.h:>10.4g}  {lv.k:>10.4g}  {lv.steps:>6}  {lv.error:>12.4e}  {order:>6}")
        return "\n".join(lines)


def observed_orders(errors: Sequence[float]) -> list[float | None]:
    orders: list[float | None] = []
    for coarse, fine in zip(errors, errors[1:]):
        if coarse < EXACT_ERROR and fine < EXACT_ERROR:
            orders.append(None)
        elif fine <= 0.0:
            orders.append(math.inf)
        else:
            orders.append(math.log2(coarse / fine))
    return orders


def check_levels(levels: Sequence[int]) -> list[int]:
    levels = [int(n) for n in levels]
    if len(levels) < 2:
        raise ValueError("a convergence study needs at least two levels")
    for coarse, fine in zip(levels, levels[1:]):
        if fine != 2 * coarse:
            raise ValueError(f"levels must double: {coarse} is followed by {fine}")
    if levels[0] < 2:
        raise ValueError("levels must have at least 2 cells")
    return levels


# -- studies -------------------------------------------------------------------------


def _run_level(
    net: Network,
    initial: Mapping[str, tuple[Field, Field]],
    horizon: float,
    sigma: float,
    cfg: Config,
    closure: str,
) -> tuple[GridState, StepSizes]:
    sizes = level_sizes(net, horizon, sigma)
    try:
        result = run(net, initial, horizon, sizes, config=cfg, closure=closure)
    except SolverAbort as exc:
        cells = min(b.cells for b in net.branches)
        raise StudyError(f"level N={cells} aborted", exc) from exc
    return result.state, sizes


def _max_error(state: GridState, net: Network, exact: Callable[[str, np.ndarray], tuple[np.ndarray, np.ndarray]]) -> float:
    worst = 0.0
    for b in net.branches:
        p_ref, q_ref = exact(b.id, nodes(b.cells))
        worst = max(worst, float(np.max(np.abs(state.p[b.id] - p_ref))), float(np.max(np.abs(state.q[b.id] - q_ref))))
    return worst


def _oracle_for(problem: StudyProblem, cfg: Config) -> OracleSolution:
    net = problem.network
    if len(net.branches) != 1 or len(net.sources) != 1 or len(net.terminals) != 1:
        raise StudyError("an oracle reference needs a single branch with one source and one terminal")
    b = net.branches[0]
    p_init, q_init = problem.initial[b.id]
    try:
        return characteristics_oracle(
            b.model, net.sources[0].kind, net.terminals[0].kind, p_init, q_init, problem.horizon, cfg
        )
    except OracleError as exc:
        raise StudyError("oracle reference unavailable", exc) from exc


def convergence_study(
    problem: StudyProblem,
    levels: Sequence[int],
    reference: str = "auto",
    window: tuple[float, float] = ORDER_WINDOW,
    config: Config | None = None,
    closure: str = "trapezoidal",
) -> ConvergenceReport:
    """Run every level and compare with the reference at the final time.

    reference is "manufactured", "oracle", "self" (a run at 4x the finest
    level), or "auto" (manufactured when fields are given, else oracle).
    """
    cfg = config or load_config()
    levels = check_levels(levels)
    if reference == "auto":
        reference = "manufactured" if problem.manufactured else "oracle"
    sigma = resolve_sigma(problem)
    T = problem.horizon

    net, initial = problem.network, problem.initial
    exact: Callable[[str, np.ndarray], tuple[np.ndarray, np.ndarray]]
    if reference == "manufactured":
        if not problem.manufactured:
            raise StudyError("manufactured reference requested but no fields were given")
        fields = problem.manufactured
        net = manufactured_problem(net, fields)
        initial = fields
        for b in net.branches:
            res = manufactured_residual(b.model, T)
            if res > 1e-12:
                raise StudyError(f"manufactured residual {res:.3e} on branch {b.id} exceeds 1e-12")
        mismatch = junction_field_mismatch(net, fields, T)
        if mismatch > 1e-10:
            raise StudyError(f"manufactured fields violate the junction conditions by {mismatch:.3e}")

        def exact(bid: str, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            p, q = fields[bid]
            return np.broadcast_to(p.value(x, T), x.shape), np.broadcast_to(q.value(x, T), x.shape)

    elif reference == "oracle":
        oracle = _oracle_for(problem, cfg)

        def exact(bid: str, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return oracle.evaluate(x, T)

    elif reference == "self":
        fine_net = with_resolution(net, 4 * levels[-1])
        fine, _ = _run_level(fine_net, initial, T, sigma, cfg, "trapezoidal")
        fine_cells = {b.id: b.cells for b in fine_net.branches}

        def exact(bid: str, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            stride = fine_cells[bid] // (len(x) - 1)
            return fine.p[bid][::stride], fine.q[bid][::stride]

    else:
        raise ValueError(f"unknown reference {reference!r}")

    results: list[LevelResult] = []
    for n in levels:
        level_net = with_resolution(net, n)
        state, sizes = _run_level(level_net, initial, T, sigma, cfg, closure)
        err = _max_error(state, level_net, exact)
        h = min(b.h for b in level_net.branches)
        results.append(LevelResult(cells=n, h=h, k=sizes.k, steps=state.step, error=err))
        logger.info("level N=%d: error %.4e after %d steps", n, err, state.step)

    return ConvergenceReport(
        levels=results,
        orders=observed_orders([r.error for r in results]),
        window=window,
        reference=reference,
        closure=closure,
        horizon=T,
        sigma=sigma,
    )


def windkessel_variant_comparison(
    problem: StudyProblem,
    levels: Sequence[int],
    window: tuple[float, float] = ORDER_WINDOW,
    config: Config | None = None,
) -> tuple[ConvergenceReport, ConvergenceReport]:
    """Time-centered vs explicit windkessel closure, both against a fine time-centered run."""
    if not any(isinstance(t.kind, Windkessel) for t in problem.network.terminals):
        raise StudyError("the windkessel comparison needs a windkessel terminal")
    if problem.manufactured:
        problem = replace(
            problem,
            network=manufactured_problem(problem.network, problem.manufactured),
            initial=problem.manufactured,
            manufactured=None,
        )
    trapezoidal = convergence_study(problem, levels, "self", window, config, closure="trapezoidal")
    explicit = convergence_study(problem, levels, "self", window, config, closure="explicit")
    explicit.gated = False
    return trapezoidal, explicit


@dataclass
class StabilityReport:
    eps: list[float]
    deviations: list[float]
    factor: float = 2.0

    @property
    def ratios(self) -> list[float | None]:
        return [d / e if e > 0 else None for e, d in zip(self.eps, self.deviations)]

    @property
    def spread(self) -> float:
        """max/min of the deviation ratios over the nonzero perturbations."""
        rs = [r for r in self.ratios if r is not None]
        if not rs or min(rs) <= 0:
            return math.inf if rs and max(rs) > 0 else 1.0
        return max(rs) / min(rs)

    @property
    def passed(self) -> bool:
        return self.spread <= self.factor

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps": self.eps,
            "deviations": self.deviations,
            "ratios": self.ratios,
            "spread": self.spread,
            "factor": self.factor,
            "passed": self.passed,
        }

    def table(self) -> str:
        lines = [f"{'eps':>10}  {'D(eps)':>12}  {'D/eps':>12}"]
        for e, d, r in zip(self.eps, self.deviations, self.ratios):
            lines.append(f"{e:>10.3g}  {d:>12.4e}  {'-' if r is None else f'{r:.6g}':>12}")
        lines.append(f"spread {self.spread:.4f} (limit {self.factor:g})")
        return "\n".join(lines)


def stability_probe(
    problem: StudyProblem,
    eps: Sequence[float] = EPS_LADDER,
    bump: BumpField | None = None,
    config: Config | None = None,
    factor: float = 2.0,
) -> StabilityReport:
    """Deviation at T of runs from P^I + eps * bump against the unperturbed run."""
    cfg = config or load_config()
    bump = bump or BumpField()
    sigma = resolve_sigma(problem)
    net = problem.network
    base, _ = _run_level(net, problem.initial, problem.horizon, sigma, cfg, "trapezoidal")

    deviations: list[float] = []
    for e in eps:
        if e == 0:
            deviations.append(0.0)
            continue
        perturbed = {
            bid: (SumField((p, replace(bump, height=bump.height * e))), q) for bid, (p, q) in problem.initial.items()
        }
        state, _ = _run_level(net, perturbed, problem.horizon, sigma, cfg, "trapezoidal")
        deviations.append(state.max_difference(base))
        logger.info("stability eps=%.3g: deviation %.4e", e, deviations[-1])
    return StabilityReport(eps=[float(e) for e in eps], deviations=deviations, factor=factor)
