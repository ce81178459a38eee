import json
import math

import numpy as np
import pytest

from arterial_network.config import load_config
from arterial_network.errors import Blowup, BoundarySignViolation, CFLViolation, HyperbolicityLoss
from arterial_network.fields import ConstantField, PolynomialField, SineField, SumField
from arterial_network.models import LinearConstantModel, LinearFieldModel
from arterial_network.network import (
    Branch,
    Flow,
    Junction,
    Network,
    Pressure,
    SourceSpec,
    TerminalSpec,
    Windkessel,
)
from arterial_network.output import probes_csv, summary_json
from arterial_network.run_config import load_run_config
from arterial_network.scheme import (
    Probe,
    evaluate_level,
    interior_update,
    junction_determinant,
    junction_update,
    run,
    source_update,
    step,
    step_count,
    terminal_update,
    windkessel_update,
    windkessel_update_explicit,
)
from arterial_network.signals import Constant, Sinusoid
from arterial_network.state import GridState, StepSizes, nodes

from conftest import bifurcation_network, constant_fields, linear_branch_network

UNIT = LinearConstantModel(a=1.0, b=1.0)


def _state(net, **arrays):
    p = {bid: np.asarray(v[0], dtype=float) for bid, v in arrays.items()}
    q = {bid: np.asarray(v[1], dtype=float) for bid, v in arrays.items()}
    return GridState(time=0.0, step=0, p=p, q=q)


def _level(model, p, q, k, cells=None):
    cells = cells or len(p) - 1
    return evaluate_level(Branch("A", cells, model), model, 0.0, np.asarray(p, float), np.asarray(q, float), k)


# -- interior ----------------------------------------------------------------------


def test_interior_preserves_constant_state():
    lv = _level(UNIT, np.ones(11), np.zeros(11), 0.04)
    p, q = interior_update(lv)
    np.testing.assert_array_equal(p, 1.0)
    np.testing.assert_array_equal(q, 0.0)


def test_interior_linear_ramp_golden():
    cells, k = 10, 0.04
    x = nodes(cells)
    lv = _level(UNIT, x, np.zeros(cells + 1), k)
    p, q = interior_update(lv)
    np.testing.assert_allclose(p, x[1:-1], atol=1e-15)
    np.testing.assert_allclose(q, -k, atol=1e-15)


def test_interior_matches_brute_force_solve():
    rng = np.random.default_rng(3)
    cells, k = 8, 0.02
    model = LinearConstantModel(a=1.7, b=0.6, c=0.3, f=0.2, g=-0.4)
    p0, q0 = rng.normal(size=cells + 1), rng.normal(size=cells + 1)
    lv = _level(model, p0, q0, k)
    p, q = interior_update(lv)
    h = 1.0 / cells
    a, c = 1.7, 0.3
    u = math.sqrt(c * c + a * 0.6)
    ll, lr = c - u, c + u
    d_r, d_l = -ll * 0.2 + a * -0.4, -lr * 0.2 + a * -0.4
    for n in range(1, cells):
        mat = np.array([[-ll / k, a / k], [-lr / k, a / k]])
        rhs = np.array(
            [
                d_r - lr / h * (-ll * (p0[n] - p0[n - 1]) + a * (q0[n] - q0[n - 1])),
                d_l - ll / h * (-lr * (p0[n + 1] - p0[n]) + a * (q0[n + 1] - q0[n])),
            ]
        )
        dp, dq = np.linalg.solve(mat, rhs)
        assert p[n - 1] == pytest.approx(p0[n] + dp, abs=1e-12)
        assert q[n - 1] == pytest.approx(q0[n] + dq, abs=1e-12)


# -- boundaries --------------------------------------------------------------------


def test_source_closures_from_rest():
    k = 0.05
    lv = _level(UNIT, np.ones(11), np.zeros(11), k)
    value = Sinusoid(1.0, 0.1, 1.0).value(k)
    p, q = source_update(Pressure(Constant(value)), value, lv)
    assert p == value
    assert q == pytest.approx(value - 1.0)
    p, q = source_update(Flow(Constant(0.0)), 0.0, lv)
    assert (p, q) == (1.0, 0.0)
    p, q = source_update(Flow(Constant(0.3)), 0.3, lv)
    assert p == pytest.approx(1.3)


def test_terminal_closures_from_rest():
    lv = _level(UNIT, np.ones(11), np.zeros(11), 0.05)
    p, q = terminal_update(Pressure(Constant(1.2)), 1.2, lv)
    assert (p, q) == (1.2, pytest.approx(-0.2))
    p, q = terminal_update(Flow(Constant(0.0)), 0.0, lv)
    assert (p, q) == (1.0, 0.0)
    p, q = terminal_update(Flow(Constant(0.25)), 0.25, lv)
    assert p == pytest.approx(0.75)


def test_windkessel_determinant_example():
    lv = _level(UNIT, np.ones(11), np.zeros(11), 1.0)
    wk = Windkessel(eta=1.0, delta=0.0, epsilon=0.0, w_signal=Constant(0.0))
    _, _, det = windkessel_update(wk, 0.0, lv, 1.0)
    assert det == pytest.approx(-2.0)


def test_windkessel_first_step_golden():
    k = 0.1
    lv = _level(UNIT, np.ones(11), np.ones(11), k)
    wk = Windkessel(eta=1.0, delta=1.0, epsilon=1.0, w_signal=Constant(1.0))
    p, q, det = windkessel_update(wk, 1.0, lv, k)
    assert det == pytest.approx(-210.0)
    assert p == pytest.approx(1.0 + 1.0 / 21.0)
    assert q == pytest.approx(1.0 - 1.0 / 21.0)
    p, q, det = windkessel_update_explicit(wk, 1.0, lv, k)
    assert det == pytest.approx(-200.0)
    assert p == pytest.approx(1.05)
    assert q == pytest.approx(0.95)


def test_windkessel_first_step_from_unforced_equilibrium():
    k = 0.1
    lv = _level(UNIT, np.ones(11), np.ones(11), k)
    wk = Windkessel(eta=1.0, delta=1.0, epsilon=1.0, w_signal=Constant(0.0))
    assert windkessel_update(wk, 0.0, lv, k) == pytest.approx((1.0, 1.0, -210.0))
    assert windkessel_update_explicit(wk, 0.0, lv, k) == pytest.approx((1.0, 1.0, -200.0))


@pytest.mark.parametrize("closure", ["trapezoidal", "explicit"])
def test_windkessel_equilibrium_is_preserved(closure, cfg):
    wk = Windkessel(eta=0.5, delta=1.0, epsilon=2.0, w_signal=Constant(1.0))
    net = linear_branch_network(source=Pressure(Constant(2.0)), terminal=wk)
    state = GridState.initial(net, constant_fields(net, 2.0, 0.5))
    new, diag = step(net, state, StepSizes.from_dt(net, 0.05), config=cfg, closure=closure)
    np.testing.assert_allclose(new.p["A"], 2.0, atol=1e-14)
    np.testing.assert_allclose(new.q["A"], 0.5, atol=1e-14)
    assert diag.windkessel_determinants["A"] < 0


# -- junctions ---------------------------------------------------------------------


def _pass_through(k):
    net = Network(
        branches=(Branch("A", 10, UNIT), Branch("B", 10, UNIT)),
        junctions=(Junction(("A",), ("B",), id="J"),),
        sources=(SourceSpec("A", Pressure(Constant(1.0))),),
        terminals=(TerminalSpec("B", Flow(Constant(0.0))),),
    )
    levels = {b: _level(UNIT, np.ones(11), np.zeros(11), k) for b in ("A", "B")}
    return net, levels


def test_junction_determinant_example():
    net, levels = _pass_through(1.0)
    assert junction_determinant(net.junctions[0], levels, 1.0) == pytest.approx(2.0)
    sol = junction_update(net.junctions[0], levels, 1.0)
    assert sol.determinant == pytest.approx(2.0)
    assert sol.pressure == pytest.approx(1.0)
    assert sol.flows[("A", "x1")] == pytest.approx(0.0)


def test_bifurcation_splits_flow_symmetrically(cfg):
    net = bifurcation_network(cells=10, inflow=0.3)
    x = nodes(10)
    state = _state(
        net,
        A=(1.0 + 0.1 * x, np.full(11, 0.3)),
        B=(1.1 - 0.1 * x, 0.15 + 0.05 * x),
        C=(1.1 - 0.1 * x, 0.15 + 0.05 * x),
    )
    new, diag = step(net, state, StepSizes.from_dt(net, 0.05), config=cfg)
    q_in = new.q["A"][-1]
    assert new.q["B"][0] == pytest.approx(new.q["C"][0], abs=1e-14)
    assert new.q["B"][0] == pytest.approx(q_in / 2.0, abs=1e-14)
    assert new.p["A"][-1] == new.p["B"][0] == new.p["C"][0]
    assert diag.junction_determinants["J1"] > 0

    # independent dense solve of the same 4x4 system
    k = 0.05
    levels = {b: evaluate_level(net.branch(b), UNIT, 0.0, state.p[b], state.q[b], k) for b in "ABC"}
    mat = np.zeros((4, 4))
    rhs = np.zeros(4)
    mat[0] = [0.0, -1.0, 1.0, 1.0]
    lv = levels["A"]
    ll = lv.e.lambda_l[-1]
    mat[1, 0], mat[1, 1] = -ll / k, 1.0 / k
    rhs[1] = (-ll * lv.p[-1] + lv.q[-1] + lv.r1[-1]) / k
    for row, b in ((2, "B"), (3, "C")):
        lv = levels[b]
        lr = lv.e.lambda_r[0]
        mat[row, 0], mat[row, row] = -lr / k, 1.0 / k
        rhs[row] = (-lr * lv.p[0] + lv.q[0] + lv.r2[0]) / k
    z = np.linalg.solve(mat, rhs)
    assert new.p["B"][0] == pytest.approx(z[0], abs=1e-12)
    assert q_in == pytest.approx(z[1], abs=1e-12)


def test_self_loop_closes_on_itself(cfg):
    net = Network(branches=(Branch("A", 10, UNIT),), junctions=(Junction(("A",), ("A",), id="L"),))
    fields = {"A": (SumField((ConstantField(1.0), SineField(0.1, kx=2 * math.pi, phase_x=0.0))), ConstantField(0.2))}
    state = GridState.initial(net, fields)
    new, diag = step(net, state, StepSizes.from_dt(net, 0.05), config=cfg)
    assert new.p["A"][0] == new.p["A"][-1]
    assert new.q["A"][0] == pytest.approx(new.q["A"][-1], abs=1e-14)
    assert diag.junction_residuals["L"][0] < 1e-12


# -- step ----------------------------------------------------------------------------


def test_constant_network_state_is_unchanged(cfg):
    net = bifurcation_network(cells=8, inflow=0.0, outlet_pressure=1.0)
    state = GridState.initial(net, constant_fields(net, 1.0))
    new, diag = step(net, state, StepSizes.from_sigma(net, 0.5), config=cfg)
    for b in net.branch_ids:
        np.testing.assert_array_equal(new.p[b], state.p[b])
        np.testing.assert_array_equal(new.q[b], state.q[b])
    assert diag.junction_residuals["J1"] == (0.0, 0.0)


def test_superposition_for_linear_model(cfg):
    rng = np.random.default_rng(5)
    model = LinearConstantModel(a=1.5, b=0.8, c=0.3)
    cells = 12
    alpha, beta = 2.0, -0.5

    def setup(ps, qt):
        return linear_branch_network(cells, model, Pressure(Constant(ps)), Flow(Constant(qt)))

    u_bc, v_bc = rng.normal(size=2), rng.normal(size=2)
    u = (rng.normal(size=cells + 1), rng.normal(size=cells + 1))
    v = (rng.normal(size=cells + 1), rng.normal(size=cells + 1))
    w = (alpha * u[0] + beta * v[0], alpha * u[1] + beta * v[1])
    net_u, net_v = setup(*u_bc), setup(*v_bc)
    net_w = setup(*(alpha * u_bc + beta * v_bc))
    sizes = StepSizes.from_sigma(net_u, 0.4)
    su, _ = step(net_u, _state(net_u, A=u), sizes, config=cfg)
    sv, _ = step(net_v, _state(net_v, A=v), sizes, config=cfg)
    sw, _ = step(net_w, _state(net_w, A=w), sizes, config=cfg)
    np.testing.assert_allclose(sw.p["A"], alpha * su.p["A"] + beta * sv.p["A"], atol=1e-12)
    np.testing.assert_allclose(sw.q["A"], alpha * su.q["A"] + beta * sv.q["A"], atol=1e-12)


class _Spy:
    name = "spy"

    def __init__(self):
        self.calls = []

    def eval(self, x, t, p, q):
        self.calls.append((t, np.array(p), np.array(q)))
        return UNIT.eval(x, t, p, q)

    def to_spec(self):
        return {"name": self.name}


def test_coefficients_are_evaluated_at_the_old_level(cfg):
    spy = _Spy()
    net = linear_branch_network(cells=10, model=spy)
    state = GridState.initial(net, {"A": (SumField((ConstantField(1.0), SineField(0.1, kx=math.pi))), ConstantField(0.0))})
    sizes = StepSizes.from_dt(net, 0.05)
    history = [state]
    for _ in range(3):
        state, _ = step(net, state, sizes, config=cfg)
        history.append(state)
    assert len(spy.calls) == 3
    for m, (t, p, q) in enumerate(spy.calls):
        assert t == pytest.approx(m * 0.05)
        np.testing.assert_array_equal(p, history[m].p["A"])
        np.testing.assert_array_equal(q, history[m].q["A"])


def test_models_override_branch_models(cfg):
    spy = _Spy()
    net = linear_branch_network(cells=10)
    state = GridState.initial(net, constant_fields(net, 1.0))
    step(net, state, StepSizes.from_dt(net, 0.05), models={"A": spy}, config=cfg)
    assert len(spy.calls) == 1


def test_cfl_boundary_is_strict(cfg):
    net = linear_branch_network(cells=10)
    state = GridState.initial(net, constant_fields(net, 1.0))
    with pytest.raises(CFLViolation) as info:
        step(net, state, StepSizes.from_dt(net, 0.1), config=cfg)
    assert info.value.branch == "A"
    assert info.value.value == pytest.approx(1.0)
    step(net, state, StepSizes.from_dt(net, 0.099), config=cfg)


def test_boundary_sign_violation_is_located(cfg):
    model = LinearFieldModel(
        a=ConstantField(1.0),
        b=PolynomialField((-0.5, 2.0)),
        c=ConstantField(2.0),
        f=ConstantField(0.0),
        g=ConstantField(0.0),
    )
    net = linear_branch_network(cells=20, model=model)
    state = GridState.initial(net, constant_fields(net, 1.0))
    with pytest.raises(BoundarySignViolation) as info:
        step(net, state, StepSizes.from_dt(net, 0.005), config=cfg)
    assert (info.value.branch, info.value.n, info.value.t) == ("A", 0, 0.0)


def _fading_model():
    # b = 1 - 2t reaches zero at t = 0.5
    return LinearFieldModel(
        a=ConstantField(1.0),
        b=PolynomialField((1.0,), (1.0, -2.0)),
        c=ConstantField(0.0),
        f=ConstantField(0.0),
        g=ConstantField(0.0),
    )


def test_hyperbolicity_loss_mid_run_is_located(cfg):
    net = linear_branch_network(cells=20, model=_fading_model())
    sizes = StepSizes.from_dt(net, 0.01)
    with pytest.raises(HyperbolicityLoss) as info:
        run(net, constant_fields(net, 1.0), 1.0, sizes, config=cfg)
    assert info.value.branch == "A"
    assert info.value.n == 0
    assert info.value.t == pytest.approx(0.5)

    result = run(net, constant_fields(net, 1.0), 1.0, sizes, config=cfg, raise_on_abort=False)
    assert result.summary.abort["event"] == "hyperbolicity_loss"
    assert result.summary.steps == 50
    assert result.log.events("hyperbolicity_loss")


def test_blowup_bound(cfg):
    net = linear_branch_network(cells=10)
    state = GridState.initial(net, constant_fields(net, 1.0))
    with pytest.raises(Blowup) as info:
        step(net, state, StepSizes.from_dt(net, 0.05), config=load_config(blowup_bound=0.5))
    assert info.value.event == "blowup"
    assert info.value.branch == "A"


def _strict_json(text):
    def reject(token):
        raise ValueError(f"non-standard JSON constant {token}")

    return json.loads(text, parse_constant=reject)


def test_non_finite_blowup_writes_valid_json(cfg):
    net = linear_branch_network(cells=10)
    p = np.ones(11)
    p[5] = np.inf
    state = GridState(time=0.0, step=0, p={"A": p}, q={"A": np.zeros(11)})
    result = run(net, state, 0.1, StepSizes.from_dt(net, 0.05), config=cfg, raise_on_abort=False)
    assert result.summary.abort["event"] == "blowup"
    assert result.summary.abort["detail"]["value"] in ("inf", "-inf", "nan")
    for line in result.log.to_text().splitlines():
        _strict_json(line)
    assert _strict_json(summary_json(result))["abort"]["event"] == "blowup"


# -- run -----------------------------------------------------------------------------


def test_constant_preservation_over_many_steps(cfg):
    model = LinearConstantModel(a=1.0, b=1.0, c=0.2)
    net = linear_branch_network(10, model, Pressure(Constant(1.3)), Flow(Constant(0.4)))
    initial = constant_fields(net, 1.3, 0.4)
    sizes = StepSizes.from_sigma(net, 0.5)
    result = run(net, initial, 10_000 * sizes.k, sizes, config=cfg, stride=1000)
    assert result.state.step == 10_000
    drift = result.state.max_difference(GridState.initial(net, initial))
    assert drift < 1e-10


def test_zero_horizon_echoes_initial_state(cfg):
    net = linear_branch_network()
    initial = constant_fields(net, 1.0)
    result = run(net, initial, 0.0, StepSizes.from_dt(net, 0.05), probes=[Probe("A", 0.5)], config=cfg)
    assert result.state.step == 0
    assert result.probe_rows == []
    np.testing.assert_array_equal(result.state.p["A"], 1.0)
    assert probes_csv(result.probe_rows) == "t,branch,x,p,q\n"


def test_partial_final_step_is_not_taken(cfg):
    net = linear_branch_network()
    result = run(net, constant_fields(net, 1.0), 0.105, StepSizes.from_dt(net, 0.01), config=cfg)
    assert step_count(0.105, 0.01) == 10
    assert result.summary.final_time == pytest.approx(0.1)


def test_probe_rows_follow_stride_and_snap(cfg):
    net = linear_branch_network(cells=10)
    probes = [Probe.parse("A:0.33"), Probe("A", 1.0)]
    assert probes[0].snap(net) == ("A", 3, 0.3)
    result = run(net, constant_fields(net, 1.0), 0.35, StepSizes.from_dt(net, 0.05), probes=probes, stride=3, config=cfg)
    times = sorted({row[0] for row in result.probe_rows})
    assert times == pytest.approx([0.15, 0.30, 0.35])
    assert {row[2] for row in result.probe_rows} == {0.3, 1.0}


def test_constant_run_matches_golden_artifacts(cfg, golden_dir):
    net = linear_branch_network(cells=4)
    result = run(
        net, constant_fields(net, 1.0), 0.25, StepSizes.from_dt(net, 0.125), probes=[Probe("A", 0.5)], config=cfg
    )
    assert probes_csv(result.probe_rows) == (golden_dir / "constant_probes.csv").read_text()
    assert result.log.to_text() == (golden_dir / "constant_diagnostics.jsonl").read_text()


def test_compatibility_mismatch_warns(cfg):
    net = linear_branch_network()
    result = run(net, constant_fields(net, 2.0), 0.1, StepSizes.from_dt(net, 0.05), config=cfg)
    (record,) = result.log.events("compatibility")
    assert record["branch"] == "A:x0"
    assert record["detail"]["mismatch"] == pytest.approx(1.0)
    assert result.summary.warnings == 1


def test_bifurcation_demo_conserves_mass_at_every_step(configs_dir, cfg):
    rc = load_run_config(configs_dir / "bifurcation.yaml").with_overrides(horizon=0.5)
    result = run(rc.network, rc.initial, rc.horizon, rc.step_sizes(), config=cfg)
    assert result.summary.steps > 0
    assert result.summary.max_junction_residual < 1e-10
    assert result.summary.max_pressure_mismatch == 0.0
    assert result.summary.min_junction_determinant > 0
    assert result.summary.max_windkessel_determinant < 0
    final = result.state
    assert final.p["A"][-1] == final.p["B"][0] == final.p["C"][0]
