"""Command implementations for the arterial network CLI."""

from __future__ import annotations

import logging
from pathlib import Path

from rich.console import Console
from rich.table import Table
from rich.theme import Theme

from .characteristics import check_boundary_sign, cfl_check, eigen
from .config import Config
from .errors import ArterialError, HyperbolicityLoss, ModelDomainError, SolverAbort, StudyError, UsageError
from .network import ValidationReport, Windkessel, validate_topology
from .output import write_json, write_run
from .run_config import RunConfig
from .scheme import compatibility_warnings, run
from .state import GridState, nodes
from .verify import check_levels, convergence_study, stability_probe, windkessel_variant_comparison

logger = logging.getLogger(__name__)

_THEME = Theme({"info": "dim cyan", "warning": "bold yellow", "error": "bold red"})

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ABORT = 2
EXIT_USAGE = 64


def preflight(rc: RunConfig, cfg: Config) -> ValidationReport:
    """Topology, hyperbolicity, boundary signs and CFL on the initial data; compatibility as warnings."""
    net = rc.network
    report = validate_topology(net)
    state = GridState.initial(net, rc.initial)

    bounds: dict[str, float] = {}
    for b in net.branches:
        try:
            co = b.model.eval(nodes(b.cells), 0.0, state.p[b.id], state.q[b.id])
        except ModelDomainError as exc:
            n = int(round(exc.x * b.cells))
            report.add("domain", f"{exc.reason} at n={n} (x={exc.x:.4g}, P={exc.p:.6g})", b.id)
            continue
        try:
            e = eigen(co)
        except HyperbolicityLoss as exc:
            x = exc.n / b.cells if exc.n is not None else float("nan")
            report.add("hyperbolicity", f"c^2 + ab = {exc.value:.6g} is not positive at n={exc.n} (x={x:.4g})", b.id)
            continue
        bounds[b.id] = e.speed_bound
        for n, end in ((0, "x0"), (b.cells, "x1")):
            sign = check_boundary_sign(e.at(n))
            if not sign:
                report.add("boundary_sign", f"lambda_L < 0 < lambda_R fails: {sign.detail}", b.id, end)

    if len(bounds) == len(net.branches):
        try:
            sizes = rc.step_sizes()
        except (ValueError, ArterialError) as exc:
            report.add("step", str(exc))
        else:
            for bid, bound in bounds.items():
                res = cfl_check(sizes.sigma(bid), bound)
                if not res:
                    report.add("cfl", f"{res.detail}; need sigma < {1.0 / bound:.6g}", bid)

    for where, message, gap in compatibility_warnings(net, state, cfg.compat_tol):
        report.warnings.append(f"{where}: {message} (mismatch {gap:.3g})")
    return report


class CLI:
    def __init__(self, cfg: Config, console: Console | None = None) -> None:
        self.cfg = cfg
        self.console = console or Console(theme=_THEME)

    # -- reporting ------------------------------------------------------------

    def _print_report(self, report: ValidationReport) -> None:
        for w in report.warnings:
            self.console.print(f"[warning]warning:[/warning] {w}")
        if report.violations:
            table = Table(title="violations", show_lines=False)
            table.add_column("condition", style="error")
            table.add_column("location")
            table.add_column("detail")
            for v in report.violations:
                where = "" if v.branch is None else f"{v.branch}{':' + v.end if v.end else ''}"
                table.add_row(v.code, where, v.message)
            self.console.print(table)
        n = len(report.violations)
        style = "green" if n == 0 else "error"
        self.console.print(f"[{style}]{n} violation{'s' if n != 1 else ''}[/{style}], {len(report.warnings)} warnings")

    def _gate(self, rc: RunConfig) -> bool:
        report = preflight(rc, self.cfg)
        if not report.ok:
            self._print_report(report)
            return False
        for w in report.warnings:
            self.console.print(f"[warning]warning:[/warning] {w}")
        return True

    # -- commands ----------------------------------------------------------------

    def cmd_check(self, rc: RunConfig) -> int:
        report = preflight(rc, self.cfg)
        self.console.print(
            f"[info]network:[/info] {len(rc.network.branches)} branches, {len(rc.network.junctions)} junctions"
        )
        self._print_report(report)
        return EXIT_OK if report.ok else EXIT_VALIDATION

    def cmd_run(self, rc: RunConfig) -> int:
        if not self._gate(rc):
            return EXIT_VALIDATION
        sizes = rc.step_sizes()
        result = run(
            rc.network,
            rc.initial,
            rc.horizon,
            sizes,
            probes=rc.probes,
            config=self.cfg,
            stride=rc.stride,
            closure=rc.closure,
            raise_on_abort=False,
        )
        paths = write_run(rc.out, result, extra={"k": sizes.k, "closure": rc.closure})
        self.console.print(f"[info]{result.summary.format_compact()}[/info]")
        for name, path in paths.items():
            self.console.print(f"  {name}: {path}")
        if result.abort is not None:
            self.console.print(f"[error]aborted:[/error] {result.abort}")
            return EXIT_ABORT
        return EXIT_OK

    def _levels(self, rc: RunConfig) -> list[int]:
        try:
            return check_levels(rc.study.levels)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def _study_failed(self, exc: StudyError) -> int:
        self.console.print(f"[error]study failed:[/error] {exc}")
        return EXIT_ABORT if isinstance(exc.abort, SolverAbort) else EXIT_VALIDATION

    def cmd_converge(self, rc: RunConfig) -> int:
        levels = self._levels(rc)
        if not self._gate(rc):
            return EXIT_VALIDATION
        try:
            report = convergence_study(
                rc.study_problem(),
                levels,
                reference=rc.study.reference,
                window=rc.study.order_window,
                config=self.cfg,
                closure=rc.closure,
            )
        except StudyError as exc:
            return self._study_failed(exc)
        self.console.print(f"[info]reference: {report.reference}, T={report.horizon:g}, sigma={report.sigma:.4g}[/info]")
        self.console.print(report.table())
        if report.horizon_over_half_sigma > 1.0:
            self.console.print(f"[info]T is {report.horizon_over_half_sigma:.3g} x sigma/2[/info]")
        path = write_json(rc.out / "convergence.json", report.to_dict())
        self._verdict(report.passed, path)
        return EXIT_OK if report.passed else EXIT_VALIDATION

    def cmd_stability(self, rc: RunConfig) -> int:
        if not self._gate(rc):
            return EXIT_VALIDATION
        try:
            report = stability_probe(rc.study_problem(), rc.study.eps, rc.study.bump, config=self.cfg)
        except StudyError as exc:
            return self._study_failed(exc)
        self.console.print(report.table())
        path = write_json(rc.out / "stability.json", report.to_dict())
        self._verdict(report.passed, path)
        return EXIT_OK if report.passed else EXIT_VALIDATION

    def cmd_compare_windkessel(self, rc: RunConfig) -> int:
        """Exploratory: the exit status does not depend on the observed orders."""
        levels = self._levels(rc)
        if not any(isinstance(t.kind, Windkessel) for t in rc.network.terminals):
            raise UsageError("compare-windkessel needs a network with a windkessel terminal")
        if not self._gate(rc):
            return EXIT_VALIDATION
        try:
            trap, explicit = windkessel_variant_comparison(
                rc.study_problem(), levels, window=rc.study.order_window, config=self.cfg
            )
        except StudyError as exc:
            return self._study_failed(exc)
        for title, report in (("time-centered closure", trap), ("explicit closure", explicit)):
            self.console.print(f"[bold]{title}[/bold]")
            self.console.print(report.table())
        path = write_json(
            rc.out / "windkessel_comparison.json", {"trapezoidal": trap.to_dict(), "explicit": explicit.to_dict()}
        )
        self.console.print(f"[info]time-centered closure {'within' if trap.passed else 'outside'} the order window[/info]")
        self.console.print(f"  report: {path}")
        return EXIT_OK

    def _verdict(self, passed: bool, path: Path) -> None:
        if passed:
            self.console.print("[green]passed[/green]")
        else:
            self.console.print("[error]failed[/error]")
        self.console.print(f"  report: {path}")
