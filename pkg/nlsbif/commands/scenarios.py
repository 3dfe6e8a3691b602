"""Scenario runners behind the ``nlsbif`` command.

Each runner takes a validated ``RunConfig`` and a ``RunContext``; every artifact goes through the context so that
the stationarity check, the loggers and the manifest see it.
"""
import logging
import os
import threading
import time
import uuid
from contextlib import contextmanager
from dataclasses import replace
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd

from nlsbif.commands import figures
from nlsbif.commands.config import RunConfig
from nlsbif.components.asymptotics import fit_scaling, localized_branch_check, nonexistence_probe, scaling_frame
from nlsbif.components.asymptotics import scaling_sweep
from nlsbif.components.bifurcation import (
    analyse_pitchfork,
    branch_switch,
    BifurcationReport,
    default_amplitude,
    NoCrossing,
)
from nlsbif.components.continuation import (
    Branch,
    branch_derivatives,
    fit_small_amplitude_law,
    slope_sign_changes,
    trace_from_linear_mode,
)
from nlsbif.components.sweep import run_concurrently
from nlsbif.discretization.grid import Grid
from nlsbif.loggers import get_loggers
from nlsbif.loggers.base import Logger
from nlsbif.operators.schrodinger import linearization_spectrum
from nlsbif.potentials.linear_modes import solve_linear_modes
from nlsbif.utilities.environment import environment_details
from nlsbif.utilities.exceptions import (
    InvalidParameters,
    NlsBifError,
    NumericalError,
    StateCollapsed,
    StepUnderflow,
    UnverifiedState,
    WindowTooNarrow,
)
from nlsbif.utilities.utils import sign_changes

_logger = logging.getLogger(__name__)


class RunContext:
    """Output directory, loggers and bookkeeping of one command invocation."""

    def __init__(
        self,
        out_dir: str,
        loggers: Optional[List[Logger]] = None,
        run_id: Optional[str] = None,
        workers: int = 1,
        allow_unverified: bool = False,
        stationarity_tol: float = 1e-6,
    ) -> None:
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.loggers = loggers if loggers is not None else get_loggers([], out_dir)
        self.run_id = run_id or str(uuid.uuid4()).split("-")[0]
        self.workers = workers
        self.allow_unverified = allow_unverified
        self.stationarity_tol = stationarity_tol
        self.current_stage = "setup"
        self.artifacts: List[str] = []
        self.summary: Dict[str, Any] = {}
        self.branches: Dict[str, Branch] = {}
        self._lock = threading.Lock()
        self._started = time.perf_counter()

    @classmethod
    def from_config(cls, config: RunConfig, out_dir: str, **overrides: Any) -> "RunContext":
        run = config.run
        values = dict(
            workers=run.workers,
            allow_unverified=run.allow_unverified,
            stationarity_tol=run.stationarity_tol,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        loggers = get_loggers(values.pop("loggers", None) or run.loggers, out_dir)
        return cls(out_dir, loggers=loggers, **values)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Errors escaping the block are tagged with the stage name, innermost first."""
        with self._lock:
            previous, self.current_stage = self.current_stage, name
        try:
            yield
        except NlsBifError as err:
            if getattr(err, "stage", None) is None:
                err.stage = name
            raise
        finally:
            with self._lock:
                self.current_stage = previous

    def _record(self, path: Optional[str]) -> None:
        if path is None:
            return
        with self._lock:
            if path not in self.artifacts:
                self.artifacts.append(path)

    def verify(self, branch: Branch) -> None:
        bad = [p.E for p in branch.points if not p.state.relative_stationarity <= self.stationarity_tol]
        if not bad:
            return
        message = (
            f"{branch.label}: {len(bad)} states exceed the stationarity tolerance {self.stationarity_tol:.0e} "
            f"(first at E={bad[0]:.8g})"
        )
        if not self.allow_unverified:
            raise UnverifiedState(message + "; rerun with --allow-unverified to emit them.")
        _logger.warning(message)

    def emit_branch(self, branch: Branch) -> None:
        if not branch.points:
            return
        self.verify(branch)
        with self._lock:
            self.branches[branch.label] = branch
        for logger in self.loggers:
            self._record(logger.on_branch(self.run_id, branch))
        self._record(os.path.join(self.out_dir, f"{branch.label}.meta.json"))

    def emit_report(self, name: str, record: Dict[str, Any]) -> None:
        for logger in self.loggers:
            self._record(logger.on_report(self.run_id, name, record))

    def emit_table(self, name: str, frame: pd.DataFrame) -> None:
        for logger in self.loggers:
            self._record(logger.on_table(self.run_id, name, frame))

    def figure(self, name: str) -> str:
        path = os.path.join(self.out_dir, f"{name}.svg")
        self._record(path)
        return path

    def start(self, scenario: str, config: RunConfig) -> None:
        for logger in self.loggers:
            logger.on_run_start(self.run_id, scenario, config.model_dump(mode="json"))

    def finish(
        self, scenario: str, config: RunConfig, status: str, error: Optional[str] = None, stage: Optional[str] = None
    ) -> Dict[str, Any]:
        manifest = {
            "run_id": self.run_id,
            "scenario": scenario,
            "status": status,
            "error": error,
            "stage": stage,
            "config": config.model_dump(mode="json"),
            "environment": environment_details(),
            "wall_time": time.perf_counter() - self._started,
            "artifacts": sorted(os.path.relpath(path, self.out_dir) for path in self.artifacts),
            "summary": self.summary,
        }
        for logger in self.loggers:
            logger.on_run_end(self.run_id, manifest)
        return manifest


def _relabel(branch: Branch, prefix: str) -> Branch:
    return replace(branch, label=f"{prefix}{branch.label}") if prefix else branch


def _onsets(branch: Branch) -> List[float]:
    try:
        return [float(e) for e in slope_sign_changes(branch)]
    except NumericalError as err:
        _logger.warning(f"{branch.label}: no slope data ({err})")
        return []


def _with_derivatives(branch: Branch) -> Branch:
    return branch_derivatives(branch) if len(branch) >= 3 else branch


def trace_linear_branch(
    config: RunConfig, ctx: RunContext, grid: Optional[Grid] = None, mode: Optional[int] = None, prefix: str = ""
) -> Branch:
    """Continue the branch bifurcating from a linear level up to ``continuation.E_max`` and emit it.

    A sweep that stops early still emits the points it reached before the error propagates.
    """
    potential, params = config.potential_object(), config.params()
    grid = grid or config.grid.build()
    mode = config.continuation.mode if mode is None else mode
    modes = solve_linear_modes(potential, grid, params=params)
    try:
        branch = trace_from_linear_mode(
            modes,
            config.continuation.E_max,
            potential,
            params,
            controls=config.continuation.build(),
            newton=config.newton.build(),
            mode=mode,
            offset=config.continuation.offset,
        )
    except (StepUnderflow, StateCollapsed) as err:
        if err.branch is not None and len(err.branch):
            ctx.emit_branch(_relabel(_with_derivatives(err.branch), prefix))
        raise
    branch = _relabel(branch_derivatives(branch), prefix)
    ctx.emit_branch(branch)
    return branch


def run_trace(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    potential, params = config.potential_object(), config.params()
    grid = config.grid.build()
    with ctx.stage("linear_modes"):
        modes = solve_linear_modes(potential, grid, params=params)
    with ctx.stage("continuation"):
        branch = trace_linear_branch(config, ctx, grid=grid)
    summary: Dict[str, Any] = {
        "label": branch.label,
        "E0": modes.E0,
        "E1": modes.E1,
        "points": len(branch),
        "slope_sign_changes": _onsets(branch),
        "lambda1_sign_changes": [float(e) for e in sign_changes(branch.E, branch.lambda1)],
    }
    try:
        summary["small_amplitude_fit"] = fit_small_amplitude_law(branch, modes, mode=config.continuation.mode)._asdict()
    except WindowTooNarrow as err:
        _logger.warning(f"Small-amplitude fit skipped: {err}")
        summary["small_amplitude_fit"] = None
    with ctx.stage("figures"):
        figures.plot_norm([branch], ctx.figure(f"{branch.label}_N"))
        figures.plot_lambda([branch], ctx.figure(f"{branch.label}_lambda"), both=True)
    ctx.emit_report("trace_summary", summary)
    return summary


def _switch_both(
    report: BifurcationReport, config: RunConfig, ctx: RunContext, E_target: float, prefix: str
) -> List[Branch]:
    potential, params = config.potential_object(), config.params()
    a0 = default_amplitude(report, config.bifurcation.build())

    def _switch(direction: int) -> Callable[[], Optional[Branch]]:
        def _task() -> Optional[Branch]:
            try:
                branch = branch_switch(
                    report,
                    a0,
                    direction,
                    potential,
                    params,
                    E_target,
                    controls=config.continuation.build(),
                    newton=config.newton.build(),
                    bifurcation_controls=config.bifurcation.build(),
                )
            except (StepUnderflow, StateCollapsed) as err:
                if err.branch is None or len(err.branch) < 3:
                    raise
                _logger.warning(f"Asymmetric branch stopped early: {err}")
                branch = err.branch
            return _relabel(branch_derivatives(branch), prefix)

        return _task

    results = run_concurrently({"plus": _switch(1), "minus": _switch(-1)}, simultaneous_tasks=ctx.workers)
    branches = [results["plus"], results["minus"]]
    for branch in branches:
        ctx.emit_branch(branch)
    return branches


def _mirror_residual(plus: Branch, minus: Branch) -> float:
    """Largest |x_cm^+(E) + x_cm^-(E)| over the common E range."""
    low, high = max(plus.E.min(), minus.E.min()), min(plus.E.max(), minus.E.max())
    E = minus.E[(minus.E >= low) & (minus.E <= high)]
    if len(E) == 0:
        return float("nan")
    return float(np.max(np.abs(np.interp(E, plus.E, plus.x_cm) + np.interp(E, minus.E, minus.x_cm))))


def run_pitchfork(config: RunConfig, ctx: RunContext, prefix: str = "") -> Dict[str, Any]:
    potential, params = config.potential_object(), config.params()
    grid = config.grid.build()
    with ctx.stage("linear_modes"):
        modes = solve_linear_modes(potential, grid, params=params)
    with ctx.stage("continuation"):
        even = trace_linear_branch(config, ctx, grid=grid, mode=0, prefix=prefix)
    with ctx.stage("bifurcation"):
        report = analyse_pitchfork(
            even, potential, params, modes, controls=config.bifurcation.build(), newton=config.newton.build()
        )
    summary: Dict[str, Any] = {"even_branch": even.label, "slope_sign_changes": {even.label: _onsets(even)}}
    branches = [even]
    if isinstance(report, NoCrossing):
        summary.update({"crossing": False, **report._asdict()})
    else:
        record = report.to_record()
        ctx.emit_report(f"{prefix}bifurcation", record)
        summary.update({"crossing": True, "E_star": report.E_star, "classification": record["classification"]})
        E_target = config.bifurcation.switch_E_max or config.continuation.E_max
        if config.bifurcation.switch and (E_target - report.E_star) * report.Q > 0:
            with ctx.stage("branch_switch"):
                asymmetric = _switch_both(report, config, ctx, E_target, prefix)
            branches += asymmetric
            summary["mirror_x_cm_residual"] = _mirror_residual(*asymmetric)
            for branch in asymmetric:
                summary["slope_sign_changes"][branch.label] = _onsets(branch)
        elif config.bifurcation.switch:
            _logger.warning(f"Skipping the branch switch: E={E_target} lies on the wrong side of E*={report.E_star}")
    summary["branches"] = [b.label for b in branches]
    with ctx.stage("figures"):
        E_star = summary.get("E_star")
        figures.plot_norm(branches, ctx.figure(f"{prefix}pitchfork_N"))
        figures.plot_lambda([even], ctx.figure(f"{prefix}pitchfork_lambda"))
        figures.plot_pitchfork(branches, ctx.figure(f"{prefix}pitchfork_x_cm"), E_star=E_star)
        profile_E = config.bifurcation.profile_E
        if profile_E is not None:
            reaching = [b for b in branches if b.E.min() <= profile_E <= b.E.max()]
            profiles = {b.label: b.point_at(profile_E).state.phi for b in reaching}
            figures.plot_profiles(profiles, ctx.figure(f"{prefix}profiles"), title=f"E={profile_E:g}")
    ctx.emit_report(f"{prefix}pitchfork_summary", summary)
    return summary


def run_scaling(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    section = config.scaling
    potential, params = config.potential_object(), config.params()
    with ctx.stage("scaling_sweep"):
        branch = scaling_sweep(
            section.distribution().values(),
            potential,
            params,
            config.grid.build(),
            x0=section.x0,
            newton=config.newton.build(),
            min_resolution=section.min_resolution,
            workers=ctx.workers,
        )
        ctx.emit_branch(branch)
    with ctx.stage("scaling_fit"):
        fit = fit_scaling(branch, section.window, x0=section.x0, min_resolution=section.min_resolution)
        frame = scaling_frame(branch, x0=section.x0)
    ctx.emit_table("scaling_points", frame)
    ctx.emit_table("scaling_fit", fit.to_frame())
    ctx.emit_report("scaling_summary", fit.to_record())
    with ctx.stage("figures"):
        figures.plot_scaling(frame, ["norm_2p2", "N", "grad_norm2"], ctx.figure("scaling"))
    return fit.to_record()


def run_localized(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    section = config.localized
    potential, params = config.potential_object(), config.params()
    grid = config.grid.build()
    x0_list = section.x0 if section.x0 is not None else [cp.x for cp in potential.critical_points()]
    E_values = section.distribution().values()
    summary: Dict[str, Any] = {"branches": [], "probes": []}
    for x0 in x0_list:
        with ctx.stage(f"localized x0={x0:g}"):
            report = localized_branch_check(
                x0,
                potential,
                params,
                E_values,
                grid,
                newton=config.newton.build(),
                min_resolution=section.min_resolution,
                workers=ctx.workers,
            )
        ctx.emit_table(f"localized_x0_{x0:g}", report.rows)
        summary["branches"].append(report.to_record())
    if section.probe_points:
        with ctx.stage("nonexistence_probe"):
            probes = [
                nonexistence_probe(x0, potential, params, section.probe_E, grid, newton=config.newton.build())
                for x0 in section.probe_points
            ]
        frame = pd.DataFrame(
            [{"x0": r.x0, "outcome": r.outcome.value, "R": r.R, "x_cm": r.x_cm, "message": r.message} for r in probes]
        )
        ctx.emit_table("probes", frame)
        summary["probes"] = frame.to_dict(orient="records")
    ctx.emit_report("localized_summary", summary)
    return summary


def _crossings(branch: Branch) -> List[float]:
    values = branch.lambda1
    keep = np.isfinite(values)
    return [float(e) for e in sign_changes(branch.E[keep], values[keep])]


def resolution_audit(config: RunConfig, ctx: RunContext, refinement: Optional[int] = None, prefix: str = ""):
    """Trace the even branch at dx and dx/refinement and compare the zeros of its second L+ eigenvalue."""
    refinement = refinement or config.audit.refinement
    if refinement < 1:
        raise InvalidParameters(f"The refinement factor must be at least 1, got {refinement}.", key="audit.refinement")
    coarse_grid = config.grid.build()
    fine_grid = coarse_grid.refined(refinement)

    def _arm(grid: Grid, name: str) -> Callable[[], Branch]:
        def _task() -> Branch:
            try:
                return trace_linear_branch(config, ctx, grid=grid, mode=0, prefix=f"{prefix}audit_{name}_")
            except (StepUnderflow, StateCollapsed) as err:
                if err.branch is None or len(err.branch) < 3:
                    raise
                _logger.warning(f"Audit arm {name} stopped early: {err}")
                return _relabel(branch_derivatives(err.branch), f"{prefix}audit_{name}_")

        return _task

    with ctx.stage("resolution_audit"):
        arms = run_concurrently(
            {"coarse": _arm(coarse_grid, "coarse"), "fine": _arm(fine_grid, "fine")}, simultaneous_tasks=ctx.workers
        )
    coarse, fine = arms["coarse"], arms["fine"]
    low, high = max(coarse.E.min(), fine.E.min()), min(coarse.E.max(), fine.E.max())
    common = coarse.E[(coarse.E >= low) & (coarse.E <= high)]
    difference = np.abs(np.interp(common, fine.E, fine.lambda1) - np.interp(common, coarse.E, coarse.lambda1))
    crossings_coarse, crossings_fine = _crossings(coarse), _crossings(fine)
    record = {
        "dx_coarse": coarse_grid.dx,
        "dx_fine": fine_grid.dx,
        "refinement": refinement,
        "crossings_coarse": crossings_coarse,
        "crossings_fine": crossings_fine,
        "crossing_count_differs": len(crossings_coarse) != len(crossings_fine),
        "max_lambda_difference": float(difference.max()) if len(difference) else 0.0,
        "E_range": [float(low), float(high)],
    }
    if record["crossing_count_differs"]:
        _logger.warning(
            f"Resolution audit: {len(crossings_coarse)} crossings at dx={coarse_grid.dx:.4g} but "
            f"{len(crossings_fine)} at dx={fine_grid.dx:.4g}"
        )
    ctx.emit_report(f"{prefix}resolution_audit", record)
    with ctx.stage("figures"):
        figures.plot_audit(coarse, fine, ctx.figure(f"{prefix}resolution_audit"))
    return record


def run_audit(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    return resolution_audit(config, ctx)


def _preset(config: RunConfig, p: float, s: float, E_max: float, **sections: Dict[str, Any]) -> RunConfig:
    """Figure presets always use the section5 normalization with a focusing cubic sign."""
    grid = {"dx": config.grid.dx or 0.0125, "n": None}
    return config.updated(
        problem={"p": p, "sigma": -1.0, "normalization": "section5"},
        potential={"kind": "double_well_sech2", "s": s},
        grid=grid,
        continuation={"E_max": E_max, "mode": 0},
        **sections,
    )


def _traces(config: RunConfig, ctx: RunContext, p: float, s_values: Sequence[float], E_max: float) -> List[Branch]:
    tasks = {}
    for s in s_values:
        preset = _preset(config, p, s, E_max)
        tasks[f"s={s:g}"] = lambda preset=preset, s=s: trace_linear_branch(preset, ctx, prefix=f"p{p:g}_s{s:g}_")
    with ctx.stage("continuation"):
        results = run_concurrently(tasks, simultaneous_tasks=ctx.workers)
    return list(results.values())


def _figure_fig1(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    branches = _traces(config, ctx, 1.0, (0.6, 0.7), 50.0)
    figures.plot_norm(branches, ctx.figure("fig1_N"), title="p=1")
    figures.plot_lambda(branches, ctx.figure("fig1_lambda"), title="p=1")
    return {b.label: {"lambda1_sign_changes": _crossings(b), "slope_sign_changes": _onsets(b)} for b in branches}


def _figure_fig1a(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    preset = _preset(config, 1.0, 0.7, 15.0, bifurcation={"switch": True, "switch_E_max": 15.0, "profile_E": 15.0})
    return run_pitchfork(preset, ctx, prefix="fig1a_")


def _figure_fig2(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    branches = _traces(config, ctx, 3.0, (0.6, 0.7), 20.0)
    figures.plot_norm(branches, ctx.figure("fig2_N"), title="p=3")
    figures.plot_lambda(branches, ctx.figure("fig2_lambda"), title="p=3")
    summary: Dict[str, Any] = {
        b.label: {"lambda1_sign_changes": _crossings(b), "slope_sign_changes": _onsets(b)} for b in branches
    }
    audit = config.updated(
        problem={"p": 3.0, "sigma": -1.0, "normalization": "section5"},
        potential={"kind": "double_well_sech2", "s": 0.7},
        grid={"dx": 0.025, "n": None},
        continuation={"E_max": 20.0, "mode": 0},
    )
    summary["resolution_audit"] = resolution_audit(audit, ctx, refinement=2, prefix="fig2_")
    return summary


def _figure_fig2a(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    preset = _preset(config, 3.0, 10.0, 1.0, bifurcation={"switch": True, "switch_E_max": 1.0})
    summary = run_pitchfork(preset, ctx, prefix="fig2a_")
    with ctx.stage("odd_branch"):
        odd = trace_linear_branch(preset, ctx, mode=1, prefix="fig2a_")
    summary["odd_branch"] = {"label": odd.label, "slope_sign_changes": _onsets(odd)}
    return summary


def linearization_table(branches: Sequence[Branch], every: int = 10) -> pd.DataFrame:
    """Largest squared growth rate of the linearization at every ``every``-th point of each branch."""
    rows = []
    for branch in branches:
        for point in branch.points[::every]:
            spectrum = linearization_spectrum(point.state.phi, point.E, branch.potential, branch.params)
            rows.append(
                {
                    "branch": branch.label,
                    "E": point.E,
                    "squared_rate": float(spectrum.squared_rates[0]),
                    "n_unstable": spectrum.n_unstable,
                }
            )
    return pd.DataFrame(rows, columns=["branch", "E", "squared_rate", "n_unstable"])


def _figure_figNew(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    preset = _preset(config, 5.0, 4.0, 0.3, bifurcation={"switch": True, "switch_E_max": 0.3})
    summary = run_pitchfork(preset, ctx, prefix="figNew_")
    branches = [ctx.branches[label] for label in summary["branches"]]
    with ctx.stage("linearization"):
        frame = linearization_table(branches)
    ctx.emit_table("figNew_linearization", frame)
    figures.plot_linearization(frame, ctx.figure("figNew_linearization"))
    return summary


FIGURES: Dict[str, Callable[[RunConfig, RunContext], Dict[str, Any]]] = {
    "fig1": _figure_fig1,
    "fig1a": _figure_fig1a,
    "fig2": _figure_fig2,
    "fig2a": _figure_fig2a,
    "figNew": _figure_figNew,
}


def run_reproduce_figure(config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    figure = config.run.figure
    if figure is None:
        raise InvalidParameters("reproduce_figure needs run.figure.", key="run.figure")
    _logger.info(f"Reproducing {figure}")
    return FIGURES[figure](config, ctx)


SCENARIOS: Dict[str, Callable[[RunConfig, RunContext], Dict[str, Any]]] = {
    "trace": run_trace,
    "pitchfork": run_pitchfork,
    "scaling": run_scaling,
    "localized": run_localized,
    "reproduce_figure": run_reproduce_figure,
    "audit": run_audit,
}


def execute(scenario: str, config: RunConfig, ctx: RunContext) -> Dict[str, Any]:
    """Run one scenario, recording its summary in the context."""
    if scenario not in SCENARIOS:
        raise InvalidParameters(
            f"Unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}.", key="run.scenario"
        )
    with ctx.stage(scenario):
        summary = SCENARIOS[scenario](config, ctx)
    ctx.summary = summary
    return summary
