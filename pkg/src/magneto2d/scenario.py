"""Scenario configuration: schema, (de)serialisation and task dispatch."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import (
    ConfigError,
    DomainError,
    HypothesisViolation,
    QuadratureError,
    SingularityError,
    UnboundedPotential,
)
from .fields import FieldKind, FieldModel, flux_primitive
from .integrator import (
    IntegratorOptions,
    PhaseState,
    Termination,
    integrate,
    write_trajectory_csv,
)
from .output import write_svg

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERICAL = 3


class TaskKind(str, enum.Enum):
    SIMULATE = "simulate"
    SCATTER = "scatter"
    CONFINE_CHECK = "confine_check"
    BOUND = "bound"
    FIGURE = "figure"


@dataclass
class Tolerances:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: float = 1e-10
    quad_abs_tol: float = 1e-12
    quad_rel_tol: float = 1e-10

    def integrator(self, sample_dt=None) -> IntegratorOptions:
        return IntegratorOptions(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                                 event_tol=self.event_tol, sample_dt=sample_dt)


@dataclass
class Domain:
    """Either a disc of ``disc_radius`` centred at 0 or a named boundary chart."""

    disc_radius: Optional[float] = 1.0
    chart: Optional[str] = None
    epsilon: float = 0.5

    def resolve(self):
        if self.chart is not None:
            from .tubular import named_chart

            return named_chart(self.chart, self.epsilon)
        return float(self.disc_radius)


@dataclass
class Initial:
    """Initial data in one of three forms.

    * Cartesian: ``q`` and ``v``.
    * Polar: ``r0``, ``theta0``, ``p_r`` and ``p_theta`` (radial fields).
    * Boundary entry: ``v_r``/``v_theta`` or ``H0``/``entry_angle`` at angle ``theta0``.
    """

    q: Optional[list] = None
    v: Optional[list] = None
    r0: Optional[float] = None
    theta0: float = 0.0
    p_r: Optional[float] = None
    p_theta: Optional[float] = None
    v_r: Optional[float] = None
    v_theta: Optional[float] = None
    H0: Optional[float] = None
    entry_angle: Optional[float] = None

    def entry_velocity(self) -> tuple[float, float]:
        if self.v_r is not None and self.v_theta is not None:
            return float(self.v_r), float(self.v_theta)
        if self.H0 is not None and self.entry_angle is not None:
            speed = math.sqrt(2.0 * self.H0)
            return speed * math.cos(self.entry_angle), speed * math.sin(self.entry_angle)
        raise ConfigError("boundary entry needs v_r/v_theta or H0/entry_angle")

    def is_entry(self) -> bool:
        return self.q is None and self.r0 is None

    def state(self, field_model: FieldModel) -> PhaseState:
        if self.q is not None:
            if self.v is None:
                raise ConfigError("initial.q needs initial.v")
            return PhaseState(tuple(self.q), tuple(self.v))
        c, s = math.cos(self.theta0), math.sin(self.theta0)
        if self.r0 is not None:
            if self.p_r is None or self.p_theta is None:
                raise ConfigError("polar initial data needs r0, p_r and p_theta")
            if field_model.kind is not FieldKind.RADIAL:
                raise ConfigError("polar initial data needs a radial field")
            r0 = float(self.r0)
            v_th = (self.p_theta - flux_primitive(field_model, r0)) / r0
            v_r = self.p_r
            return PhaseState((r0 * c, r0 * s), (v_r * c - v_th * s, v_r * s + v_th * c))
        v_r, v_th = self.entry_velocity()
        radius = field_model.domain_radius
        return PhaseState((radius * c, radius * s), (v_r * c - v_th * s, v_r * s + v_th * c))

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class Task:
    kind: TaskKind
    t_max: Optional[float] = None
    T: Optional[float] = None
    name: Optional[str] = None
    n_floor: float = 1e-8
    sample_dt: Optional[float] = None

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v is not None}
        out["kind"] = self.kind.value
        return out


@dataclass
class Scenario:
    name: str
    field: FieldModel
    initial: Initial
    task: Task
    domain: Domain = field(default_factory=Domain)
    tolerances: Tolerances = field(default_factory=Tolerances)
    sweep: Optional[dict] = None
    notes: str = ""

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "field": self.field.to_dict(),
            "domain": asdict(self.domain),
            "initial": self.initial.to_dict(),
            "task": self.task.to_dict(),
            "tolerances": asdict(self.tolerances),
        }
        if self.sweep is not None:
            out["sweep"] = self.sweep
        if self.notes:
            out["notes"] = self.notes
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            task = dict(data["task"])
            task["kind"] = TaskKind(task["kind"])
            return cls(
                name=data.get("name", "scenario"),
                field=FieldModel.from_dict(data["field"]),
                initial=_build(Initial, data.get("initial", {})),
                task=_build(Task, task),
                domain=_build(Domain, data.get("domain", {})),
                tolerances=_build(Tolerances, data.get("tolerances", {})),
                sweep=data.get("sweep"),
                notes=data.get("notes", ""),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario: {exc}") from None


def _build(cls, data):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__.lower()}: {sorted(unknown)}")
    return cls(**data)


def parse_scenario(text: str) -> Scenario:
    """Parse a JSON scenario; syntax errors carry line and column."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object", 1, 1)
    return Scenario.from_dict(data)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


# -- running ------------------------------------------------------------------

@dataclass
class RunReport:
    exit_code: int
    summary: dict
    files: list


def run(scenario: Scenario, out_dir) -> RunReport:
    """Run ``scenario`` and write its artifacts into ``out_dir``.

    Exit codes: 0 success, 2 hypothesis violation, 3 numerical failure.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list = []
    summary: dict = {"scenario": scenario.name, "task": scenario.task.kind.value}
    try:
        kind = scenario.task.kind
        if kind is TaskKind.FIGURE:
            from .presets import figure_preset

            preset = figure_preset(scenario.task.name or scenario.name)
            return run(preset, out_dir)
        handler = {
            TaskKind.SIMULATE: _run_simulate,
            TaskKind.SCATTER: _run_scatter,
            TaskKind.CONFINE_CHECK: _run_confine,
            TaskKind.BOUND: _run_bound,
        }[kind]
        code = handler(scenario, out, summary, files)
    except HypothesisViolation as exc:
        summary["error"] = f"hypothesis violation: {exc}"
        code = EXIT_HYPOTHESIS
    except (QuadratureError, SingularityError, UnboundedPotential, DomainError) as exc:
        summary["error"] = f"numerical failure: {exc}"
        code = EXIT_NUMERICAL
    summary["exit_code"] = code
    return RunReport(code, summary, files)


def _simulate(scenario: Scenario, t_max: float, state: Optional[PhaseState] = None):
    domain = scenario.domain.resolve()
    state = state or scenario.initial.state(scenario.field)
    opts = scenario.tolerances.integrator(scenario.task.sample_dt)
    chart = domain if scenario.field.kind is FieldKind.TUBULAR else None
    if chart is None and scenario.field.kind is FieldKind.TUBULAR:
        from .tubular import named_chart

        chart = named_chart(scenario.field.chart)
    return integrate(scenario.field, state, t_max, domain, opts, chart=chart)


def _write_trajectory(scenario, result, out, files, title):
    path = out / "trajectory.csv"
    write_trajectory_csv(result, path, scenario.field)
    files.append(path)
    svg = out / "plot.svg"
    write_svg(svg, result.q, scenario.domain.resolve(), title=title)
    files.append(svg)


def _integration_summary(result) -> dict:
    out = {
        "termination": result.termination.value,
        "t_final": float(result.t[-1]),
        "max_energy_drift": result.max_energy_drift,
        "steps": result.n_steps,
        "min_distance_to_boundary": None,
    }
    if result.hit is not None:
        out["t_exit"] = result.hit.t_exit
        out["q_exit"] = list(result.hit.q_exit)
        out["v_exit"] = list(result.hit.v_exit)
    if result.message:
        out["message"] = result.message
    return out


def _run_simulate(scenario, out, summary, files):
    t_max = scenario.task.t_max or 100.0
    result = _simulate(scenario, t_max)
    summary.update(_integration_summary(result))
    domain = scenario.domain.resolve()
    if isinstance(domain, float):
        summary["min_distance_to_boundary"] = float(domain - result.radius.max())
    _write_trajectory(scenario, result, out, files, scenario.name)
    return EXIT_NUMERICAL if result.termination is Termination.STEP_FAILURE else EXIT_OK


def _run_scatter(scenario, out, summary, files):
    from .radial import scattering, scattering_sweep, write_sweep_csv

    tol = scenario.tolerances
    v_r, v_th = scenario.initial.entry_velocity()
    res = scattering(scenario.field, v_r, v_th, scenario.initial.theta0,
                     tol.quad_abs_tol, tol.quad_rel_tol)
    report = res.to_dict()
    report.update({"preset": scenario.name, "tolerances": asdict(tol)})
    # independent check by direct integration
    traj = _simulate(scenario, scenario.task.t_max or max(50.0, 10 * res.escape_time))
    if traj.hit is not None:
        v1, v2 = res.v_entry, traj.hit.v_exit
        report["omega_ode"] = math.atan2(v1[0] * v2[1] - v1[1] * v2[0],
                                         v1[0] * v2[0] + v1[1] * v2[1])
        report["t_exit_ode"] = traj.hit.t_exit
    path = out / "scattering.json"
    path.write_text(json.dumps(report, indent=2))
    files.append(path)
    _write_trajectory(scenario, traj, out, files, scenario.name)
    summary.update({"omega": res.omega, "branch": res.branch.value,
                    "escape_time": res.escape_time})
    if scenario.sweep:
        rows = scattering_sweep(scenario.field, scenario.sweep["H0"], scenario.sweep["p_theta"])
        sweep_path = out / "sweep.csv"
        write_sweep_csv(rows, sweep_path)
        files.append(sweep_path)
    return EXIT_OK


def _run_confine(scenario, out, summary, files):
    from .radial import radial_confinement

    state = scenario.initial.state(scenario.field)
    cert = radial_confinement(scenario.field, state)
    t_max = scenario.task.T or scenario.task.t_max or 100.0
    traj = _simulate(scenario, t_max, state)
    cert.extra["simulated_max_radius"] = float(traj.radius.max())
    cert.extra["simulation"] = _integration_summary(traj)
    path = out / "certificate.json"
    path.write_text(cert.to_json(indent=2))
    files.append(path)
    _write_trajectory(scenario, traj, out, files, scenario.name)
    summary.update({"verdict": cert.verdict.value, "eta": cert.eta})
    return EXIT_OK


def _run_bound(scenario, out, summary, files):
    from .tubular import certify_lower_bound, named_chart

    domain = scenario.domain.resolve()
    chart = domain if not isinstance(domain, float) else named_chart(
        scenario.field.chart or "disc", scenario.domain.epsilon)
    state = scenario.initial.state(scenario.field)
    T = scenario.task.T or 1.0
    cert = certify_lower_bound(chart, scenario.field, state, T, n_floor=scenario.task.n_floor)
    try:
        traj = _simulate(scenario, T, state)
        ns = [chart.project(q)[0] for q in traj.q]
        cert.extra["simulated_min_n"] = float(min(ns))
        cert.extra["simulation"] = _integration_summary(traj)
        _write_trajectory(scenario, traj, out, files, scenario.name)
    except DomainError as exc:
        cert.extra["simulation_error"] = str(exc)
    path = out / "certificate.json"
    path.write_text(cert.to_json(indent=2))
    files.append(path)
    summary.update({"verdict": cert.verdict.value, "n_min": cert.n_min, "C_of_T": cert.C_of_T})
    return EXIT_OK
