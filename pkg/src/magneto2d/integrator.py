"""Newton-form integration of the planar Lorentz dynamics.

The state is ``(q1, q2, v1, v2)`` with ``dq/dt = v`` and
``dv/dt = b(q) (v2, -v1)``.  Working with the velocity instead of the
canonical momentum means no vector potential is ever needed.

Stepping uses scipy's DOP853 embedded pair (one step at a time) so that the
boundary-crossing search, the step floor and the sample bookkeeping stay
under our control.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np
from scipy.integrate import DOP853

from .errors import DomainError, QuadratureError
from .fields import FieldKind, FieldModel, cartesian_evaluator, flux_primitive

__all__ = [
    "PhaseState",
    "Termination",
    "BoundaryHit",
    "IntegratorOptions",
    "IntegrationResult",
    "step_rhs",
    "integrate",
    "energy",
    "angular_momentum",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class PhaseState:
    q: tuple[float, float]
    v: tuple[float, float]
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", (float(self.q[0]), float(self.q[1])))
        object.__setattr__(self, "v", (float(self.v[0]), float(self.v[1])))
        if self.t < 0:
            raise ValueError("time must be non-negative")

    @property
    def energy(self) -> float:
        return energy(self)

    @property
    def radius(self) -> float:
        return math.hypot(*self.q)


class Termination(str, enum.Enum):
    TIME_LIMIT = "time_limit"
    BOUNDARY_HIT = "boundary_hit"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class BoundaryHit:
    t_exit: float
    q_exit: tuple[float, float]
    v_exit: tuple[float, float]


@dataclass(frozen=True)
class IntegratorOptions:
    """Tolerances for :func:`integrate`.

    ``min_step_factor * t_max`` is the step floor below which integration
    stops with :attr:`Termination.STEP_FAILURE`.  ``sample_dt`` adds
    equispaced dense-output samples to the accepted step points.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: float = 1e-10
    min_step_factor: float = 1e-14
    max_steps: int = 5_000_000
    first_step: Optional[float] = None
    max_step: float = math.inf
    sample_dt: Optional[float] = None


@dataclass
class IntegrationResult:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    termination: Termination
    hit: Optional[BoundaryHit] = None
    max_energy_drift: float = 0.0
    message: str = ""
    n_steps: int = 0
    h0: float = field(init=False)

    def __post_init__(self):
        self.h0 = float(0.5 * (self.v[0] @ self.v[0]))

    def __len__(self):
        return len(self.t)

    @property
    def samples(self) -> list[PhaseState]:
        return list(self.states())

    def states(self) -> Iterator[PhaseState]:
        for t, q, v in zip(self.t, self.q, self.v):
            yield PhaseState(tuple(q), tuple(v), float(t))

    @property
    def radius(self) -> np.ndarray:
        return np.hypot(self.q[:, 0], self.q[:, 1])

    @property
    def energies(self) -> np.ndarray:
        return 0.5 * np.einsum("ij,ij->i", self.v, self.v)


def energy(state: PhaseState) -> float:
    """Kinetic energy ``|v|^2 / 2``."""
    v1, v2 = state.v
    return 0.5 * (v1 * v1 + v2 * v2)


def angular_momentum(field: FieldModel, state: PhaseState) -> float:
    """Conserved ``p_theta = det(q, v) + G(|q|)`` of a radial field."""
    if field.kind is not FieldKind.RADIAL:
        raise TypeError("angular momentum is conserved only for radial fields")
    (q1, q2), (v1, v2) = state.q, state.v
    return q1 * v2 - q2 * v1 + flux_primitive(field, math.hypot(q1, q2))


def step_rhs(field: FieldModel, state: PhaseState, chart=None):
    """Right-hand side ``(dq, dv)`` of the Newton-form equations."""
    b = cartesian_evaluator(field, chart)(*state.q)
    v1, v2 = state.v
    return (v1, v2), (b * v2, -b * v1)


def _distance_function(domain):
    """Signed distance to the boundary, negative inside."""
    if domain is None:
        return None
    if isinstance(domain, (int, float)):
        radius = float(domain)
        return lambda q1, q2: math.hypot(q1, q2) - radius
    return lambda q1, q2: domain.signed_distance((q1, q2))


def integrate(field: FieldModel, init: PhaseState, t_max: float,
              domain: Union[float, object, None] = 1.0,
              opts: IntegratorOptions = IntegratorOptions(),
              chart=None) -> IntegrationResult:
    """Integrate from ``init`` up to ``init.t + t_max`` or the first boundary exit.

    ``domain`` is a disc radius, a :class:`~magneto2d.tubular.BoundaryChart`
    (the distance is then measured along the chart's normal) or ``None`` for
    the whole plane.  A start on the boundary is allowed; only a crossing
    from inside to outside counts as an exit.  Trial stages that land where
    ``b`` is undefined are rejected and the step is shrunk.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    bfun = cartesian_evaluator(field, chart if chart is not None else
                               (domain if field.kind is FieldKind.TUBULAR else None))
    dist = _distance_function(domain)
    nan4 = np.full(4, np.nan)

    def rhs(_t, y):
        try:
            b = bfun(y[0], y[1])
        except DomainError:
            return nan4
        return np.array([y[2], y[3], b * y[3], -b * y[2]])

    y0 = np.array([*init.q, *init.v], dtype=float)
    bfun(*init.q)  # surface DomainError for an invalid start
    d0 = dist(*init.q) if dist else -1.0
    if d0 > opts.event_tol:
        raise ValueError("initial point lies outside the domain")

    t0, t_end = init.t, init.t + t_max
    floor = opts.min_step_factor * t_max
    kwargs = {}
    if opts.first_step is not None:
        kwargs["first_step"] = opts.first_step
    solver = DOP853(rhs, t0, y0, t_end, rtol=opts.rel_tol, atol=opts.abs_tol,
                    max_step=opts.max_step, **kwargs)

    h0 = 0.5 * (y0[2] ** 2 + y0[3] ** 2)
    scale = h0 if h0 > 0 else 1.0
    ts, ys = [t0], [y0.copy()]
    termination, hit, message = Termination.TIME_LIMIT, None, ""
    d_old = d0
    steps = 0

    while solver.status == "running":
        t_old, y_old = solver.t, solver.y.copy()
        msg = solver.step()
        steps += 1
        if solver.status == "failed":
            termination, message = Termination.STEP_FAILURE, str(msg)
            break
        h = solver.t - t_old
        if dist is not None:
            d_new = dist(solver.y[0], solver.y[1])
            if d_new >= 0.0 and (d_old < 0.0 or (d_old <= 0.0 and d_new > 0.0)):
                dense = solver.dense_output()
                t_hit = _locate_crossing(dense, dist, t_old, solver.t, d_old, d_new,
                                         opts.event_tol)
                y_hit = dense(t_hit)
                _sample_between(opts.sample_dt, dense, t0, t_old, t_hit, ts, ys)
                ts.append(t_hit)
                ys.append(y_hit)
                hit = BoundaryHit(float(t_hit), (float(y_hit[0]), float(y_hit[1])),
                                  (float(y_hit[2]), float(y_hit[3])))
                termination = Termination.BOUNDARY_HIT
                break
            d_old = d_new
        if opts.sample_dt:
            _sample_between(opts.sample_dt, solver.dense_output(), t0, t_old, solver.t, ts, ys)
        ts.append(solver.t)
        ys.append(solver.y.copy())
        if h < floor and solver.t < t_end:
            termination = Termination.STEP_FAILURE
            message = f"step {h:.3e} fell below the floor {floor:.3e} at t={solver.t:.17g}"
            break
        if steps >= opts.max_steps:
            termination, message = Termination.STEP_FAILURE, "maximum number of steps reached"
            break

    t_arr = np.asarray(ts)
    y_arr = np.asarray(ys)
    energies = 0.5 * (y_arr[:, 2] ** 2 + y_arr[:, 3] ** 2)
    drift = float(np.max(np.abs(energies - h0)) / scale)
    return IntegrationResult(t_arr, y_arr[:, :2].copy(), y_arr[:, 2:].copy(), termination,
                             hit, drift, message, steps)


def _sample_between(dt, dense, t0, t_a, t_b, ts, ys):
    """Append dense-output samples on the grid ``t0 + k dt`` inside ``(t_a, t_b)``."""
    if not dt:
        return
    k = math.floor((t_a - t0) / dt) + 1
    while True:
        t = t0 + k * dt
        if t >= t_b:
            break
        if t > t_a:
            ts.append(t)
            ys.append(dense(t))
        k += 1


def _locate_crossing(dense, dist, t_a, t_b, d_a, d_b, tol):
    """Bisect the dense output for the first zero of the signed distance."""
    if d_a >= 0.0:
        return t_a
    for _ in range(200):
        t_m = 0.5 * (t_a + t_b)
        if t_m <= t_a or t_m >= t_b:
            break
        y = dense(t_m)
        d_m = dist(y[0], y[1])
        if d_m < 0.0:
            t_a, d_a = t_m, d_m
        else:
            t_b, d_b = t_m, d_m
        if d_b - d_a < 1e-3 * tol:
            break
    return t_b if abs(d_b) <= abs(d_a) else t_a


def write_trajectory_csv(result: IntegrationResult, path, field: Optional[FieldModel] = None):
    """Write ``t,q1,q2,v1,v2,energy,ptheta`` rows with 17 significant digits.

    ``ptheta`` is left blank unless ``field`` is radial.
    """
    radial = field is not None and field.kind is FieldKind.RADIAL
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "q1", "q2", "v1", "v2", "energy", "ptheta"])
        for t, q, v in zip(result.t, result.q, result.v):
            e = 0.5 * (v[0] ** 2 + v[1] ** 2)
            if radial:
                try:
                    pth = f"{angular_momentum(field, PhaseState(q, v, t)):.17g}"
                except (DomainError, QuadratureError):
                    pth = ""
            else:
                pth = ""
            writer.writerow([f"{t:.17g}", f"{q[0]:.17g}", f"{q[1]:.17g}", f"{v[0]:.17g}",
                             f"{v[1]:.17g}", f"{e:.17g}", pth])
