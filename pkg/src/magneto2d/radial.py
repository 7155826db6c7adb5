"""Radial fields on the unit disc: reduced dynamics, confinement, scattering.

For ``b = B(|q|)`` the angular momentum ``p_theta = det(q, v) + G(r)`` is
conserved and the radial motion is governed by

    H(r, p_r) = p_r^2 / 2 + V(r),    V(r) = (p_theta - G(r))^2 / (2 r^2).

Everything here is written in terms of ``V``: turning points, escape and
transit times, the accumulated polar angle and the scattering angle of a
particle entering through the unit circle.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import integrate

from .errors import (
    DomainError,
    HypothesisViolation,
    QuadratureError,
    SingularityError,
    UnboundedPotential,
)
from .fields import FieldKind, FieldModel, RadialPrimitive, radial_primitive
from .integrator import PhaseState, energy
from .tubular import CertificateVerdict, ConfinementCertificate

__all__ = [
    "ReducedSystem",
    "effective_potential",
    "potential_slope",
    "TurningPoint",
    "turning_point",
    "entering_predicate",
    "deflection_alpha",
    "transit_time",
    "Branch",
    "ScatteringResult",
    "scattering",
    "scattering_sweep",
    "write_sweep_csv",
    "radial_confinement",
    "escape_construct",
    "reduce_angle",
]

TWO_PI = 2.0 * math.pi
CRITICAL_SLOPE = 1e-9


@dataclass(frozen=True)
class ReducedSystem:
    """One-degree-of-freedom radial system with fixed ``p_theta`` and energy."""

    field: FieldModel
    p_theta: float
    H0: float
    G: RadialPrimitive = None

    def __post_init__(self):
        if self.field.kind is not FieldKind.RADIAL:
            raise TypeError("the reduced system needs a radial field")
        if self.field.domain_radius != 1.0:
            raise ValueError("the radial machinery works on the unit disc")
        if self.H0 < 0:
            raise ValueError("energy must be non-negative")
        if self.G is None:
            object.__setattr__(self, "G", radial_primitive(self.field))

    @classmethod
    def from_state(cls, field: FieldModel, state: PhaseState, abs_tol: float = 1e-12,
                   rel_tol: float = 1e-10) -> "ReducedSystem":
        G = radial_primitive(field, abs_tol, rel_tol)
        (q1, q2), (v1, v2) = state.q, state.v
        return cls(field, q1 * v2 - q2 * v1 + G(state.radius), energy(state), G)

    @classmethod
    def from_entry(cls, field: FieldModel, v_r: float, v_theta: float, abs_tol: float = 1e-12,
                   rel_tol: float = 1e-10) -> "ReducedSystem":
        """System of a particle at ``r = 1`` with polar velocity ``(v_r, v_theta)``."""
        G = radial_primitive(field, abs_tol, rel_tol)
        return cls(field, v_theta + G(1.0), 0.5 * (v_r * v_r + v_theta * v_theta), G)

    def V(self, r: float) -> float:
        return effective_potential(self, r)

    def B(self, r: float) -> float:
        return self.field.profile(r)


def effective_potential(sys: ReducedSystem, r: float) -> float:
    """``V(r) = (p_theta - G(r))^2 / (2 r^2)``, continuously extended at 0 when possible."""
    if r > 0:
        g = (sys.p_theta - sys.G(r)) / r
        return 0.5 * g * g
    if r < 0:
        raise DomainError("V is defined for r >= 0")
    if sys.p_theta != 0.0:
        raise DomainError("V blows up at the origin when p_theta != 0")
    # p_theta = 0: V = (G(r)/r)^2 / 2 has a limit whenever G(r)/r does
    samples = [0.5 * (sys.G(h) / h) ** 2 for h in (1e-5, 1e-6, 1e-7, 1e-8)]
    if abs(samples[-1] - samples[-2]) > 1e-6 * max(1.0, abs(samples[-1])):
        raise DomainError("V has no numerically stable limit at the origin")
    return samples[-1]


def potential_slope(sys: ReducedSystem, r: float, side: int = 1) -> float:
    """``V'(r)``.

    Uses ``V' = -(p - G) B / r - (p - G)^2 / r^3`` when ``B(r)`` is finite;
    otherwise a one-sided second-order difference (step 1e-7, towards
    ``side``) with one Richardson extrapolation.
    """
    try:
        g = (sys.p_theta - sys.G(r)) / r
        return -g * sys.B(r) - g * g / r
    except DomainError:
        pass
    h = 1e-7 * side

    def one_sided(step):
        return (-3 * sys.V(r) + 4 * sys.V(r + step) - sys.V(r + 2 * step)) / (2 * step)

    return (4 * one_sided(h / 2) - one_sided(h)) / 3


class Branch(str, enum.Enum):
    TURNING_POINT = "turning_point"
    THROUGH_ORIGIN = "through_origin"
    TRAPPED_AT_CRITICAL_POINT = "trapped_at_critical_point"
    NO_ESCAPE = "no_escape"


@dataclass(frozen=True)
class TurningPoint:
    """Rightmost solution of ``V(r) = H0`` in ``(0, 1]``.

    ``branch`` is ``TURNING_POINT`` (usable, ``V'(r*) < 0``),
    ``TRAPPED_AT_CRITICAL_POINT`` (``|V'(r*)| <= 1e-9``) or
    ``THROUGH_ORIGIN`` (no solution and ``p_theta = 0``; ``r_star`` is None).
    """

    r_star: Optional[float]
    slope: Optional[float]
    branch: Branch


def turning_point(sys: ReducedSystem, grid: int = 4096, r_floor: float = 1e-6,
                  critical_slope: float = CRITICAL_SLOPE) -> TurningPoint:
    H0 = sys.H0
    tol = 1e-12 * max(1.0, H0)
    V1 = sys.V(1.0)
    if V1 > H0 + tol:
        raise HypothesisViolation(f"V(1) = {V1:.17g} exceeds the energy {H0:.17g}")
    tangent = abs(V1 - H0) <= tol
    if tangent:
        slope1 = potential_slope(sys, 1.0, side=-1)
        if abs(slope1) <= critical_slope:
            return TurningPoint(1.0, slope1, Branch.TRAPPED_AT_CRITICAL_POINT)
        if slope1 < 0:
            raise HypothesisViolation("tangential start with V'(1) < 0 does not enter the disc")

    rs = np.linspace(r_floor, 1.0, grid + 1)
    if tangent:
        rs = rs[:-1]
    lo_hi = _rightmost_crossing(sys, rs)
    floor = r_floor
    while lo_hi is None and sys.p_theta != 0.0 and floor > 1e-300:
        # V -> infinity at 0 when p_theta != 0, so a root lies further in
        rs = np.geomspace(floor * 1e-3, floor, 64)
        floor *= 1e-3
        lo_hi = _rightmost_crossing(sys, rs)
    if lo_hi is None:
        # p_theta == 0, or so small that r* underflows; both limits give the
        # same exit point and velocity
        return TurningPoint(None, None, Branch.THROUGH_ORIGIN)

    lo, hi = lo_hi
    r_star = _bisect_level(sys, lo, hi)
    slope = potential_slope(sys, r_star, side=1)
    if slope < -critical_slope:
        return TurningPoint(r_star, slope, Branch.TURNING_POINT)
    return TurningPoint(r_star, slope, Branch.TRAPPED_AT_CRITICAL_POINT)


def _rightmost_crossing(sys, rs):
    """Last grid cell where ``V - H0`` passes from positive to non-positive."""
    rs = np.asarray(rs, dtype=float)
    try:
        G = sys.G.on_grid(rs) if rs[0] > 0 else None
    except (DomainError, QuadratureError):
        G = None
    if G is not None:
        g = (sys.p_theta - G) / rs
        vals = 0.5 * g * g - sys.H0
    else:
        vals = []
        for r in rs:
            try:
                vals.append(sys.V(float(r)) - sys.H0)
            except DomainError:
                vals.append(math.nan)
        vals = np.array(vals)
    idx = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
    if len(idx) == 0:
        return None
    k = int(idx[-1])
    return float(rs[k]), float(rs[k + 1])


def _bisect_level(sys, lo, hi):
    """Bisect ``V = H0`` on ``[lo, hi]`` with ``V(lo) > H0 >= V(hi)``; returns the allowed end."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if sys.V(mid) > sys.H0:
            lo = mid
        else:
            hi = mid


def entering_predicate(v_r0: float, v_th0: float, B1: float) -> bool:
    """Whether a particle on the unit circle moves into the disc.

    True iff ``v_r < 0``, or ``v_r = 0`` and ``B(1) / v_theta < -1``.
    """
    if v_r0 < 0:
        return True
    if v_r0 == 0 and v_th0 != 0:
        return B1 / v_th0 < -1.0
    return False


def _boundary_field(sys: ReducedSystem) -> float:
    try:
        return sys.B(1.0)
    except DomainError:
        # one-sided limit for fields whose closed form is singular exactly at 1
        return sys.B(1.0 - 1e-12)


@dataclass(frozen=True)
class _Singular:
    """Integrand pieces after the substitution ``r = r* + u^2``."""

    sys: ReducedSystem
    r_star: float

    def __post_init__(self):
        G_star = self.sys.G(self.r_star)
        w_star = self.sys.p_theta - G_star
        if w_star == 0.0:
            raise SingularityError("zero energy turning point")
        object.__setattr__(self, "w_star", w_star)
        object.__setattr__(self, "sigma", math.copysign(1.0, w_star))
        object.__setattr__(self, "c", math.sqrt(2.0 * self.sys.H0))

    def pieces(self, u):
        # 2 H0 r^2 - (p - G)^2 = D E with D vanishing at r*; D is built from
        # G increments so it keeps relative accuracy as u -> 0
        x = u * u
        r = self.r_star + x
        dG = self.sys.G.increment(self.r_star, r)
        w = self.w_star - dG
        D = self.c * x + self.sigma * dG
        E = self.c * r + self.sigma * w
        # product of roots: D * E underflows when r* is tiny
        return r, w, math.sqrt(D) * math.sqrt(E)

    def breakpoints(self, upper):
        # near-head-on orbits turn on the scale r*, far below the interval length
        pts, x = [], self.r_star
        while x < 1.0:
            u = math.sqrt(x)
            if u < upper:
                pts.append(u)
            x *= 10.0
        return pts[:60]


def _quad_u(fn, upper, what, points=None):
    value, err, info = integrate.quad(fn, 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=400,
                                      full_output=1, points=points or None)[:3]
    if not math.isfinite(value) or err > 1e-10:
        raise QuadratureError(f"{what} did not converge", value, err)
    return value


def _through_origin_integral(sys, kernel, what):
    c = math.sqrt(2.0 * sys.H0)

    def integrand(r):
        g = sys.G(r) / r
        return kernel(r, g) / (r * math.sqrt(c * c - g * g))

    value, err, info = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12,
                                      limit=400, full_output=1)[:3]
    if not math.isfinite(value) or err > 1e-10:
        raise QuadratureError(f"{what} did not converge", value, err)
    return value


def _check_usable(sys, r_star_or_origin):
    if r_star_or_origin is None or isinstance(r_star_or_origin, TurningPoint):
        tp = r_star_or_origin or turning_point(sys)
    else:
        r = float(r_star_or_origin)
        tp = TurningPoint(r, potential_slope(sys, r), Branch.TURNING_POINT)
    if tp.branch is Branch.THROUGH_ORIGIN:
        return tp
    if tp.slope is None or tp.slope >= 0 or tp.branch is not Branch.TURNING_POINT:
        raise SingularityError(f"V'(r*) = {tp.slope} is not negative; the integral diverges")
    return tp


def deflection_alpha(sys: ReducedSystem, r_star_or_origin=None) -> float:
    """Angle swept between entry and exit.

    ``2 int_{r*}^1 (p - G) / (r sqrt(2 H0 r^2 - (p - G)^2)) dr`` for a turning
    point, or ``2 int_0^1 -G / (r sqrt(2 H0 r^2 - G^2)) dr`` through the origin.
    ``r_star_or_origin`` is a :class:`TurningPoint`, a radius, or None (found
    with :func:`turning_point`).
    """
    tp = _check_usable(sys, r_star_or_origin)
    if tp.branch is Branch.THROUGH_ORIGIN:
        # -G / (r sqrt(c^2 r^2 - G^2)) = -(G/r) / (r sqrt(c^2 - (G/r)^2))
        return 2.0 * _through_origin_integral(sys, lambda r, g: -g, "deflection integral")
    if tp.r_star >= 1.0:
        return 0.0
    sing = _Singular(sys, tp.r_star)

    def integrand(u):
        if u == 0.0:
            u = 1e-300
        r, w, root = sing.pieces(u)
        return 2.0 * u * (w / r) / root

    upper = math.sqrt(1.0 - tp.r_star)
    return 2.0 * _quad_u(integrand, upper, "deflection integral", sing.breakpoints(upper))


def transit_time(sys: ReducedSystem, r_star_or_origin=None) -> float:
    """Half transit time ``t* = int dr / sqrt(2 (H0 - V))`` from ``r*`` (or 0) to 1."""
    tp = _check_usable(sys, r_star_or_origin)
    if tp.branch is Branch.THROUGH_ORIGIN:
        # r / sqrt(c^2 r^2 - G^2) = r * (1 / (r sqrt(c^2 - (G/r)^2)))
        return _through_origin_integral(sys, lambda r, g: r, "transit time")
    if tp.r_star >= 1.0:
        return 0.0
    sing = _Singular(sys, tp.r_star)

    def integrand(u):
        if u == 0.0:
            u = 1e-300
        r, w, root = sing.pieces(u)
        return 2.0 * u * r / root

    upper = math.sqrt(1.0 - tp.r_star)
    return _quad_u(integrand, upper, "transit time", sing.breakpoints(upper))


def reduce_angle(angle: float) -> float:
    """Representative of ``angle`` modulo 2 pi in ``(-pi, pi]``."""
    w = math.remainder(angle, TWO_PI)
    return math.pi if w <= -math.pi else w


@dataclass(frozen=True)
class ScatteringResult:
    """Scattering of a particle entering the unit disc.

    ``omega`` is the oriented angle from the entry velocity to the exit
    velocity in ``(-pi, pi]``; ``omega_unreduced`` keeps the accumulated value.
    """

    r_star: Optional[float]
    t_star: float
    alpha: float
    gamma_angle: float
    omega: float
    omega_unreduced: float
    branch: Branch
    p_theta: float
    H0: float
    theta_entry: float
    theta_exit: float
    v_entry: tuple[float, float]
    v_exit: tuple[float, float]

    @property
    def escape_time(self) -> float:
        return 2.0 * self.t_star

    def to_dict(self) -> dict:
        out = asdict(self)
        out["branch"] = self.branch.value
        out["escape_time"] = self.escape_time
        out["through_origin"] = self.branch is Branch.THROUGH_ORIGIN
        return out


def _polar_to_cartesian(theta, v_r, v_th):
    c, s = math.cos(theta), math.sin(theta)
    return (v_r * c - v_th * s, v_r * s + v_th * c)


def scattering(field: FieldModel, v_r: float, v_theta: float, theta_entry: float = 0.0,
               abs_tol: float = 1e-12, rel_tol: float = 1e-10) -> ScatteringResult:
    """Scattering angle of a particle entering at ``e^{i theta_entry}``.

    Raises :class:`HypothesisViolation` if the particle does not enter, if
    ``V(r) = H0`` has a degenerate rightmost root (the orbit only approaches
    it asymptotically) or if the start is a fixed point on the circle.
    """
    sys = ReducedSystem.from_entry(field, v_r, v_theta, abs_tol, rel_tol)
    if (v_r, v_theta) == (0.0, 0.0):
        raise HypothesisViolation("the entry velocity must be non-zero")
    B1 = _boundary_field(sys)
    if not entering_predicate(v_r, v_theta, B1):
        if v_r == 0.0 and abs(B1 / v_theta + 1.0) <= 1e-12:
            exc = HypothesisViolation("the boundary circle itself is the orbit")
            exc.branch = Branch.TRAPPED_AT_CRITICAL_POINT
            raise exc
        raise HypothesisViolation("the particle does not enter the disc")
    tp = turning_point(sys)
    if tp.branch is Branch.TRAPPED_AT_CRITICAL_POINT:
        exc = HypothesisViolation(
            f"rightmost root r* = {tp.r_star:.12g} is a critical point of V "
            f"(V'(r*) = {tp.slope:.3e}); the particle never escapes in finite time"
        )
        exc.branch = tp.branch
        raise exc
    gamma = math.atan2(v_theta, v_r) % TWO_PI
    alpha = deflection_alpha(sys, tp)
    t_star = transit_time(sys, tp)
    if tp.branch is Branch.THROUGH_ORIGIN:
        raw = alpha - 2.0 * gamma
        theta_exit = theta_entry + alpha + math.pi
    else:
        raw = alpha + math.pi - 2.0 * gamma
        theta_exit = theta_entry + alpha
    return ScatteringResult(
        r_star=tp.r_star,
        t_star=t_star,
        alpha=alpha,
        gamma_angle=gamma,
        omega=reduce_angle(raw),
        omega_unreduced=raw,
        branch=tp.branch,
        p_theta=sys.p_theta,
        H0=sys.H0,
        theta_entry=theta_entry,
        theta_exit=theta_exit,
        v_entry=_polar_to_cartesian(theta_entry, v_r, v_theta),
        v_exit=_polar_to_cartesian(theta_exit, -v_r, v_theta),
    )


def scattering_sweep(field: FieldModel, H0: float, p_thetas: Iterable[float]):
    """Scatter at fixed energy for several angular momenta.

    Entries that violate the hypotheses are skipped and reported with NaN
    angles so the sweep table stays rectangular.
    """
    G1 = radial_primitive(field)(1.0)
    speed = math.sqrt(2.0 * H0)
    rows = []
    for p in p_thetas:
        v_th = p - G1
        if abs(v_th) > speed:
            rows.append({"ptheta": p, "H0": H0, "r_star": math.nan, "t_star": math.nan,
                         "alpha": math.nan, "gamma": math.nan, "omega": math.nan})
            continue
        v_r = -math.sqrt(max(speed * speed - v_th * v_th, 0.0))
        try:
            res = scattering(field, v_r, v_th)
        except (HypothesisViolation, SingularityError, QuadratureError):
            rows.append({"ptheta": p, "H0": H0, "r_star": math.nan, "t_star": math.nan,
                         "alpha": math.nan, "gamma": math.nan, "omega": math.nan})
            continue
        rows.append({"ptheta": p, "H0": H0,
                     "r_star": res.r_star if res.r_star is not None else math.nan,
                     "t_star": res.t_star, "alpha": res.alpha, "gamma": res.gamma_angle,
                     "omega": res.omega})
    return rows


def write_sweep_csv(rows, path) -> None:
    cols = ["ptheta", "H0", "r_star", "t_star", "alpha", "gamma", "omega"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([f"{row[c]:.17g}" for c in cols])


def _dyadic(kmax=40):
    return [1.0 - 2.0 ** -k for k in range(1, kmax + 1)]


def radial_confinement(field: FieldModel, init: PhaseState, kmax: int = 40,
                       grid: int = 4096) -> ConfinementCertificate:
    """Sufficient conditions for a radial orbit to stay away from the unit circle.

    Evaluates ``V`` on ``r_k = 1 - 2^-k`` (k <= ``kmax``).  The limits at
    ``r -> 1`` are replaced by the tail ``k > kmax / 2`` of that grid:

    * H1: the tail minimum of ``V`` exceeds ``H0``;
    * H2: the tail minimum equals ``H0`` (relative 1e-9) and every tail
      quotient ``(V - H0) / (r - 1)`` is negative.

    On success the verdict is ``bound`` with ``eta`` the largest root of
    ``V = H0`` (so ``|q(t)| <= eta``).
    """
    sys = ReducedSystem.from_state(field, init)
    H0 = sys.H0
    r0 = init.radius
    trace = []
    for k, r in enumerate(_dyadic(kmax), start=1):
        try:
            trace.append((k, r, sys.V(r)))
        except (DomainError, QuadratureError):
            continue
    tail = [(k, r, v) for k, r, v in trace if k > kmax // 2]
    speed = math.sqrt(2.0 * H0)
    extra = {
        "p_theta": sys.p_theta,
        "H0": H0,
        "V_trace": [[r, v] for _, r, v in trace],
        "flux_criterion": [[r, abs(sys.G(r) - sys.p_theta), speed] for _, r, _ in tail],
    }
    cert = ConfinementCertificate(verdict=CertificateVerdict.INCONCLUSIVE,
                                  hypothesis="none", extra=extra)
    if not tail:
        return cert
    liminf = min(v for _, _, v in tail)
    extra["liminf_V"] = liminf
    tol = 1e-9 * max(1.0, H0)
    if liminf > H0 + tol:
        cert.hypothesis = "H1: liminf V > H0"
    elif abs(liminf - H0) <= tol and max((v - H0) / (r - 1.0) for _, r, v in tail) < 0:
        cert.hypothesis = "H2: liminf V = H0 with negative one-sided slope"
    else:
        return cert

    rs = sorted(set(np.linspace(r0, 1.0, grid + 1)[:-1].tolist() + [r for _, r, _ in trace
                                                                   if r > r0]))
    vals = []
    for r in rs:
        try:
            vals.append(sys.V(r) if r > 0 else effective_potential(sys, 0.0))
        except DomainError:
            vals.append(math.inf)
    vals = np.array(vals) - H0
    allowed = np.nonzero(vals <= 0)[0]
    if len(allowed) == 0:
        eta = r0
    else:
        k = int(allowed[-1])
        if k == len(rs) - 1:
            return cert
        eta = _bisect_up(sys, rs[k], rs[k + 1])
    cert.verdict = CertificateVerdict.BOUND
    cert.eta = eta
    return cert


def _bisect_up(sys, lo, hi):
    """Bisect with ``V(lo) <= H0 < V(hi)``; returns the forbidden end (an upper bound)."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if sys.V(mid) <= sys.H0:
            lo = mid
        else:
            hi = mid


def escape_construct(field: FieldModel, r0: float, v: float, grid: int = 4096,
                     threshold: float = 1e12):
    """Initial data that provably leaves the disc before ``(1 - r0) / v``.

    With ``p_theta = 0`` and ``p_r(0) = sqrt(2 (sup V - V(r0)) + v^2)`` the
    radial velocity never drops below ``v``.  ``sup V`` is taken over a linear
    grid plus dyadic points towards 1; it only makes sense when the enclosed
    flux stays bounded, which is checked on the same grid (evidence, not proof).

    Returns ``(init, t_bound, info)``.
    """
    if not 0.0 < r0 < 1.0 or v <= 0:
        raise ValueError("need 0 < r0 < 1 and v > 0")
    sys = ReducedSystem(field, 0.0, 0.0)
    rs = sorted(set(np.linspace(0.0, 1.0, grid + 1)[1:].tolist() + _dyadic(48)))
    Vmax, Gmax = 0.0, 0.0
    for r in rs:
        try:
            g = sys.G(r)
        except (DomainError, QuadratureError):
            continue
        Gmax = max(Gmax, abs(g))
        Vmax = max(Vmax, 0.5 * g * g / (r * r))
    if not math.isfinite(Vmax) or Vmax > threshold:
        raise UnboundedPotential(f"sup V on the grid is {Vmax:.3e}")
    # a bounded flux settles along r_k = 1 - 2^-k; logarithmic growth does not
    tail = [sys.G(r) for r in _dyadic(48)[-2:]]
    if abs(tail[1] - tail[0]) > 1e-6 * max(1.0, abs(tail[1])):
        raise UnboundedPotential(f"enclosed flux still grows by {tail[1] - tail[0]:.3e} "
                                 "per dyadic step at r = 1 - 2^-48")
    G0 = sys.G(r0)
    V0 = 0.5 * G0 * G0 / (r0 * r0)
    p_r = math.sqrt(2.0 * (Vmax - V0) + v * v)
    init = PhaseState((r0, 0.0), (p_r, -G0 / r0))
    info = {"V_sup": Vmax, "G_sup": Gmax, "p_r0": p_r, "grid_points": len(rs)}
    return init, (1.0 - r0) / v, info
