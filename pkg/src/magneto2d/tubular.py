"""Tubular coordinates near a boundary curve and collar confinement bounds.

A closed curve is reparametrized by arc length ``s``; a point of the collar
is written ``q = gamma(s) + n N(s)`` with ``N`` the inward normal and
``0 < n < delta``.  The field seen in these coordinates is the trace
``B(n, s) = -b(q) (1 - n kappa(s))``.

The collar bound works with

    f(n) = -(1/L) int_n^delta int_0^L B(eta, xi) dxi deta

and a horizon-dependent constant ``C(T)``: while a trajectory of energy
``H0`` stays in the collar up to time ``T`` it satisfies ``|f(n(t))| <= C(T)``,
hence ``n(t)`` stays above the level where a decreasing minorant ``g`` of
``|f|`` crosses ``C(T)``.
"""
from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DegenerateMetric, GeometryError, OutOfCollar, QuadratureError
from .fields import FieldKind, FieldModel, cartesian_evaluator, mean_and_oscillation
from .integrator import PhaseState

__all__ = [
    "ParametricCurve",
    "circle_curve",
    "ellipse_curve",
    "BoundaryChart",
    "build_chart",
    "named_chart",
    "psi",
    "inverse_psi",
    "field_trace",
    "collar_trace",
    "f_of_n",
    "proof_gauge",
    "CollarState",
    "collar_state",
    "C_of_T",
    "CertificateVerdict",
    "ConfinementCertificate",
    "certify_lower_bound",
    "hamiltonian_tubular",
    "tubular_velocity",
]

TWO_PI = 2.0 * math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class ParametricCurve:
    """Closed curve ``u -> c(u)`` with period ``period``.

    ``d1`` and ``d2`` are the first and second derivatives; when omitted they
    are replaced by centred finite differences.  ``exact_inverse`` may map a
    point to ``(n, s)`` in closed form (used for circles).
    """

    point: Callable[[float], tuple[float, float]]
    d1: Optional[Callable[[float], tuple[float, float]]] = None
    d2: Optional[Callable[[float], tuple[float, float]]] = None
    period: float = TWO_PI
    name: str = "curve"
    exact_inverse: Optional[Callable] = None


def circle_curve(radius: float = 1.0, center=(0.0, 0.0)) -> ParametricCurve:
    cx, cy = center
    R = float(radius)

    def inverse(q):
        dx, dy = q[0] - cx, q[1] - cy
        return R - math.hypot(dx, dy), (R * math.atan2(dy, dx)) % (TWO_PI * R)

    return ParametricCurve(
        point=lambda u: (cx + R * math.cos(u), cy + R * math.sin(u)),
        d1=lambda u: (-R * math.sin(u), R * math.cos(u)),
        d2=lambda u: (-R * math.cos(u), -R * math.sin(u)),
        name=f"circle(R={R:g})",
        exact_inverse=inverse,
    )


def ellipse_curve(a: float, b: float) -> ParametricCurve:
    return ParametricCurve(
        point=lambda u: (a * math.cos(u), b * math.sin(u)),
        d1=lambda u: (-a * math.sin(u), b * math.cos(u)),
        d2=lambda u: (-a * math.cos(u), -b * math.sin(u)),
        name=f"ellipse(a={a:g}, b={b:g})",
    )


def _fd(fn, h):
    def deriv(u):
        p, m = fn(u + h), fn(u - h)
        return ((p[0] - m[0]) / (2 * h), (p[1] - m[1]) / (2 * h))

    return deriv


@dataclass(frozen=True, eq=False)
class BoundaryChart:
    """Arc-length chart of one boundary component with its collar width.

    Build it with :func:`build_chart`; the constructor only stores the
    precomputed tables.
    """

    curve: ParametricCurve
    epsilon: float
    length: float
    K: float
    Kp: float
    delta: float
    _u_nodes: np.ndarray = field(repr=False)
    _s_nodes: np.ndarray = field(repr=False)
    _coarse_u: np.ndarray = field(repr=False)
    _coarse_xy: np.ndarray = field(repr=False)
    _d1: Callable = field(repr=False)
    _d2: Callable = field(repr=False)
    _reversed: bool = field(default=False, repr=False)

    # -- parameter <-> arc length -------------------------------------------
    def _speed(self, u):
        dx, dy = self._d1(u)
        return math.hypot(dx, dy)

    def _arc(self, u: float) -> float:
        """Arc length from ``u = 0`` to ``u`` (``u`` in one period)."""
        P = self.curve.period
        turns, u = divmod(u, P)
        k = min(int(np.searchsorted(self._u_nodes, u, side="right")) - 1,
                len(self._u_nodes) - 2)
        a = self._u_nodes[k]
        half, mid = 0.5 * (u - a), 0.5 * (u + a)
        partial = half * sum(w * self._speed(mid + half * x) for x, w in zip(_GL_X, _GL_W))
        return turns * self.length + self._s_nodes[k] + partial

    def _param(self, s: float) -> float:
        """Curve parameter ``u`` at arc length ``s``."""
        s = s % self.length
        k = min(int(np.searchsorted(self._s_nodes, s, side="right")) - 1,
                len(self._s_nodes) - 2)
        lo, hi = self._u_nodes[k], self._u_nodes[k + 1]
        u = lo + (hi - lo) * (s - self._s_nodes[k]) / (self._s_nodes[k + 1] - self._s_nodes[k])
        for _ in range(60):
            step = (self._arc(u) - s) / self._speed(u)
            u -= step
            if abs(step) < 1e-15 * (1.0 + abs(u)):
                break
        return u

    # -- geometry at arc length s --------------------------------------------
    def gamma(self, s: float) -> tuple[float, float]:
        return self.curve.point(self._param(s))

    def tangent(self, s: float) -> tuple[float, float]:
        dx, dy = self._d1(self._param(s))
        sp = math.hypot(dx, dy)
        return dx / sp, dy / sp

    def normal(self, s: float) -> tuple[float, float]:
        """Inward unit normal (the tangent rotated by +90 degrees)."""
        tx, ty = self.tangent(s)
        return -ty, tx

    def kappa(self, s: float) -> float:
        return self._kappa_u(self._param(s))

    def _kappa_u(self, u: float) -> float:
        dx, dy = self._d1(u)
        ex, ey = self._d2(u)
        return (dx * ey - dy * ex) / math.hypot(dx, dy) ** 3

    def frame(self, s: float):
        """``(gamma, tangent, normal, kappa)`` at ``s`` with one parameter solve."""
        u = self._param(s)
        x, y = self.curve.point(u)
        dx, dy = self._d1(u)
        sp = math.hypot(dx, dy)
        tx, ty = dx / sp, dy / sp
        return (x, y), (tx, ty), (-ty, tx), self._kappa_u(u)

    # -- tubular map ------------------------------------------------------------
    def psi(self, n: float, s: float) -> tuple[float, float]:
        (x, y), _, (nx, ny), _ = self.frame(s)
        return x + n * nx, y + n * ny

    def project(self, q) -> tuple[float, float]:
        """Nearest-boundary-point coordinates ``(n, s)`` of ``q`` without collar checks."""
        if self.curve.exact_inverse is not None and not self._reversed:
            return self.curve.exact_inverse(q)
        qx, qy = float(q[0]), float(q[1])
        d2 = (self._coarse_xy[:, 0] - qx) ** 2 + (self._coarse_xy[:, 1] - qy) ** 2
        u = float(self._coarse_u[int(np.argmin(d2))])
        point = self.curve.point
        for _ in range(50):
            cx, cy = point(u)
            dx, dy = self._d1(u)
            ex, ey = self._d2(u)
            rx, ry = qx - cx, qy - cy
            h = rx * dx + ry * dy
            dh = -(dx * dx + dy * dy) + rx * ex + ry * ey
            if dh >= 0.0:
                # outside the convexity region of the distance; fall back to a
                # damped gradient step toward the foot point
                step = -h / (dx * dx + dy * dy)
            else:
                step = h / dh
            u -= step
            if abs(step) < 1e-15 * (1.0 + abs(u)):
                break
        cx, cy = point(u)
        dx, dy = self._d1(u)
        sp = math.hypot(dx, dy)
        n = ((qx - cx) * (-dy) + (qy - cy) * dx) / sp
        s = self._arc(u % self.curve.period) % self.length
        return n, s

    def inverse_psi(self, q) -> tuple[float, float]:
        n, s = self.project(q)
        if not 0.0 <= n < self.delta:
            raise OutOfCollar(f"point {tuple(q)} has n={n:.6g} outside [0, {self.delta:.6g})")
        return n, s

    def signed_distance(self, q) -> float:
        """Distance to the curve, negative on the inner side of the normal."""
        return -self.project(q)[0]

    def constants(self) -> dict:
        return {"L": self.length, "K": self.K, "Kp": self.Kp, "delta": self.delta,
                "epsilon": self.epsilon, "curve": self.curve.name}


def build_chart(curve: ParametricCurve, epsilon: float = 0.5, panels: int = 512,
                grid: int = 4096) -> BoundaryChart:
    """Arc-length chart of ``curve`` with collar width ``delta = epsilon / K``.

    Cumulative arc length is tabulated with 16-point Gauss-Legendre panels and
    inverted by Newton's method.  ``kappa'`` comes from centred differences
    with step ``1e-6 L``.  A clockwise curve is reversed so that the rotated
    tangent points inward.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    P = curve.period
    d1 = curve.d1 or _fd(curve.point, 1e-6 * P)
    d2 = curve.d2 or _fd(d1, 1e-5 * P)

    us = np.linspace(0.0, P, grid, endpoint=False)
    pts = np.array([curve.point(float(u)) for u in us])
    area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    reverse = area < 0
    if reverse:
        base_point, base_d1, base_d2 = curve.point, d1, d2
        curve = ParametricCurve(
            point=lambda u: base_point(-u),
            d1=lambda u: tuple(-c for c in base_d1(-u)),
            d2=lambda u: base_d2(-u),
            period=P, name=curve.name,
        )
        d1, d2 = curve.d1, curve.d2
        pts = np.array([curve.point(float(u)) for u in us])

    u_nodes = np.linspace(0.0, P, panels + 1)
    seg = np.empty(panels)
    for k in range(panels):
        a, b = u_nodes[k], u_nodes[k + 1]
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        seg[k] = half * sum(w * math.hypot(*d1(mid + half * x)) for x, w in zip(_GL_X, _GL_W))
    s_nodes = np.concatenate([[0.0], np.cumsum(seg)])
    length = float(s_nodes[-1])

    def kappa_u(u):
        dx, dy = d1(u)
        ex, ey = d2(u)
        return (dx * ey - dy * ex) / math.hypot(dx, dy) ** 3

    kap = np.array([kappa_u(float(u)) for u in us])
    K = float(np.max(np.abs(kap)))
    if K == 0.0:
        raise GeometryError("a closed curve cannot have zero curvature everywhere")
    delta = epsilon / K
    chart = BoundaryChart(curve, epsilon, length, K, 0.0, delta, u_nodes, s_nodes,
                          us, pts, d1, d2, reverse)
    h = 1e-6 * length
    s_grid = np.linspace(0.0, length, grid, endpoint=False)
    kp = max(abs(chart.kappa(float(s) + h) - chart.kappa(float(s) - h)) / (2 * h)
             for s in s_grid[:: max(1, grid // 1024)])
    chart = BoundaryChart(curve, epsilon, length, K, float(kp), delta, u_nodes, s_nodes,
                          us, pts, d1, d2, reverse)
    _check_injective(chart)
    return chart


def _check_injective(chart: BoundaryChart, tol: float = 1e-8) -> None:
    for n in (0.25 * chart.delta, 0.5 * chart.delta, 0.99 * chart.delta):
        for s in np.linspace(0.0, chart.length, 48, endpoint=False):
            q = chart.psi(n, float(s))
            n2, s2 = chart.project(q)
            ds = abs((s2 - s + 0.5 * chart.length) % chart.length - 0.5 * chart.length)
            if abs(n2 - n) > tol or ds > tol:
                raise GeometryError(
                    f"tubular map is not injective near (n={n:.4g}, s={s:.4g})"
                )


@functools.lru_cache(maxsize=None)
def named_chart(name: str, epsilon: float = 0.5) -> BoundaryChart:
    """Charts referenced by name from configs: ``disc`` and ``ellipse``."""
    if name in ("disc", "unit-disc", "circle"):
        return build_chart(circle_curve(1.0), epsilon)
    if name == "ellipse":
        return build_chart(ellipse_curve(2.0, 1.0), epsilon)
    raise KeyError(f"unknown chart {name!r}")


def psi(chart: BoundaryChart, n: float, s: float) -> tuple[float, float]:
    return chart.psi(n, s)


def inverse_psi(chart: BoundaryChart, q) -> tuple[float, float]:
    return chart.inverse_psi(q)


def field_trace(chart: BoundaryChart, field: FieldModel, n: float, s: float) -> float:
    """``B(n, s) = -b(psi(n, s)) (1 - n kappa(s))``."""
    (x, y), _, (nx, ny), kap = chart.frame(s)
    b = cartesian_evaluator(field)(x + n * nx, y + n * ny)
    return -b * (1.0 - n * kap)


def collar_trace(chart: BoundaryChart, field: FieldModel):
    """Return ``(B, s_independent)`` for a Cartesian, radial or tubular field."""
    if field.kind is FieldKind.TUBULAR:
        return field.trace, not field.depends_on_s
    s_independent = (
        field.kind is FieldKind.RADIAL
        and chart.curve.exact_inverse is not None
        and abs(chart.gamma(0.0)[0] - chart.length / TWO_PI) < 1e-12
    )
    return (lambda n, s: field_trace(chart, field, n, s)), s_independent


def _eta_integral(chart, trace, s_indep, a, b, abs_tol, rel_tol):
    """``int_a^b int_0^L B(eta, xi) dxi deta`` with ``eta = exp(x)``."""
    L = chart.length
    if s_indep:
        inner = lambda eta: L * trace(eta, 0.0)
    else:
        def inner(eta):
            value, err = integrate.quad(lambda xi: trace(eta, xi), 0.0, L, epsabs=abs_tol,
                                        epsrel=rel_tol, limit=400)[:2]
            return value

    value, err, info = integrate.quad(lambda x: inner(math.exp(x)) * math.exp(x),
                                      math.log(a), math.log(b), epsabs=abs_tol,
                                      epsrel=rel_tol, limit=1000, full_output=1)[:3]
    if not math.isfinite(value) or err > 10 * max(abs_tol, rel_tol * abs(value)):
        raise QuadratureError(f"collar flux on [{a:.3g}, {b:.3g}] did not converge", value, err)
    return value


def f_of_n(chart: BoundaryChart, field: FieldModel, n: float, abs_tol: float = 1e-12,
           rel_tol: float = 1e-11) -> float:
    """``f(n) = -(1/L) int_n^delta int_0^L B(eta, xi) dxi deta``.

    The ``eta`` range is split in geometric panels (ratio 2) and each panel is
    integrated in ``log eta``, which keeps ``1/eta``-type boundary growth benign.
    """
    if not 0.0 < n <= chart.delta:
        raise OutOfCollar(f"n={n} outside (0, {chart.delta}]")
    trace, s_indep = collar_trace(chart, field)
    total = 0.0
    hi = chart.delta
    while hi > n:
        lo = max(n, 0.5 * hi)
        try:
            total += _eta_integral(chart, trace, s_indep, lo, hi, abs_tol, rel_tol)
        except QuadratureError as exc:
            raise QuadratureError(f"f({n}) failed", -(total + exc.value) / chart.length,
                                  exc.error / chart.length) from None
        hi = lo
    return -total / chart.length


def proof_gauge(chart: BoundaryChart, field: FieldModel):
    """Vector potential ``A = alpha(n, s) dn + f(n) ds`` with ``dA = B``.

    ``alpha(n, s) = (s/L) int_0^L B(n, xi) dxi - int_0^s B(n, xi) dxi``.
    """
    trace, _ = collar_trace(chart, field)
    L = chart.length

    def A_n(n, s):
        s = s % L
        full = integrate.quad(lambda xi: trace(n, xi), 0.0, L, epsabs=1e-13, epsrel=1e-12,
                              limit=400)[0]
        part = integrate.quad(lambda xi: trace(n, xi), 0.0, s, epsabs=1e-13, epsrel=1e-12,
                              limit=400)[0] if s > 0 else 0.0
        return s / L * full - part

    def A_s(n, s):
        return f_of_n(chart, field, n)

    return A_n, A_s


def hamiltonian_tubular(chart: BoundaryChart, A_n, A_s, n, s, p_n, p_s) -> float:
    """``(p_n - A_n)^2/2 + (p_s - A_s)^2 / (2 (1 - kappa n)^2)``."""
    metric = 1.0 - chart.kappa(s) * n
    if abs(metric) < 1e-12:
        raise DegenerateMetric(f"1 - kappa n = {metric:.3e} at (n={n}, s={s})")
    return 0.5 * (p_n - A_n(n, s)) ** 2 + 0.5 * (p_s - A_s(n, s)) ** 2 / metric ** 2


def tubular_velocity(chart: BoundaryChart, A_n, A_s, n, s, p_n, p_s) -> tuple[float, float]:
    """Normal and tangential velocity ``(p_n - A_n, (p_s - A_s) / (1 - n kappa))``."""
    metric = 1.0 - chart.kappa(s) * n
    if abs(metric) < 1e-12:
        raise DegenerateMetric(f"1 - kappa n = {metric:.3e} at (n={n}, s={s})")
    return p_n - A_n(n, s), (p_s - A_s(n, s)) / metric


@dataclass(frozen=True)
class CollarState:
    """Initial data in tubular form: position, velocity components, ``s``-rate."""

    n: float
    s: float
    v_n: float
    v_s: float
    kappa: float

    @property
    def n_dot(self) -> float:
        return self.v_n

    @property
    def s_dot(self) -> float:
        return self.v_s / (1.0 - self.kappa * self.n)


def collar_state(chart: BoundaryChart, state: PhaseState) -> CollarState:
    n, s = chart.inverse_psi(state.q)
    _, (tx, ty), (nx, ny), kap = chart.frame(s)
    v1, v2 = state.v
    return CollarState(n, s, v1 * nx + v2 * ny, v1 * tx + v2 * ty, kap)


def C_of_T(chart: BoundaryChart, field: FieldModel, init: PhaseState, T: float,
           M: float, details: bool = False):
    """Horizon constant bounding ``|f(n(t))|`` for ``t < T``.

    ``|p_s(0)| + sqrt(2 H0)(1 + eps) + (M sqrt(2 H0) + 2 H0 K' delta / (1 - eps)) T``
    where ``p_s(0) = (1 - kappa n) v_s + f(n)`` is the tangential momentum in
    the gauge of :func:`proof_gauge`.
    """
    cs = collar_state(chart, init)
    H0 = init.energy
    speed = math.sqrt(2.0 * H0)
    eps = chart.epsilon
    f0 = f_of_n(chart, field, cs.n)
    p_s0 = (1.0 - cs.kappa * cs.n) * cs.v_s + f0
    rate = M * speed + 2.0 * H0 * chart.Kp * chart.delta / (1.0 - eps)
    value = abs(p_s0) + speed * (1.0 + eps) + rate * T
    if details:
        return value, {"p_s0": p_s0, "f_n0": f0, "rate": rate, "n0": cs.n, "s0": cs.s,
                       "H0": H0}
    return value


class CertificateVerdict(str, enum.Enum):
    LOWER_BOUND = "lower_bound"
    BOUND = "bound"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ConfinementCertificate:
    """Outcome of a confinement check.

    ``verdict`` is ``"lower_bound"`` (collar bound, ``n_min`` valid up to
    ``horizon_T``), ``"bound"`` (radial bound ``eta`` on ``|q|``) or
    ``"inconclusive"``.  ``complete_dynamics`` is a numerical hint that
    ``|f|`` diverges at the boundary while the oscillation stays bounded;
    it is evidence, not a proof.
    """

    verdict: CertificateVerdict
    hypothesis: str
    C_of_T: float = math.nan
    M_estimate: float = math.nan
    n_min: Optional[float] = None
    horizon_T: Optional[float] = None
    eta: Optional[float] = None
    complete_dynamics: bool = False
    f_samples: list = field(default_factory=list)
    n_floor: Optional[float] = None
    chart: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "verdict": CertificateVerdict(self.verdict).value,
            "hypothesis": self.hypothesis,
            "C_of_T": self.C_of_T,
            "M_estimate": self.M_estimate,
            "n_min": self.n_min,
            "horizon_T": self.horizon_T,
            "eta": self.eta,
            "complete_dynamics": self.complete_dynamics,
            "n_floor": self.n_floor,
            "f_samples": [[float(a), float(b)] for a, b in self.f_samples],
        }
        out.update({k: v for k, v in self.chart.items()})
        out["extra"] = self.extra
        return _json_safe(out)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def certify_lower_bound(chart: BoundaryChart, field: FieldModel, init: PhaseState, T: float,
                        grid: int = 20, n_floor: float = 1e-8, osc_grid: int = 256,
                        tilt: float = 1e-9, M: Optional[float] = None
                        ) -> ConfinementCertificate:
    """Collar lower bound ``n(t) > g^{-1}(C(T))`` for ``t < T``.

    ``f`` is sampled on a geometric grid from ``delta`` down to ``n_floor``
    with ``grid`` points per decade; sampling stops early (and the reached
    floor is recorded) if the quadrature no longer converges.  The minorant is
    ``g(n) = inf_{(0, n]} |f| - tilt * n`` (infimum over the samples plus the
    evaluation point): it is continuous, strictly decreasing and below ``|f|``
    at every evaluated point.  ``M`` defaults to the largest grid oscillation
    found by :func:`magneto2d.fields.mean_and_oscillation` along the n-grid.
    """
    trace, s_indep = collar_trace(chart, field)
    L, delta = chart.length, chart.delta
    decades = math.log10(delta / n_floor)
    count = max(2, int(math.ceil(decades * grid)) + 1)
    n_grid = delta * np.logspace(0.0, -decades, count)

    f_vals = [0.0]
    reached = [float(delta)]
    acc = 0.0
    for hi, lo in zip(n_grid[:-1], n_grid[1:]):
        try:
            acc += _eta_integral(chart, trace, s_indep, float(lo), float(hi), 1e-12, 1e-11)
        except QuadratureError:
            break
        f_vals.append(-acc / L)
        reached.append(float(lo))
    n_s = np.array(reached)          # decreasing
    abs_f = np.abs(np.array(f_vals))
    # prefix minimum from the smallest n upward: inf of |f| over grid points <= n
    run_inf = np.minimum.accumulate(abs_f[::-1])[::-1]

    if M is None:
        if s_indep:
            M = 0.0
        else:
            M = max(mean_and_oscillation(trace, float(n), osc_grid, period=L)[1]
                    for n in n_s[1:])
    C, parts = C_of_T(chart, field, init, T, M, details=True)

    cert = ConfinementCertificate(
        verdict=CertificateVerdict.INCONCLUSIVE,
        hypothesis="collar bound |f(n(t))| <= C(T)",
        C_of_T=C, M_estimate=float(M), horizon_T=T, n_floor=float(n_s[-1]),
        f_samples=list(zip(n_s.tolist(), f_vals)), chart=chart.constants(), extra=parts,
    )
    g_grid = run_inf - tilt * n_s
    if g_grid[-1] <= C:
        return cert

    def g(n):
        # grid points strictly below n carry the running infimum
        j = int(np.searchsorted(-n_s, -n, side="right"))
        below = run_inf[j] if j < len(n_s) else math.inf
        hi_idx = max(j - 1, 0)
        f_here = f_vals[hi_idx] - _eta_integral(chart, trace, s_indep, n, float(n_s[hi_idx]),
                                                1e-13, 1e-12) / L if n < n_s[hi_idx] else f_vals[hi_idx]
        return min(abs(f_here), below) - tilt * n

    # first grid index (from the floor upward) where g drops to C
    idx = int(np.nonzero(g_grid <= C)[0][-1]) if np.any(g_grid <= C) else 0
    hi_n, lo_n = float(n_s[idx]), float(n_s[idx + 1])
    target_tol = 1e-11 * max(1.0, abs(C))
    for _ in range(200):
        mid = 0.5 * (lo_n + hi_n)
        if mid in (lo_n, hi_n):
            break
        gm = g(mid)
        if gm > C:
            lo_n = mid
        else:
            hi_n = mid
        if abs(gm - C) <= target_tol:
            break
    # lo_n keeps g > C, so it stays on the safe side of the root
    cert.verdict = CertificateVerdict.LOWER_BOUND
    cert.n_min = lo_n
    cert.extra["g_at_n_min"] = g(lo_n)
    cert.complete_dynamics = _diverges(n_s, run_inf, C) and math.isfinite(M)
    if cert.complete_dynamics:
        cert.hypothesis += "; |f| appears unbounded at the boundary with bounded oscillation"
    return cert


def _diverges(n_s, run_inf, C) -> bool:
    """Heuristic: the infimum keeps growing over the last decade and exceeds 10 C."""
    if run_inf[-1] <= 10.0 * C:
        return False
    floor = n_s[-1]
    markers = [np.searchsorted(-n_s, -floor * 10 ** k) for k in (1.0, 0.5)]
    vals = [run_inf[min(m, len(n_s) - 1)] for m in markers] + [run_inf[-1]]
    return all(b > a for a, b in zip(vals, vals[1:]))
