"""Magnetic field models, the radial flux primitive and collar averages.

A field is a scalar ``b`` such that the planar Lorentz force reads
``dv/dt = b(q) * (v2, -v1)``.  Models are given as closed-form expression
strings and compiled once with sympy; evaluation afterwards is plain
``math`` arithmetic.
"""
from __future__ import annotations

import ast
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy
from scipy import integrate
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import DomainError, QuadratureError

__all__ = [
    "FieldKind",
    "FieldModel",
    "RadialPrimitive",
    "compile_expression",
    "eval_field",
    "cartesian_evaluator",
    "flux_primitive",
    "radial_primitive",
    "mean_and_oscillation",
]


class FieldKind(str, enum.Enum):
    RADIAL = "radial"
    CARTESIAN = "cartesian"
    TUBULAR = "tubular"


_VARIABLES = {
    FieldKind.RADIAL: ("r",),
    FieldKind.CARTESIAN: ("q1", "q2"),
    FieldKind.TUBULAR: ("n", "s"),
}

_FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "exp": sympy.exp,
    "log": sympy.log,
    "ln": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "Abs": sympy.Abs,
    "asin": sympy.asin,
    "arcsin": sympy.asin,
    "acos": sympy.acos,
    "arccos": sympy.acos,
    "atan": sympy.atan,
    "arctan": sympy.atan,
    "atan2": sympy.atan2,
    "arctan2": sympy.atan2,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "tanh": sympy.tanh,
}
_CONSTANTS = {"pi": sympy.pi, "e": sympy.E, "E": sympy.E}


def _check_syntax(text: str, allowed_names: set[str]) -> None:
    # parse_expr evaluates Python code, so only arithmetic on known names gets through
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None
    allowed_nodes = (
        ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
        ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
    )
    for node in ast.walk(tree):
        if not isinstance(node, allowed_nodes):
            raise ValueError(f"unsupported syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError(f"only numeric literals are allowed in {text!r}")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS
        ):
            raise ValueError(f"unknown function in {text!r}")
        if isinstance(node, ast.Name) and node.id not in allowed_names:
            raise ValueError(f"unknown name {node.id!r} in {text!r}")


def compile_expression(text: str, variables: tuple[str, ...], aliases=None):
    """Parse ``text`` into a sympy expression and a ``math``-backed callable.

    ``aliases`` maps extra names to sympy expressions of ``variables``
    (used to let Cartesian fields mention ``r``).
    """
    aliases = dict(aliases or {})
    symbols = {v: sympy.Symbol(v, real=True) for v in variables}
    local = {**_FUNCTIONS, **_CONSTANTS, **symbols}
    for name, builder in aliases.items():
        local[name] = builder(symbols)
    _check_syntax(text, set(local))
    expr = parse_expr(
        text, local_dict=local, transformations=standard_transformations + (convert_xor,)
    )
    fn = sympy.lambdify([symbols[v] for v in variables], expr, modules="math")
    return expr, fn


def _guarded(fn: Callable[..., float], label: str) -> Callable[..., float]:
    def evaluate(*args):
        try:
            value = float(fn(*args))
        except (ZeroDivisionError, ValueError, OverflowError, TypeError) as exc:
            raise DomainError(f"{label} undefined at {args}: {exc}") from None
        if not math.isfinite(value):
            raise DomainError(f"{label} is not finite at {args}")
        return value

    return evaluate


@dataclass(frozen=True)
class FieldModel:
    """Scalar magnetic field ``b`` on the plane.

    Parameters
    ----------
    kind : FieldKind
        ``radial`` (expression in ``r``), ``cartesian`` (in ``q1, q2``; ``r``
        is accepted as shorthand for the norm) or ``tubular`` (the collar
        trace ``B(n, s)`` attached to a named boundary chart).
    expr : str
        Closed-form expression.
    domain_radius : float
        Radius of the disc the model lives on.
    flux : str, optional
        Closed form of ``G(r) = int_0^r tau b(tau) dtau`` for radial models.
        Without it ``G`` is computed by adaptive quadrature.
    chart : str, optional
        Chart name for tubular models (see :func:`magneto2d.tubular.named_chart`).
    regularity_note : str
        Where the field is locally Lipschitz.
    """

    kind: FieldKind
    expr: str
    domain_radius: float = 1.0
    flux: Optional[str] = None
    chart: Optional[str] = None
    regularity_note: str = ""
    _fn: Callable = field(init=False, repr=False, compare=False)
    _flux_fn: Optional[Callable] = field(init=False, repr=False, compare=False)
    _sympy: object = field(init=False, repr=False, compare=False)
    _vec: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = FieldKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.domain_radius <= 0:
            raise ValueError("domain_radius must be positive")
        aliases = None
        if kind is FieldKind.CARTESIAN:
            aliases = {"r": lambda s: sympy.sqrt(s["q1"] ** 2 + s["q2"] ** 2)}
        expr, fn = compile_expression(self.expr, _VARIABLES[kind], aliases)
        object.__setattr__(self, "_sympy", expr)
        symbols = [sympy.Symbol(v, real=True) for v in _VARIABLES[kind]]
        object.__setattr__(self, "_vec", sympy.lambdify(symbols, expr, modules="numpy"))
        object.__setattr__(self, "_fn", _guarded(fn, f"b = {self.expr}"))
        flux_fn = None
        if self.flux is not None:
            if kind is not FieldKind.RADIAL:
                raise ValueError("a closed-form flux is only meaningful for radial fields")
            _, g = compile_expression(self.flux, ("r",))
            flux_fn = _guarded(g, f"G = {self.flux}")
        object.__setattr__(self, "_flux_fn", flux_fn)
        if kind is FieldKind.TUBULAR and not self.chart:
            raise ValueError("tubular fields need a chart name")

    @property
    def symbolic(self):
        return self._sympy

    @property
    def depends_on_s(self) -> bool:
        """False when a tubular trace is independent of arc length."""
        return sympy.Symbol("s", real=True) in self._sympy.free_symbols

    def profile(self, r: float) -> float:
        """Radial profile ``B(r)``; only for radial models."""
        if self.kind is not FieldKind.RADIAL:
            raise TypeError("profile() needs a radial field")
        return self._fn(r)

    def trace(self, n: float, s: float) -> float:
        """Collar trace ``B(n, s)``; only for tubular models."""
        if self.kind is not FieldKind.TUBULAR:
            raise TypeError("trace() needs a tubular field")
        return self._fn(n, s)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "expr": self.expr, "domain_radius": self.domain_radius}
        if self.flux is not None:
            out["flux"] = self.flux
        if self.chart is not None:
            out["chart"] = self.chart
        if self.regularity_note:
            out["regularity_note"] = self.regularity_note
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FieldModel":
        known = {"kind", "expr", "domain_radius", "flux", "chart", "regularity_note"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown field keys: {sorted(unknown)}")
        return cls(**data)


def eval_field(model: FieldModel, q, chart=None) -> float:
    """Evaluate ``b(q)``.

    Tubular models need the boundary chart that defines their coordinates;
    ``b`` is recovered from ``B(n, s) = -b(psi(n, s)) (1 - n kappa(s))``.
    """
    q1, q2 = float(q[0]), float(q[1])
    if model.kind is FieldKind.RADIAL:
        return model._fn(math.hypot(q1, q2))
    if model.kind is FieldKind.CARTESIAN:
        return model._fn(q1, q2)
    if chart is None:
        raise TypeError("evaluating a tubular field at a Cartesian point needs its chart")
    n, s = chart.inverse_psi((q1, q2))
    metric = 1.0 - n * chart.kappa(s)
    return -model._fn(n, s) / metric


def cartesian_evaluator(model: FieldModel, chart=None) -> Callable[[float, float], float]:
    """Return a fast ``(q1, q2) -> b`` closure for the integrator's inner loop."""
    fn = model._fn
    if model.kind is FieldKind.RADIAL:
        hypot = math.hypot
        return lambda q1, q2: fn(hypot(q1, q2))
    if model.kind is FieldKind.CARTESIAN:
        return fn
    if chart is None:
        raise TypeError("a tubular field needs its chart to be evaluated in the plane")
    return lambda q1, q2: eval_field(model, (q1, q2), chart)


def _quad(fn, a, b, abs_tol, rel_tol, limit=200, what="integral", points=None):
    value, err, info = integrate.quad(
        fn, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1, points=points
    )[:3]
    if not math.isfinite(value):
        raise QuadratureError(f"{what} is not finite on [{a}, {b}]", value, err)
    if err > max(abs_tol, rel_tol * abs(value)) * 10.0:
        raise QuadratureError(f"{what} did not converge on [{a}, {b}]", value, err)
    return value, err


def flux_primitive(model: FieldModel, r: float, abs_tol: float = 1e-12,
                   rel_tol: float = 1e-10) -> float:
    """``G(r) = int_0^r tau B(tau) dtau`` for a radial model.

    Uses the model's closed form when present.  Otherwise QUADPACK's
    extrapolating adaptive rule is used, which copes with integrable
    endpoint singularities at ``r = 0``.
    """
    if model.kind is not FieldKind.RADIAL:
        raise TypeError("flux_primitive needs a radial field")
    r = float(r)
    if r < 0:
        raise DomainError(f"G is defined for r >= 0, got {r}")
    if r == 0.0:
        return 0.0
    if model._flux_fn is not None:
        return model._flux_fn(r)
    value, _ = _quad(lambda t: t * model._fn(t), 0.0, r, abs_tol, rel_tol,
                     what="flux primitive")
    return value


@dataclass(frozen=True)
class RadialPrimitive:
    """Callable wrapper around ``G`` with the evaluation mode recorded."""

    model: FieldModel
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    @property
    def evaluation(self) -> str:
        return "closed_form" if self.model.flux is not None else "quadrature"

    def __call__(self, r: float) -> float:
        return flux_primitive(self.model, r, self.abs_tol, self.rel_tol)

    def increment(self, r0: float, r1: float) -> float:
        """``G(r1) - G(r0)`` computed directly on ``[r0, r1]``.

        Short intervals use a fixed Gauss-Legendre rule so the difference keeps
        full relative precision even when ``r1 - r0`` is tiny.
        """
        width = r1 - r0
        if width == 0.0:
            return 0.0
        if abs(width) <= 0.05:
            nodes, weights = _GL_NODES, _GL_WEIGHTS
            mid, half = 0.5 * (r0 + r1), 0.5 * width
            total = 0.0
            for x, w in zip(nodes, weights):
                t = mid + half * x
                total += w * t * self.model._fn(t)
            return total * half
        return self(r1) - self(r0)


    def on_grid(self, rs) -> np.ndarray:
        """``G`` on an increasing grid of cells no wider than 0.05.

        The first value is exact; the rest accumulate Gauss-Legendre cell
        increments evaluated in one vectorised pass.  Falls back to pointwise
        evaluation if the field is not finite somewhere on the nodes.
        """
        rs = np.asarray(rs, dtype=float)
        width = np.diff(rs)
        if self.model._flux_fn is not None or len(rs) < 2 or np.any(width <= 0) or np.any(width > 0.05):
            return np.array([self(float(r)) for r in rs])
        mid = 0.5 * (rs[1:] + rs[:-1])
        half = 0.5 * width
        t = mid[:, None] + half[:, None] * np.asarray(_GL_NODES)[None, :]
        with np.errstate(all="ignore"):
            vals = t * np.broadcast_to(self.model._vec(t), t.shape)
        if not np.all(np.isfinite(vals)):
            return np.array([self(float(r)) for r in rs])
        steps = half * (vals @ np.asarray(_GL_WEIGHTS))
        return self(float(rs[0])) + np.concatenate([[0.0], np.cumsum(steps)])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_NODES = [float(x) for x in _GL_NODES]
_GL_WEIGHTS = [float(w) for w in _GL_WEIGHTS]


def radial_primitive(model: FieldModel, abs_tol: float = 1e-12,
                     rel_tol: float = 1e-10) -> RadialPrimitive:
    if model.kind is not FieldKind.RADIAL:
        raise TypeError("radial_primitive needs a radial field")
    return RadialPrimitive(model, abs_tol, rel_tol)


def mean_and_oscillation(trace, n: float, grid_size: int = 1024,
                         period: Optional[float] = None, abs_tol: float = 1e-12,
                         rel_tol: float = 1e-10) -> tuple[float, float]:
    """Tangential mean of ``B(n, .)`` and its oscillation about that mean.

    The mean is an adaptive quadrature over one period.  The oscillation is
    the maximum of ``|B(n, s) - mean|`` over ``grid_size`` equispaced points,
    so it only resolves the true supremum up to the grid spacing (it is a
    lower estimate, never a certified bound).

    ``trace`` may be a tubular :class:`FieldModel` (its chart supplies the
    period) or any callable ``(n, s)`` together with ``period``.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    if isinstance(trace, FieldModel):
        fn = trace.trace
        if period is None:
            from .tubular import named_chart

            period = named_chart(trace.chart).length
    else:
        fn = trace
    if period is None:
        raise ValueError("period is required for a bare callable")
    # subdivide so oscillatory traces do not exhaust the default interval budget
    value, _ = _quad(lambda s: fn(n, s), 0.0, period, abs_tol, rel_tol, limit=2000,
                     what="tangential mean")
    mean = value / period
    grid = np.arange(grid_size) * (period / grid_size)
    osc = max(abs(fn(n, float(s)) - mean) for s in grid)
    return mean, osc
