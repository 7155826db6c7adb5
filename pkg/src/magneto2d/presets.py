"""Ready-made scenarios.

The figure presets carry the field formulas of the reference figures.  Their
initial data are our own choices (the figures do not state any); they were
picked to show the qualitative behaviour each figure is about and nothing
more is claimed.
"""
from __future__ import annotations

import math

from .fields import FieldKind, FieldModel, flux_primitive
from .scenario import Domain, Initial, Scenario, Task, TaskKind

_GAP = "(1-sqrt(q1**2+q2**2))"

FIG1_FIELD = f"1/{_GAP} + sin(arcsin(q2)/{_GAP}) + 5*q1**3 - 7*q2"
FIG2_FIELD = f"(1/2 - sin(1/{_GAP}))/{_GAP}**2 + 10*q1 - 2*q1**2 - 10*q2**2"
LIMIT_CIRCLE_FIELD = "exp(-r) - 2/r"
LIMIT_CIRCLE_FLUX = "1 - (1 + r)*exp(-r) - 2*r"
# log|1 - r| rather than log(1 - r) so the field stays defined a hair past the
# boundary, where the exit search evaluates trial steps
LOG_SQUARED_FIELD = "log(abs(1 - r))**2"
# G(r) = 7/4 - F(1 - r) with F(x) = x(ln^2 x - 2 ln x + 2) - x^2(ln^2 x - ln x + 1/2)/2
LOG_SQUARED_FLUX = ("7/4 - (1-r)*(log(1-r)**2 - 2*log(1-r) + 2)"
                    " + (1-r)**2*(log(1-r)**2 - log(1-r) + 1/2)/2")

FIGURES = ("fig1", "fig2", "fig3-limitcircle", "fig4-confined", "fig4-escaping")

# (name, B(r), closed-form flux or None, v_r, v_theta)
_SCATTER_TABLE = [
    ("scatter-const-1", "1", "r**2/2", -1.0, 0.3),
    ("scatter-const-neg2", "-2", "-r**2", -1.5, -0.4),
    ("scatter-const-3", "3", "3*r**2/2", -2.0, 1.0),
    ("scatter-const-half", "0.5", "r**2/4", -0.7, -0.2),
    ("scatter-linear", "3*r", "r**3", -1.2, 0.5),
    ("scatter-quadratic", "1 + r**2", "r**2/2 + r**4/4", -1.0, 0.6),
    ("scatter-gaussian", "2*exp(-r**2)", "1 - exp(-r**2)", -1.3, 0.2),
    ("scatter-lorentzian", "1/(1 + r**2)", "log(1 + r**2)/2", -0.9, -0.3),
    ("scatter-cosine", "cos(3*r)", None, -1.1, 0.4),
    ("scatter-shell", "-4*r*(1 - r)", None, -1.0, -0.5),
    ("scatter-headon", "2 - r", None, -1.0, 0.0),
]


def _radial(expr, flux=None, note=""):
    return FieldModel(FieldKind.RADIAL, expr, flux=flux, regularity_note=note)


def _polar(field: FieldModel, r0: float, p_theta: float, H0: float) -> Initial:
    """Polar data at ``(r0, 0)`` with ``p_r >= 0`` fixed by the energy."""
    G0 = flux_primitive(field, r0)
    v_th = (p_theta - G0) / r0
    p_r = math.sqrt(max(2.0 * H0 - v_th * v_th, 0.0))
    return Initial(r0=r0, theta0=0.0, p_r=p_r, p_theta=p_theta)


def figure_preset(name: str) -> Scenario:
    if name == "fig1":
        return Scenario(
            name="fig1",
            field=FieldModel(FieldKind.CARTESIAN, FIG1_FIELD,
                             regularity_note="tangential derivative not integrable at r=1"),
            initial=Initial(q=[0.2, 0.1], v=[1.0, 0.5]),
            task=Task(TaskKind.SIMULATE, t_max=200.0),
            notes="initial data chosen here; the figure states none",
        )
    if name == "fig2":
        return Scenario(
            name="fig2",
            field=FieldModel(FieldKind.CARTESIAN, FIG2_FIELD,
                             regularity_note="strongly oscillating near r=1"),
            initial=Initial(q=[0.3, 0.0], v=[0.0, 1.0]),
            task=Task(TaskKind.SIMULATE, t_max=200.0),
            notes="initial data chosen here; the figure states none",
        )
    if name == "fig3-limitcircle":
        field = _radial(LIMIT_CIRCLE_FIELD, LIMIT_CIRCLE_FLUX, "singular at r=0")
        # V - H0 has a degenerate zero at r = 1: the orbit creeps towards the circle
        p_theta = 1.0 - 3.0 / math.e
        H0 = 0.5 * (2.0 - 1.0 / math.e) ** 2
        return Scenario(
            name="fig3-limitcircle",
            field=field,
            initial=_polar(field, 0.5, p_theta, H0),
            task=Task(TaskKind.SIMULATE, t_max=100.0),
            notes="p_theta and H0 put a critical point of V at r=1; r0 chosen here",
        )
    if name == "fig4-confined":
        return Scenario(
            name="fig4-confined",
            field=_radial(LOG_SQUARED_FIELD, LOG_SQUARED_FLUX, "bounded flux, V bounded"),
            initial=Initial(q=[0.5, 0.0], v=[0.0, -0.3]),
            task=Task(TaskKind.CONFINE_CHECK, T=100.0),
            notes="slow start for which liminf V > H0; initial data chosen here",
        )
    if name == "fig4-escaping":
        from .radial import escape_construct

        field = _radial(LOG_SQUARED_FIELD, LOG_SQUARED_FLUX, "bounded flux, V bounded")
        init, bound, _ = escape_construct(field, 0.5, 1.0)
        return Scenario(
            name="fig4-escaping",
            field=field,
            initial=Initial(q=list(init.q), v=list(init.v)),
            task=Task(TaskKind.SIMULATE, t_max=2.0 * bound),
            notes=f"escape construction with r0=0.5, v=1; exit guaranteed before t={bound!r}",
        )
    raise KeyError(f"unknown figure preset {name!r}; choose from {', '.join(FIGURES)}")


def scattering_presets() -> list[Scenario]:
    """Entries through the unit circle for bounded radial fields, plus B = 0."""
    out = [_scatter("scatter-zero", "0", "0", -1.0, 0.5)]
    out += [_scatter(*row) for row in _SCATTER_TABLE]
    return out


def _scatter(name, expr, flux, v_r, v_theta) -> Scenario:
    return Scenario(
        name=name,
        field=_radial(expr, flux),
        initial=Initial(v_r=v_r, v_theta=v_theta, theta0=0.0),
        task=Task(TaskKind.SCATTER),
    )


def collar_preset() -> Scenario:
    """``B(n, s) = 1/n`` on the unit-disc collar (delta = 0.5)."""
    return Scenario(
        name="collar-inverse-n",
        field=FieldModel(FieldKind.TUBULAR, "1/n", chart="disc"),
        domain=Domain(disc_radius=None, chart="disc", epsilon=0.5),
        initial=Initial(q=[0.8, 0.0], v=[0.0, 0.3]),
        task=Task(TaskKind.BOUND, T=1.0),
    )


def h1_preset() -> Scenario:
    return Scenario(
        name="h1-inverse-gap",
        field=_radial("2/(1 - r)", "-2*r - 2*log(1 - r)"),
        initial=Initial(q=[0.5, 0.0], v=[0.0, 1.0]),
        task=Task(TaskKind.CONFINE_CHECK, T=100.0),
    )


def all_presets() -> dict[str, Scenario]:
    out = {name: figure_preset(name) for name in FIGURES}
    for sc in scattering_presets() + [collar_preset(), h1_preset()]:
        out[sc.name] = sc
    return out


def preset(name: str) -> Scenario:
    if name in FIGURES:
        return figure_preset(name)
    presets = all_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}")
    return presets[name]
