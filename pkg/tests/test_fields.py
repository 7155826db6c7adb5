import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from magneto2d.errors import DomainError
from magneto2d.fields import (
    FieldKind,
    FieldModel,
    compile_expression,
    eval_field,
    flux_primitive,
    mean_and_oscillation,
    radial_primitive,
)
from magneto2d.presets import FIG1_FIELD
from magneto2d.tubular import named_chart


def radial(expr, flux=None):
    return FieldModel(FieldKind.RADIAL, expr, flux=flux)


def test_fig1_field_at_origin():
    # 1/(1-0) + sin(0) + 0 - 0
    field = FieldModel(FieldKind.CARTESIAN, FIG1_FIELD)
    assert eval_field(field, (0.0, 0.0)) == pytest.approx(1.0, abs=1e-15)


def test_limit_circle_field_at_one():
    field = radial("exp(-r) - 2/r")
    assert eval_field(field, (1.0, 0.0)) == pytest.approx(math.exp(-1) - 2, abs=1e-12)


def test_flux_of_limit_circle_field():
    assert flux_primitive(radial("exp(-r) - 2/r"), 1.0) == pytest.approx(-1 - 2 / math.e,
                                                                          abs=1e-10)


def test_flux_linear_profile():
    assert flux_primitive(radial("3*r"), 1.0) == pytest.approx(1.0, abs=1e-12)


def test_flux_at_origin_is_zero():
    assert flux_primitive(radial("exp(-r) - 2/r"), 0.0) == 0.0


def test_pole_raises_domain_error():
    with pytest.raises(DomainError):
        eval_field(radial("1/(1 - r)"), (1.0, 0.0))


def test_log_of_negative_raises_domain_error():
    with pytest.raises(DomainError):
        eval_field(radial("log(1 - r)"), (0.0, 2.0))


@pytest.mark.parametrize("text", [
    "__import__('os')",
    "r.real",
    "[r]",
    "lambda r: r",
    "foo(r)",
    "'1'",
    "x + 1",
])
def test_expression_whitelist(text):
    with pytest.raises(ValueError):
        compile_expression(text, ("r",))


def test_caret_means_power():
    _, fn = compile_expression("r^2 + 1", ("r",))
    assert fn(3.0) == 10.0


def test_cartesian_r_alias():
    field = FieldModel(FieldKind.CARTESIAN, "r**2")
    assert eval_field(field, (0.3, 0.4)) == pytest.approx(0.25, abs=1e-15)


def test_tubular_needs_chart_name():
    with pytest.raises(ValueError):
        FieldModel(FieldKind.TUBULAR, "1/n")


def test_tubular_field_in_the_plane():
    # on the unit disc n = 1 - r, kappa = 1, so b = -1/(n (1 - n))
    field = FieldModel(FieldKind.TUBULAR, "1/n", chart="disc")
    b = eval_field(field, (0.0, 0.75), named_chart("disc"))
    assert b == pytest.approx(-1 / (0.25 * 0.75), rel=1e-10)


def test_depends_on_s():
    assert not FieldModel(FieldKind.TUBULAR, "1/n", chart="disc").depends_on_s
    assert FieldModel(FieldKind.TUBULAR, "cos(s)/n", chart="disc").depends_on_s


def test_serialisation_round_trip():
    field = FieldModel(FieldKind.RADIAL, "2/(1 - r)", flux="-2*r - 2*log(1 - r)",
                       regularity_note="pole at r=1")
    again = FieldModel.from_dict(field.to_dict())
    assert again == field
    assert again.profile(0.5) == field.profile(0.5)


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        FieldModel.from_dict({"kind": "radial", "expr": "1", "colour": "red"})


CLOSED_FORMS = [
    ("1", "r**2/2"),
    ("3*r", "r**3"),
    ("2*exp(-r**2)", "1 - exp(-r**2)"),
    ("1/(1 + r**2)", "log(1 + r**2)/2"),
    ("exp(-r) - 2/r", "1 - (1 + r)*exp(-r) - 2*r"),
    ("2/(1 - r)", "-2*r - 2*log(1 - r)"),
]


@pytest.mark.parametrize("expr,flux", CLOSED_FORMS)
@given(r=st.floats(1e-6, 0.999))
def test_quadrature_matches_closed_form_flux(expr, flux, r):
    by_quad = flux_primitive(radial(expr), r)
    exact = radial(expr, flux)._flux_fn(r)
    assert by_quad == pytest.approx(exact, rel=1e-9, abs=1e-11)


@given(r0=st.floats(0.01, 0.95), width=st.floats(1e-9, 0.04))
def test_increment_matches_closed_form(r0, width):
    G = radial_primitive(radial("exp(-r) - 2/r", "1 - (1 + r)*exp(-r) - 2*r"))
    exact = ((1 + r0) * math.exp(-r0) - (1 + r0 + width) * math.exp(-r0 - width)
             - 2 * width)
    assert G.increment(r0, r0 + width) == pytest.approx(exact, rel=1e-9, abs=1e-15)


def test_primitive_records_evaluation_mode():
    assert radial_primitive(radial("1", "r**2/2")).evaluation == "closed_form"
    assert radial_primitive(radial("1")).evaluation == "quadrature"


def test_mean_and_oscillation_of_cosine_trace():
    field = FieldModel(FieldKind.TUBULAR, "1/n + cos(s)", chart="disc")
    mean, osc = mean_and_oscillation(field, 0.25)
    assert mean == pytest.approx(4.0, abs=1e-10)
    # grid contains s = 0 where |cos| = 1
    assert osc == pytest.approx(1.0, abs=1e-10)


def test_mean_and_oscillation_callable_needs_period():
    with pytest.raises(ValueError):
        mean_and_oscillation(lambda n, s: 1.0, 0.1)
    mean, osc = mean_and_oscillation(lambda n, s: 2.0, 0.1, period=3.0)
    assert (mean, osc) == (pytest.approx(2.0), pytest.approx(0.0, abs=1e-12))


def test_small_grid_rejected():
    with pytest.raises(ValueError):
        mean_and_oscillation(lambda n, s: 1.0, 0.1, grid_size=8, period=1.0)
