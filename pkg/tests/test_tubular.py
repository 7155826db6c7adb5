import json
import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ellipe

from magneto2d.errors import DegenerateMetric, OutOfCollar
from magneto2d.fields import FieldKind, FieldModel
from magneto2d.integrator import PhaseState, integrate
from magneto2d.tubular import (
    CertificateVerdict,
    C_of_T,
    ParametricCurve,
    build_chart,
    certify_lower_bound,
    circle_curve,
    collar_state,
    f_of_n,
    hamiltonian_tubular,
    named_chart,
    proof_gauge,
    tubular_velocity,
)

DISC = named_chart("disc")
ELLIPSE = named_chart("ellipse")
INVERSE_N = FieldModel(FieldKind.TUBULAR, "1/n", chart="disc")


def test_disc_constants():
    assert DISC.length == pytest.approx(2 * math.pi, abs=1e-12)
    assert DISC.K == pytest.approx(1.0, abs=1e-12)
    assert DISC.Kp < 1e-8
    assert DISC.delta == pytest.approx(0.5)


def test_ellipse_constants():
    # perimeter 4 a E(1 - b^2/a^2), curvature peaks a/b^2 at the major vertices
    assert ELLIPSE.length == pytest.approx(8 * ellipe(0.75), abs=1e-10)
    assert ELLIPSE.K == pytest.approx(2.0, abs=1e-9)
    assert ELLIPSE.delta == pytest.approx(0.25, abs=1e-9)


def _ellipse_kappa_oracle():
    u = sympy.Symbol("u", real=True)
    a, b = 2, 1
    speed = sympy.sqrt(a**2 * sympy.sin(u) ** 2 + b**2 * sympy.cos(u) ** 2)
    kappa = a * b / speed**3
    dkds = sympy.diff(kappa, u) / speed
    return sympy.lambdify(u, kappa, "math"), sympy.lambdify(u, dkds, "math")


def test_ellipse_curvature_against_parametric_formula():
    kappa, _ = _ellipse_kappa_oracle()
    for s in np.linspace(0, ELLIPSE.length, 37):
        x, y = ELLIPSE.gamma(float(s))
        u = math.atan2(y, x / 2)
        assert ELLIPSE.kappa(float(s)) == pytest.approx(kappa(u), rel=1e-7)


def test_ellipse_curvature_derivative_bound():
    _, dkds = _ellipse_kappa_oracle()
    exact = max(abs(dkds(u)) for u in np.linspace(0, 2 * math.pi, 200001))
    assert ELLIPSE.Kp == pytest.approx(exact, rel=1e-4)


@pytest.mark.parametrize("chart", [DISC, ELLIPSE], ids=["disc", "ellipse"])
@given(frac=st.floats(1e-6, 0.999), t=st.floats(0.0, 1.0, exclude_max=True))
def test_psi_round_trip(chart, frac, t):
    n, s = frac * chart.delta, t * chart.length
    n2, s2 = chart.inverse_psi(chart.psi(n, s))
    assert n2 == pytest.approx(n, abs=1e-10)
    ds = (s2 - s + chart.length / 2) % chart.length - chart.length / 2
    assert abs(ds) < 1e-10


@pytest.mark.parametrize("chart", [DISC, ELLIPSE], ids=["disc", "ellipse"])
def test_normal_points_inward(chart):
    for s in np.linspace(0, chart.length, 16, endpoint=False):
        x, y = chart.psi(0.1 * chart.delta, float(s))
        assert (x / 2) ** 2 + y**2 < 1 if chart is ELLIPSE else math.hypot(x, y) < 1


def test_out_of_collar():
    with pytest.raises(OutOfCollar):
        DISC.inverse_psi((0.1, 0.0))


def test_clockwise_curve_is_reversed():
    cw = ParametricCurve(point=lambda u: (math.cos(u), -math.sin(u)))
    chart = build_chart(cw)
    x, y = chart.psi(0.2, 0.3)
    assert math.hypot(x, y) == pytest.approx(0.8, abs=1e-9)


def test_signed_distance_negative_inside():
    assert DISC.signed_distance((0.75, 0.0)) == pytest.approx(-0.25)


@given(n=st.floats(1e-6, 0.49))
def test_f_of_inverse_n_closed_form(n):
    assert f_of_n(DISC, INVERSE_N, n) == pytest.approx(-math.log(0.5 / n), abs=1e-10)


def test_f_of_n_tangentially_varying_trace():
    # int_0^{2pi} sin^2 = pi, so f(n) = -log(delta/n)/2
    field = FieldModel(FieldKind.TUBULAR, "sin(s)**2/n + n*cos(s)", chart="disc")
    for n in (1e-4, 0.01, 0.3):
        assert f_of_n(DISC, field, n) == pytest.approx(-0.5 * math.log(0.5 / n), abs=1e-9)


def test_f_of_n_ellipse_against_tensor_gauss():
    field = FieldModel(FieldKind.CARTESIAN, "1 + q1*q2 - q1**2")
    n = 0.05
    x, w = np.polynomial.legendre.leggauss(64)
    L, d = ELLIPSE.length, ELLIPSE.delta
    etas = n + (d - n) * (x + 1) / 2
    total = 0.0
    for eta, we in zip(etas, w):
        for k in range(8):
            for xs, ws in zip(x, w):
                s = L * (k + (xs + 1) / 2) / 8
                (px, py), _, (nx, ny), kap = ELLIPSE.frame(s)
                qx, qy = px + eta * nx, py + eta * ny
                B = -(1 + qx * qy - qx**2) * (1 - eta * kap)
                total += we * ws * B * (L / 16) * (d - n) / 2
    assert f_of_n(ELLIPSE, field, n) == pytest.approx(-total / L, abs=1e-9)


def test_gauge_has_curl_b():
    field = FieldModel(FieldKind.TUBULAR, "(2 + cos(s))/n", chart="disc")
    A_n, A_s = proof_gauge(DISC, field)
    n, s, h = 0.2, 1.1, 1e-5
    dAs_dn = (A_s(n + h, s) - A_s(n - h, s)) / (2 * h)
    dAn_ds = (A_n(n, s + h) - A_n(n, s - h)) / (2 * h)
    assert dAs_dn - dAn_ds == pytest.approx(field.trace(n, s), rel=1e-6)


def test_hamiltonian_is_kinetic_energy():
    A_n, A_s = proof_gauge(ELLIPSE, FieldModel(FieldKind.RADIAL, "1 + r"))
    n, s, v_n, v_s = 0.1, 2.0, 0.3, -0.7
    metric = 1 - ELLIPSE.kappa(s) * n
    p_n, p_s = v_n + A_n(n, s), metric * v_s + A_s(n, s)
    H = hamiltonian_tubular(ELLIPSE, A_n, A_s, n, s, p_n, p_s)
    assert H == pytest.approx(0.5 * (v_n**2 + v_s**2), rel=1e-12)
    vn, vs = tubular_velocity(ELLIPSE, A_n, A_s, n, s, p_n, p_s)
    assert (vn, vs * metric) == pytest.approx((v_n, v_s * metric), rel=1e-12)


def test_degenerate_metric():
    zero = lambda n, s: 0.0
    with pytest.raises(DegenerateMetric):
        hamiltonian_tubular(DISC, zero, zero, 1.0, 0.0, 0.0, 0.0)


def test_collar_state_components():
    cs = collar_state(DISC, PhaseState((0.0, 0.8), (0.3, -0.4)))
    assert cs.n == pytest.approx(0.2)
    assert cs.v_n == pytest.approx(0.4)      # inward normal is -q/|q|
    assert cs.s_dot == pytest.approx(-0.3 / 0.8)


def test_C_of_T_static_start():
    # v = 0 leaves only |f(n0)| = log(delta/n0)
    C = C_of_T(DISC, INVERSE_N, PhaseState((0.75, 0.0), (0.0, 0.0)), 1.0, 0.0)
    assert C == pytest.approx(math.log(2), abs=1e-12)


def test_C_of_T_grows_with_horizon():
    init = PhaseState((0.0, 0.8), (0.2, 0.1))
    field = FieldModel(FieldKind.TUBULAR, "1/n", chart="ellipse")
    c1 = C_of_T(ELLIPSE, field, PhaseState((0.0, 0.9), (0.2, 0.1)), 1.0, 0.5)
    c2 = C_of_T(ELLIPSE, field, PhaseState((0.0, 0.9), (0.2, 0.1)), 2.0, 0.5)
    assert c2 > c1


def test_certificate_inverse_n_closed_form():
    init = PhaseState((0.8, 0.0), (0.0, 0.3))
    cert = certify_lower_bound(DISC, INVERSE_N, init, 1.0)
    assert cert.verdict is CertificateVerdict.LOWER_BOUND
    assert cert.n_min == pytest.approx(0.5 * math.exp(-cert.C_of_T), abs=1e-9)
    assert cert.n_min <= 0.5 * math.exp(-cert.C_of_T)
    assert cert.complete_dynamics
    doc = json.loads(cert.to_json())
    assert doc["verdict"] == "lower_bound"
    assert "NaN" not in cert.to_json()


def test_certificate_bounded_field_inconclusive():
    field = FieldModel(FieldKind.TUBULAR, "1 + 0*n", chart="disc")
    cert = certify_lower_bound(DISC, field, PhaseState((0.8, 0.0), (0.0, 0.3)), 1.0)
    assert cert.verdict is CertificateVerdict.INCONCLUSIVE
    assert not cert.complete_dynamics


@given(v=st.tuples(st.floats(-1, 1), st.floats(-1, 1)).filter(lambda v: math.hypot(*v) > 0.05),
       n0=st.floats(0.05, 0.2))
def test_normal_speed_bounded_along_collar_orbits(v, n0):
    init = PhaseState((1 - n0, 0.0), v)
    res = integrate(INVERSE_N, init, 1.0, chart=DISC, domain=1.0)
    bound = math.sqrt(2 * init.energy) * (1 + 1e-8)
    for q, vel in zip(res.q, res.v):
        if 1 - math.hypot(*q) < DISC.delta:
            assert abs(collar_state(DISC, PhaseState(q, vel)).n_dot) <= bound
