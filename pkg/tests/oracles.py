"""Independent reference computations shared by the test modules."""
import math

from magneto2d.integrator import PhaseState, integrate


def ode_scattering(field, v_r, v_theta, theta=0.0, t_max=50.0):
    """Scattering angle and exit time by direct integration from the circle."""
    c, s = math.cos(theta), math.sin(theta)
    v1 = (v_r * c - v_theta * s, v_r * s + v_theta * c)
    res = integrate(field, PhaseState((c, s), v1), t_max)
    assert res.hit is not None, res.termination
    v2 = res.hit.v_exit
    omega = math.atan2(v1[0] * v2[1] - v1[1] * v2[0], v1[0] * v2[0] + v1[1] * v2[1])
    return omega, res.hit.t_exit, res


def free_closed_forms(p, H0):
    """Turning radius, deflection and half transit time without a field."""
    speed = math.sqrt(2 * H0)
    r_star = abs(p) / speed
    alpha = 2 * math.acos(r_star) * math.copysign(1.0, p)
    t_star = math.sqrt(1 - r_star**2) / speed
    return r_star, alpha, t_star


def angle_gap(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))
