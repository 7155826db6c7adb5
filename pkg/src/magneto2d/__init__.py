"""Planar charged-particle dynamics in inhomogeneous magnetic fields.

Trajectory integration, boundary confinement bounds in tubular coordinates
and radial scattering angles by singular quadrature.
"""
from .errors import (
    ConfigError,
    DegenerateMetric,
    DomainError,
    GeometryError,
    HypothesisViolation,
    Magneto2DError,
    OutOfCollar,
    QuadratureError,
    SingularityError,
    UnboundedPotential,
)
from .fields import FieldKind, FieldModel, eval_field, flux_primitive, mean_and_oscillation
from .integrator import (
    BoundaryHit,
    IntegrationResult,
    IntegratorOptions,
    PhaseState,
    Termination,
    angular_momentum,
    energy,
    integrate,
)
from .radial import (
    Branch,
    ReducedSystem,
    ScatteringResult,
    deflection_alpha,
    effective_potential,
    escape_construct,
    radial_confinement,
    scattering,
    scattering_sweep,
    transit_time,
    turning_point,
)
from .scenario import Scenario, load_scenario, parse_scenario, run
from .tubular import (
    BoundaryChart,
    CertificateVerdict,
    ConfinementCertificate,
    C_of_T,
    build_chart,
    certify_lower_bound,
    circle_curve,
    ellipse_curve,
    f_of_n,
    inverse_psi,
    named_chart,
    psi,
)

__version__ = "0.1.0"
