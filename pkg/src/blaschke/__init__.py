"""Numerical verification of ball-rolling theorems for lambda-convex bodies
in model spaces and in two-dimensional metrics with curvature bounded below.

Modules
-------
model_space
    Constant-curvature model spaces: distances, exp/log maps, triangles.
convex_body
    Sampled boundary charts, curvature, lambda-convexity certificates.
radial_angle
    Radial angle function, gradient trajectories, comparison checks.
rolling
    Ball rolling, rigidity probe, diameter and volume bounds, two-ball hull.
horoball
    Busemann functions and horoball inclusion.
riemannian2d
    Chart metrics, geodesics by shooting, Toponogov and rolling checks.
harness
    Scenario files, reports and the command-line interface.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlaschkeError,
    CertificationError,
    DomainError,
    GeometryError,
    ImmersionError,
    IntegrationError,
    QuadratureError,
    ScenarioError,
)
from .model_space import (  # noqa: E402
    ModelPoint,
    ModelSpace,
    TangentVector,
    characteristic_radius,
    cs,
    ct,
    sn,
)
from .convex_body import (  # noqa: E402
    BodySpec,
    build_body,
    certify_lambda_convex,
    make_ellipse_like,
    make_geodesic_sphere,
    make_revolution_body,
    make_two_ball_hull,
    sphere_with_lambda,
)

__all__ = [
    "__version__",
    "BlaschkeError", "CertificationError", "DomainError", "GeometryError",
    "ImmersionError", "IntegrationError", "QuadratureError", "ScenarioError",
    "ModelPoint", "ModelSpace", "TangentVector", "characteristic_radius", "cs", "ct", "sn",
    "BodySpec", "build_body", "certify_lambda_convex", "make_ellipse_like",
    "make_geodesic_sphere", "make_revolution_body", "make_two_ball_hull", "sphere_with_lambda",
]
