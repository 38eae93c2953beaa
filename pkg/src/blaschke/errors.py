"""Exception hierarchy shared by all verifiers."""


class BlaschkeError(Exception):
    """Base class for toolkit errors."""


class DomainError(BlaschkeError, ValueError):
    """An argument lies outside the domain of an operation."""


class GeometryError(BlaschkeError):
    """A geometric precondition failed (off-manifold point, cut locus, ...)."""


class ImmersionError(GeometryError):
    """Chart derivatives are degenerate at a parameter value."""


class IntegrationError(BlaschkeError):
    """An ODE integration or shooting solve did not converge."""


class CertificationError(BlaschkeError):
    """A hypothesis required by a verifier could not be certified."""


class QuadratureError(BlaschkeError):
    """A quadrature estimate did not reach its tolerance."""


class ScenarioError(BlaschkeError):
    """A scenario document failed to parse or validate."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
