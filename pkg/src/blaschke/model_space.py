"""Closed-form geometry of the constant-curvature model spaces M(c).

Points live in an embedding:

* ``c > 0``: the sphere ``|x|^2 = 1/c`` in R^{m+1};
* ``c = 0``: R^m itself;
* ``c < 0``: the upper sheet ``<x, x> = 1/c`` of the hyperboloid in Minkowski
  space R^{m,1}, with the time coordinate at index 0.

Internally every computation is done on the canonical space of curvature
``sign(c)`` after scaling points by ``kappa = sqrt(|c|)``; lengths computed
there are divided by ``kappa`` on the way out.

All array-level methods of :class:`ModelSpace` broadcast over leading axes,
so a whole sampling grid can be pushed through a single call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, GeometryError

POINT_TOL = 1e-12
CUT_LOCUS_GUARD = 1e-9


def _kappa_sign(c: float) -> tuple[float, int]:
    if not math.isfinite(c):
        raise DomainError(f"curvature must be finite, got {c!r}")
    if c > 0:
        return math.sqrt(c), 1
    if c < 0:
        return math.sqrt(-c), -1
    return 1.0, 0


# -- generalized trigonometry -------------------------------------------------

def sn(c: float, t):
    """Generalized sine: the solution of y'' + c y = 0, y(0)=0, y'(0)=1."""
    k, sgn = _kappa_sign(c)
    t = np.asarray(t, dtype=float)
    if sgn > 0:
        out = np.sin(k * t) / k
    elif sgn < 0:
        out = np.sinh(k * t) / k
    else:
        out = t.copy()
    return out[()] if out.ndim == 0 else out


def cs(c: float, t):
    """Derivative of :func:`sn` (generalized cosine)."""
    k, sgn = _kappa_sign(c)
    t = np.asarray(t, dtype=float)
    if sgn > 0:
        out = np.cos(k * t)
    elif sgn < 0:
        out = np.cosh(k * t)
    else:
        out = np.ones_like(t)
    return out[()] if out.ndim == 0 else out


def ct(c: float, t):
    """Generalized cotangent ``sn'/sn``; the normal curvature of a geodesic
    sphere of radius ``t`` in M(c).

    Raises
    ------
    DomainError
        If ``t <= 0`` or, for ``c > 0``, ``t >= pi/sqrt(c)``.
    """
    k, sgn = _kappa_sign(c)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or (sgn > 0 and np.any(k * t >= math.pi)):
        raise DomainError("outside cotangent domain")
    if sgn > 0:
        out = k / np.tan(k * t)
    elif sgn < 0:
        out = k / np.tanh(k * t)
    else:
        out = 1.0 / t
    return out[()] if out.ndim == 0 else out


def half_chord(c: float, t):
    """``(1 - cs_c(t)) / c``, i.e. ``2 sn_c(t/2)^2``; equals ``t^2/2`` at c=0.

    This is the quantity that makes every law of cosines well conditioned
    for short sides.
    """
    return 2.0 * np.asarray(sn(c, np.asarray(t, dtype=float) / 2.0)) ** 2


def validate_sphere_constraints(c: float, lam: float) -> None:
    k, sgn = _kappa_sign(c)
    if not (lam > 0) or (sgn < 0 and not lam > k):
        raise DomainError(
            f"sphere constraints violated: lambda={lam!r} for c={c!r}"
        )


def characteristic_radius(c: float, lam: float) -> float:
    """Radius ``R`` of the geodesic sphere with normal curvature ``lam``,
    i.e. the solution of ``ct_c(R) = lam``."""
    validate_sphere_constraints(c, lam)
    k, sgn = _kappa_sign(c)
    if sgn > 0:
        return math.atan(k / lam) / k
    if sgn < 0:
        return math.atanh(k / lam) / k
    return 1.0 / lam


def invert_ct_bisection(c: float, lam: float, tol: float = 1e-13) -> float:
    """Solve ``ct_c(R) = lam`` by bracketing bisection.

    Independent of :func:`characteristic_radius`; used to cross-check it.
    """
    validate_sphere_constraints(c, lam)
    k, sgn = _kappa_sign(c)
    lo = 1e-300
    hi = math.pi / k if sgn > 0 else 1.0
    if sgn <= 0:
        while float(ct(c, hi)) > lam:
            hi *= 2.0
    else:
        hi = hi * (1 - 1e-16)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if float(ct(c, mid)) > lam:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def unit_sphere_measure(k: int) -> float:
    """Total measure of the unit k-sphere S^k in R^{k+1}."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def sphere_area(c: float, m: int, R: float) -> float:
    """(m-1)-measure of a geodesic sphere of radius ``R`` in M^m(c)."""
    _check_radius(c, m, R)
    return unit_sphere_measure(m - 1) * float(sn(c, R)) ** (m - 1)


def ball_volume(c: float, m: int, R: float) -> float:
    """m-volume of a geodesic ball of radius ``R`` in M^m(c)."""
    _check_radius(c, m, R)
    k, sgn = _kappa_sign(c)
    if m == 2:
        return 2.0 * math.pi * float(half_chord(c, R))
    if m == 3:
        if sgn > 0:
            return math.pi / k**3 * (2 * k * R - math.sin(2 * k * R))
        if sgn < 0:
            return math.pi / k**3 * (math.sinh(2 * k * R) - 2 * k * R)
        return 4.0 / 3.0 * math.pi * R**3
    val, _ = integrate.quad(
        lambda t: sphere_area(c, m, t) if t > 0 else 0.0,
        0.0, R, epsabs=0.0, epsrel=1e-12, limit=200,
    )
    return val


def _check_radius(c: float, m: int, R: float) -> None:
    k, sgn = _kappa_sign(c)
    if m < 2:
        raise DomainError(f"dimension must be >= 2, got {m}")
    if not R > 0 or (sgn > 0 and R > math.pi / k * (1 + 1e-15)):
        raise DomainError(f"radius {R!r} outside the model space for c={c!r}")


# -- triangles ----------------------------------------------------------------

def triangle_side(c: float, a: float, b: float, angle: float) -> float:
    """Side opposite to ``angle`` in a triangle of M(c) with adjacent sides
    ``a``, ``b`` (two sides and the included angle -> third side).

    Uses the haversine form of the law of cosines,
    ``H(z) = H(a - b) + 2 sn(a) sn(b) sin^2(angle/2)`` with ``H = half_chord``,
    valid uniformly in c.
    """
    k, sgn = _kappa_sign(c)
    if a < 0 or b < 0:
        raise DomainError("not a valid triangle: negative side")
    h = float(half_chord(c, a - b)) + 2.0 * float(sn(c, a) * sn(c, b)) * math.sin(angle / 2) ** 2
    return _inverse_half_chord(c, h)


def _inverse_half_chord(c: float, h: float) -> float:
    k, sgn = _kappa_sign(c)
    h = max(h, 0.0)
    if sgn > 0:
        x = min(math.sqrt(h / 2.0) * k, 1.0)
        return 2.0 * math.asin(x) / k
    if sgn < 0:
        return 2.0 * math.asinh(math.sqrt(h / 2.0) * k) / k
    return math.sqrt(2.0 * h)


def triangle_angle(c: float, a: float, b: float, opposite: float, slack: float = 1e-12) -> float:
    """Angle between sides ``a`` and ``b`` of a triangle of M(c) whose third
    side is ``opposite`` (three sides -> angle).

    Raises
    ------
    DomainError
        If the three lengths violate the triangle inequality (or, for
        ``c > 0``, the perimeter bound ``2 pi / sqrt(c)``).
    """
    k, sgn = _kappa_sign(c)
    sides = (a, b, opposite)
    scale = max(1.0, *sides)
    if min(sides) < 0:
        raise DomainError("not a valid triangle")
    if opposite > a + b + slack * scale or opposite < abs(a - b) - slack * scale:
        raise DomainError("not a valid triangle")
    if sgn > 0 and a + b + opposite > 2 * math.pi / k + slack * scale:
        raise DomainError("not a valid triangle")
    denom = 2.0 * float(sn(c, a) * sn(c, b))
    if denom <= 0:
        raise DomainError("not a valid triangle: degenerate side")
    s2 = (float(half_chord(c, opposite)) - float(half_chord(c, a - b))) / denom
    s2 = min(max(s2, 0.0), 1.0)
    if s2 < 0.5:
        return 2.0 * math.asin(math.sqrt(s2))
    return math.acos(1.0 - 2.0 * s2)


def model_triangle_angle(c: float, a: float, b: float, opposite: float) -> float:
    """Alias of :func:`triangle_angle` (sides ``a``, ``b`` enclose the angle)."""
    return triangle_angle(c, a, b, opposite)


# -- points and tangent vectors -----------------------------------------------

@dataclass(frozen=True)
class ModelSpace:
    """The m-dimensional model space of constant curvature ``c``."""

    c: float
    m: int = 2
    kappa: float = field(init=False, repr=False)
    sign: int = field(init=False, repr=False)

    def __post_init__(self):
        k, sgn = _kappa_sign(float(self.c))
        if self.m < 2:
            raise DomainError(f"dimension must be >= 2, got {self.m}")
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "sign", sgn)
        d = np.ones(self.m if sgn == 0 else self.m + 1)
        if sgn < 0:
            d[0] = -1.0
        d.flags.writeable = False
        object.__setattr__(self, "_diag", d)

    @property
    def ambient_dim(self) -> int:
        return self.m if self.sign == 0 else self.m + 1

    @property
    def diameter(self) -> float:
        return math.pi / self.kappa if self.sign > 0 else math.inf

    def _metric_diag(self) -> np.ndarray:
        return self._diag

    def inner(self, x, y):
        """Ambient bilinear form (Minkowski for c < 0, Euclidean otherwise)."""
        if self.sign < 0:
            return (np.asarray(x, dtype=float) * np.asarray(y, dtype=float)) @ self._diag
        return np.einsum("...i,...i->...", np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def norm(self, v):
        return np.sqrt(np.maximum(self.inner(v, v), 0.0))

    def origin(self) -> np.ndarray:
        o = np.zeros(self.ambient_dim)
        if self.sign != 0:
            o[0] = 1.0 / self.kappa
        return o

    def tangent_basis(self, p) -> np.ndarray:
        """Orthonormal basis (rows) of the tangent space at ``p``."""
        p = np.asarray(p, dtype=float)
        if self.sign == 0:
            return np.eye(self.m)
        n = self.ambient_dim
        vecs = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            v = self.to_tangent(p, e)
            for w in vecs:
                v = v - self.inner(v, w) * w
            nv = float(self.norm(v))
            if nv > 1e-8:
                vecs.append(v / nv)
            if len(vecs) == self.m:
                break
        return np.array(vecs)

    def check_point(self, x, tol: float = POINT_TOL) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ambient_dim:
            raise GeometryError(
                f"expected ambient dimension {self.ambient_dim}, got {x.shape[-1]}"
            )
        if self.sign == 0:
            return
        resid = np.abs(self.inner(x, x) * self.c - 1.0)
        if np.any(resid > tol):
            raise GeometryError(f"point off the model space (residual {np.max(resid):.3e})")
        if self.sign < 0 and np.any(x[..., 0] <= 0):
            raise GeometryError("point on the lower sheet of the hyperboloid")

    def project(self, x) -> np.ndarray:
        """Nearest-ish point of the model space (radial renormalization)."""
        x = np.asarray(x, dtype=float)
        if self.sign == 0:
            return x.copy()
        if self.sign > 0:
            return x / (np.linalg.norm(x, axis=-1, keepdims=True) * self.kappa)
        spatial = x[..., 1:]
        t = np.sqrt(1.0 / self.kappa**2 + np.sum(spatial**2, axis=-1, keepdims=True))
        return np.concatenate([t, spatial], axis=-1)

    def to_tangent(self, p, v) -> np.ndarray:
        """Orthogonal projection of an ambient vector onto T_p."""
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.sign == 0:
            return v.copy()
        return v - (self.c * self.inner(p, v))[..., None] * p

    # geodesics ---------------------------------------------------------------

    def distance(self, p, q):
        """Geodesic distance; broadcasts over leading axes."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.sign == 0:
            return np.linalg.norm(q - p, axis=-1)
        k = self.kappa
        ph, qh = k * p, k * q
        if self.sign > 0:
            chord = np.linalg.norm(ph - qh, axis=-1)
            anti = np.linalg.norm(ph + qh, axis=-1)
            near = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
            far = math.pi - 2.0 * np.arcsin(np.clip(anti / 2.0, 0.0, 1.0))
            return np.where(chord < anti, near, far) / k
        d = ph - qh
        sq = np.maximum(self.inner(d, d), 0.0)
        near = 2.0 * np.arcsinh(np.sqrt(sq) / 2.0)
        cosh_d = np.maximum(-self.inner(ph, qh), 1.0)
        far = np.arccosh(cosh_d)
        return np.where(cosh_d < 1.5, near, far) / k

    def exp(self, p, w):
        """Exponential map ``exp_p(w)`` for tangent ``w`` at ``p``."""
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.sign == 0:
            return p + w
        n = self.norm(w)
        safe = np.where(n > 0, n, 1.0)
        ratio = np.where(n > 0, sn(self.c, n) / safe, 1.0)
        return cs(self.c, n)[..., None] * p + np.asarray(ratio)[..., None] * w

    def log(self, p, q, guard: float = CUT_LOCUS_GUARD):
        """Inverse exponential map; ``exp_p(log_p(q)) = q``.

        Raises
        ------
        GeometryError
            For (nearly) antipodal pairs on the sphere.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.sign == 0:
            return q - p
        d = self.distance(p, q)
        if self.sign > 0 and np.any(d > math.pi / self.kappa - guard):
            raise GeometryError("at cut locus")
        proj = q - (self.c * self.inner(p, q))[..., None] * p
        n = self.norm(proj)
        scale = np.where(n > 0, d / np.where(n > 0, n, 1.0), 0.0)
        return np.asarray(scale)[..., None] * proj

    def geodesic(self, p, u, t):
        """Unit-speed geodesic through ``p`` with unit initial velocity ``u``."""
        t = np.asarray(t, dtype=float)
        return self.exp(p, t[..., None] * np.asarray(u, dtype=float))

    def angle(self, p, u, v):
        """Angle in [0, pi] between tangent vectors ``u``, ``v`` at ``p``."""
        nu = self.norm(u)
        nv = self.norm(v)
        if np.any(nu == 0) or np.any(nv == 0):
            raise GeometryError("angle undefined for a zero vector")
        uh = np.asarray(u) / np.asarray(nu)[..., None]
        vh = np.asarray(v) / np.asarray(nv)[..., None]
        return 2.0 * np.arctan2(self.norm(uh - vh), self.norm(uh + vh))

    def from_tangent_coords(self, p, coords) -> np.ndarray:
        """Ambient vector at ``p`` with the given components in
        :meth:`tangent_basis`."""
        return np.asarray(coords, dtype=float) @ self.tangent_basis(p)


# -- object-level wrappers -----------------------------------------------------

@dataclass(frozen=True)
class ModelPoint:
    coords: np.ndarray
    c: float

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    @property
    def space(self) -> ModelSpace:
        m = len(self.coords) - (0 if self.c == 0 else 1)
        return ModelSpace(self.c, m)

    def validate(self, tol: float = POINT_TOL) -> "ModelPoint":
        self.space.check_point(self.coords, tol)
        return self


@dataclass(frozen=True)
class TangentVector:
    base: ModelPoint
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=float))

    def validate(self, tol: float = POINT_TOL) -> "TangentVector":
        sp = self.base.space
        if sp.sign != 0:
            r = abs(float(sp.inner(self.base.coords, self.vec)))
            if r > tol * max(1.0, float(np.linalg.norm(self.vec))):
                raise GeometryError(f"vector not tangent (residual {r:.3e})")
        return self


def _same_space(p: ModelPoint, q: ModelPoint) -> ModelSpace:
    if p.c != q.c or len(p.coords) != len(q.coords):
        raise GeometryError("points belong to different model spaces")
    return p.space


def distance(p: ModelPoint, q: ModelPoint) -> float:
    return float(_same_space(p, q).distance(p.coords, q.coords))


def exp_map(v: TangentVector, t: float = 1.0) -> ModelPoint:
    sp = v.base.space
    return ModelPoint(sp.exp(v.base.coords, t * v.vec), v.base.c)


def log_map(p: ModelPoint, q: ModelPoint) -> TangentVector:
    sp = _same_space(p, q)
    return TangentVector(p, sp.log(p.coords, q.coords))


def angle(u: TangentVector, v: TangentVector) -> float:
    if not np.allclose(u.base.coords, v.base.coords, atol=1e-12):
        raise GeometryError("tangent vectors at different base points")
    return float(u.base.space.angle(u.base.coords, u.vec, v.vec))


__all__ = [
    "ModelSpace", "ModelPoint", "TangentVector",
    "sn", "cs", "ct", "half_chord", "characteristic_radius", "invert_ct_bisection",
    "validate_sphere_constraints", "sphere_area", "ball_volume", "unit_sphere_measure",
    "triangle_side", "triangle_angle", "model_triangle_angle",
    "distance", "exp_map", "log_map", "angle",
]
