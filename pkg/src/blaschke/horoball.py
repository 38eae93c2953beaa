"""Busemann functions and horoballs in the hyperbolic model H^m(c).

The closed form pairs a point with the null vector of the ray on the
hyperboloid; the limit ``t - d(q, gamma(t))`` is kept as an independent
check. ``verify_horoball_rolling`` checks that a body with boundary
curvature at least ``sqrt(-c)`` lies in the horoball tangent to it at each
seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .convex_body import BodySpec, ConvexityCertificate, certify_lambda_convex, first_order_geometry
from .errors import CertificationError, DomainError
from .model_space import ModelSpace
from .rolling import default_seeds

T_MAX = 30.0


@dataclass(frozen=True)
class BusemannRay:
    """Unit-speed geodesic ray ``gamma(t) = exp_base(t dir)``.

    ``xi`` is the null vector ``kappa * base + dir`` of the canonical
    (curvature -1) hyperboloid; it represents the ideal endpoint.
    """

    space: ModelSpace
    base: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        sp = self.space
        if sp.sign >= 0:
            raise DomainError("Busemann requires negative curvature")
        base = np.asarray(self.base, dtype=float)
        v = sp.to_tangent(base, np.asarray(self.dir, dtype=float))
        n = float(sp.norm(v))
        if n == 0:
            raise DomainError("ray direction must be nonzero")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "dir", v / n)

    @classmethod
    def from_point(cls, c: float, base, direction) -> "BusemannRay":
        base = np.asarray(base, dtype=float)
        return cls(ModelSpace(c, base.shape[-1] - 1), base, direction)

    @property
    def xi(self) -> np.ndarray:
        return self.space.kappa * self.base + self.dir

    def point(self, t) -> np.ndarray:
        v = np.multiply.outer(np.asarray(t, dtype=float), self.dir)
        return self.space.exp(np.broadcast_to(self.base, v.shape), v)

    def reversed(self) -> "BusemannRay":
        return BusemannRay(self.space, self.base, -self.dir)


def busemann_closed_form(ray: BusemannRay, q) -> np.ndarray:
    """``b(q) = -log(-<kappa q, xi>) / kappa``, vectorized over ``q``."""
    sp = ray.space
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != sp.ambient_dim:
        raise DomainError("point does not belong to the ray's model space")
    k = sp.kappa
    pairing = -sp.inner(k * q, ray.xi)
    out = -np.log(pairing) / k
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BusemannLimit:
    value: float
    increment: float
    times: np.ndarray
    values: np.ndarray


def busemann_by_limit(ray: BusemannRay, q, t_max: float = T_MAX, steps: int = 24) -> BusemannLimit:
    """``t - d(q, gamma(t))`` at geometrically spaced ``t`` up to ``t_max``.

    The sequence is non-decreasing in ``t`` and converges like
    ``exp(-2 kappa t)``; ``increment`` is the last change.
    """
    q = np.asarray(q, dtype=float)
    times = t_max * 2.0 ** (-np.arange(steps - 1, -1, -1, dtype=float) / 2.0)
    pts = ray.space.exp(np.broadcast_to(ray.base, (steps, ray.base.size)),
                        times[:, None] * ray.dir)
    vals = times - ray.space.distance(pts, np.broadcast_to(q, pts.shape))
    return BusemannLimit(float(vals[-1]), float(abs(vals[-1] - vals[-2])), times, vals)


@dataclass(frozen=True)
class HoroballResult:
    seed_index: int
    reversed: bool
    b_seed: float
    min_b: float
    argmin_index: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.min_b >= -self.tol


def check_horoball_regime(c: float, lam: float) -> None:
    if not (c < 0 and lam >= math.sqrt(-c)):
        raise DomainError("horoball constraints violated")


def verify_horoball_rolling(body: BodySpec, lam: float, seed_points: Sequence[int] | None = None,
                            tol: float = 1e-6, certificate: ConvexityCertificate | None = None,
                            reverse: bool = False) -> list[HoroballResult]:
    """Minimum over the grid of the Busemann function of the inward ray at
    each seed. ``reverse=True`` uses the outward ray (negative control)."""
    check_horoball_regime(body.c, lam)
    cert = certificate or certify_lambda_convex(body, lam)
    if not cert.passed:
        raise CertificationError("body not certified lambda-convex")
    seeds = default_seeds(body) if seed_points is None else np.asarray(seed_points, dtype=int)
    geo = first_order_geometry(body)
    out = []
    for i in seeds:
        i = int(i)
        d = -geo.nu[i] if reverse else geo.nu[i]
        ray = BusemannRay(body.space, geo.X[i], d)
        b = busemann_closed_form(ray, geo.X)
        j = int(np.argmin(b))
        out.append(HoroballResult(i, reverse, float(b[i]), float(b[j]), j, float(tol)))
    return out


def horocycle(ray: BusemannRay, level: float, half_length: float = 3.0, n: int = 257) -> np.ndarray:
    """Points of the level set ``b = level`` in H^2(c), as a polyline.

    In canonical coordinates the horocycle through ``x = gamma(level)`` is
    ``x + s e + (s^2 / 2) xi'`` with ``e`` the unit normal to the ray and
    ``xi'`` the null vector rescaled so that ``<x, xi'> = -1``.
    """
    sp = ray.space
    if sp.m != 2:
        raise DomainError("horocycles are exported for m = 2 only")
    k = sp.kappa
    x = k * ray.point(level)
    xi = ray.xi * math.exp(k * level)
    basis = sp.tangent_basis(ray.base)
    b0 = basis[int(np.argmin(np.abs(sp.inner(basis, ray.dir))))]
    e = b0 - sp.inner(b0, ray.dir) * ray.dir
    e = e / sp.norm(e)
    s = np.linspace(-half_length, half_length, n) * k
    pts = x + s[:, None] * e + 0.5 * (s * s)[:, None] * xi
    return pts / k


def export_level_sets(ray: BusemannRay, levels, path, half_length: float = 3.0, n: int = 257) -> None:
    """CSV rows ``level, index, x0, x1, x2`` for each horocycle polyline."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "index", "x0", "x1", "x2"])
        for lev in levels:
            for j, p in enumerate(horocycle(ray, float(lev), half_length, n)):
                w.writerow([repr(float(lev)), j] + [repr(float(v)) for v in p])
