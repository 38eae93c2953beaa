"""Scenario documents: loading, validation and defaults."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .. import __version__
from ..convex_body import GENERATORS
from ..errors import DomainError, ScenarioError
from ..horoball import check_horoball_regime
from ..model_space import validate_sphere_constraints

# Default tolerances, each overridable per scenario or from the command line.
DEFAULT_TOLERANCES = {
    "inclusion": 1e-6,        # rolling, horoball, diameter margins
    "residual": 1e-4,         # curvature identity residual
    "agreement": 1e-6,        # closed form vs limit, Toponogov margins
    "quadrature": 1e-8,       # relative change under grid halving
    "volume_rel": 1e-6,       # relative volume / boundary margins
    "certification": 1e-9,    # lambda-convexity certificate
    "gradient": 1e-9,         # gradient decomposition residuals
    "speed": 1e-5,            # |dt/ds| - sin(phi) along trajectories
    "convergence_ratio": 1.8,
    "rac": 1e-6,
    "monotonicity": 1e-6,
    "equality": 1e-7,         # |f| on the comparison sphere
    "negative_control": 1e-3,
    "busemann_seed": 1e-8,
    "reversed": 1e-2,
    "penetration": 1e-3,
    "control": 1e-9,
    "half_space": 1e-9,
    "rolling2d": 1e-5,
    "clearance": 1e-3,
}

MODULES = ("rolling", "rac", "liouville", "horoball", "riemannian2d", "counterexample")


def _schema(name: str) -> dict:
    text = resources.files("blaschke.schemas").joinpath(name).read_text()
    return json.loads(text)


def scenario_schema() -> dict:
    return _schema("scenario.schema.json")


def report_schema() -> dict:
    return _schema("report.schema.json")


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


@dataclass(frozen=True)
class Scenario:
    id: str
    module: str
    c: float
    lam: float | None
    body: dict | None
    resolution: int | None
    seeds: object
    tolerances: dict
    options: dict
    raw: dict = field(repr=False)
    source: str = ""

    def tol(self, key: str) -> float:
        return float(self.tolerances[key])

    @property
    def input_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(f"{canon}|{__version__}".encode()).hexdigest()

    def rng(self) -> np.random.Generator:
        """Generator seeded from the scenario id."""
        digest = hashlib.sha256(self.id.encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    def body_params(self) -> dict:
        params = dict(self.body["params"])
        params.setdefault("c", self.c)
        if self.resolution is not None:
            params["resolution"] = self.resolution
        return params


def parse_overrides(items) -> dict:
    """``["inclusion=1e-5", ...]`` to a dict of floats."""
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ScenarioError(f"malformed tolerance override {item!r}", "tolerances")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ScenarioError(f"tolerance {key!r} is not a number", f"tolerances.{key}") from None
    return out


def scenario_from_dict(doc: dict, source: str = "", overrides: dict | None = None) -> Scenario:
    validator = jsonschema.Draft202012Validator(scenario_schema())
    # report the most specific error first: deepest path, then document order
    errors = sorted(validator.iter_errors(doc), key=lambda e: (-len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _path(err))
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in {**doc.get("tolerances", {}), **(overrides or {})}.items():
        if key not in DEFAULT_TOLERANCES:
            raise ScenarioError(f"unknown tolerance {key!r}", f"tolerances.{key}")
        tolerances[key] = float(val)
    body = doc.get("body")
    if body is not None and body["generator"] not in GENERATORS:
        raise ScenarioError(f"unknown generator {body['generator']!r}", "body.generator")
    lam = doc.get("lambda")
    c = float(doc["c"])
    try:
        if lam is not None and doc["module"] != "riemannian2d":
            validate_sphere_constraints(c, lam)
        if doc["module"] == "horoball" and lam is not None:
            check_horoball_regime(c, lam)
    except DomainError as exc:
        raise ScenarioError(str(exc), "lambda") from None
    return Scenario(
        id=doc["id"], module=doc["module"], c=c, lam=None if lam is None else float(lam),
        body=body, resolution=doc.get("resolution"), seeds=doc.get("seeds"),
        tolerances=tolerances, options=dict(doc.get("options", {})), raw=doc, source=source,
    )


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"no such scenario file: {path}", "<file>") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}", "<file>") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object", "<root>")
    return scenario_from_dict(doc, str(path), overrides)


def bundled_scenarios_dir() -> Path:
    return Path(str(resources.files("blaschke.scenarios")))
