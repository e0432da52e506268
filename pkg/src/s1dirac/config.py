"""Experiment configuration: JSON schema, defaults and cross-field rules."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import jsonschema

from .geometry import (
    BaseTorus,
    BundleGeometry,
    CollapseFamily,
    ConnectionData,
    FiberProfile,
    GeometryError,
    SpinStructureSpec,
)

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "SOLVER_DEFAULTS"]

CHECKS = ("thm1_lower", "thm1_upper", "thm1_convergence", "thm2", "thm3")

SOLVER_DEFAULTS = {
    "grid": 256,
    "grid_factor": 8,
    "k_range": [-3, 3],
    "j_count": 20,
    "cutoff": None,
    "epsilon": 0.05,
    "tol_closed": 1e-6,
    "tol_numeric": 1e-4,
    "convergence_tol": 1e-3,
    "upper_window": 2,
}

_number = {"type": "number"}
_pairs = {
    "type": "array",
    "items": {"type": "array", "prefixItems": [{"type": "integer", "minimum": 1}, _number],
              "minItems": 2, "maxItems": 2},
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["geometry", "spin", "collapse"],
    "properties": {
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "profile"],
            "properties": {
                "type": {"enum": ["flat_torus", "warped_torus", "flux_bundle"]},
                "periods": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                            "minItems": 1},
                "area": {"type": "number", "exclusiveMinimum": 0},
                "flux": {"type": "integer"},
                "holonomy": {"type": "array", "items": _number},
                "profile": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["constant"],
                    "properties": {"constant": _number, "cos": _pairs, "sin": _pairs},
                },
            },
        },
        "spin": {
            "type": "object",
            "additionalProperties": False,
            "required": ["fiber"],
            "properties": {
                "fiber": {"enum": ["projectable", "nonprojectable"]},
                "base_twists": {"type": "array", "items": {"enum": [0, 0.5]}},
            },
        },
        "collapse": {
            "type": "object",
            "additionalProperties": False,
            "required": ["stages"],
            "properties": {
                "rule": {"enum": ["shrink", "shrink_oscillate"]},
                "stages": {"type": "array", "items": {"type": "integer", "minimum": 1},
                           "minItems": 1, "uniqueItems": True},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid": {"anyOf": [{"type": "integer", "minimum": 4}, {"const": "auto"}]},
                "grid_factor": {"type": "integer", "minimum": 1},
                "k_range": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "j_count": {"type": "integer", "minimum": 1},
                "cutoff": {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "null"}]},
                "epsilon": {"type": "number", "minimum": 0},
                "tol_closed": {"type": "number", "minimum": 0},
                "tol_numeric": {"type": "number", "minimum": 0},
                "convergence_tol": {"type": "number", "minimum": 0},
                "upper_window": {"type": "integer", "minimum": 1},
            },
        },
        "checks": {"type": "array", "items": {"enum": list(CHECKS)}, "uniqueItems": True},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment.  ``data`` is the normalized JSON with defaults filled."""

    data: dict

    @property
    def geometry_type(self) -> str:
        return self.data["geometry"]["type"]

    @property
    def solver(self) -> dict:
        return self.data["solver"]

    @property
    def checks(self) -> list[str]:
        return self.data["checks"]

    @property
    def stages(self) -> list[int]:
        return self.data["collapse"]["stages"]

    def base_geometry(self) -> BundleGeometry:
        return _build_geometry(self.data)

    def family(self) -> CollapseFamily:
        return CollapseFamily.from_rule(self.base_geometry(), self.stages,
                                        self.data["collapse"]["rule"])

    def grid_for(self, g: BundleGeometry) -> int | None:
        """Grid for a stage; ``None`` when the closed form is used."""
        if g.profile.is_constant:
            return None
        grid = self.solver["grid"]
        if grid == "auto":
            G = max(self.solver["grid_factor"] * g.profile.max_frequency, 4)
            return G + G % 2
        return grid

    def as_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.to_json())


def _normalize(data: dict) -> dict:
    d = copy.deepcopy(data)
    geo = d["geometry"]
    prof = geo["profile"]
    prof.setdefault("cos", [])
    prof.setdefault("sin", [])
    if geo["type"] == "flux_bundle":
        geo.setdefault("periods", [math.sqrt(geo["area"])] * 2 if "area" in geo else [1.0, 1.0])
    else:
        geo.setdefault("periods", [2 * math.pi])
    b = len(geo["periods"])
    geo.setdefault("holonomy", [0.0] * b)
    d["spin"].setdefault("base_twists", [0] * b)
    d["collapse"].setdefault("rule", "shrink")
    solver = dict(SOLVER_DEFAULTS)
    solver.update(d.get("solver", {}))
    d["solver"] = solver
    d.setdefault("checks", [])
    return d


def _build_geometry(d: dict) -> BundleGeometry:
    geo = d["geometry"]
    periods = tuple(geo["periods"])
    prof = geo["profile"]
    profile = FiberProfile(prof["constant"], tuple(map(tuple, prof["cos"])),
                           tuple(map(tuple, prof["sin"])), periods[0])
    spin = SpinStructureSpec(d["spin"]["fiber"] == "projectable",
                             tuple(Fraction(t).limit_denominator(2) for t in d["spin"]["base_twists"]))
    if geo["type"] == "flux_bundle":
        area = math.prod(periods)
        flux = geo["flux"]
        conn = ConnectionData(tuple(geo["holonomy"]), (((0, 1), 2 * math.pi * flux / area),), flux)
    else:
        conn = ConnectionData(tuple(geo["holonomy"]))
    return BundleGeometry(BaseTorus(periods), profile, conn, spin)


def _cross_field(d: dict) -> list[str]:
    errs = []
    geo = d["geometry"]
    kind = geo["type"]
    b = len(geo["periods"])
    prof = geo["profile"]
    constant = not prof["cos"] and not prof["sin"]
    if kind == "warped_torus" and b != 1:
        errs.append("geometry.periods: warped_torus needs exactly one base period")
    if kind in ("flat_torus", "flux_bundle") and not constant:
        errs.append(f"geometry.profile: {kind} needs a constant fiber profile")
    if kind == "flux_bundle":
        for key in ("area", "flux"):
            if key not in geo:
                errs.append(f"geometry.{key}: required for flux_bundle")
        if b != 2:
            errs.append("geometry.periods: flux_bundle needs a 2-dimensional base")
        elif "area" in geo and abs(math.prod(geo["periods"]) - geo["area"]) > 1e-9 * geo["area"]:
            errs.append("geometry.area: inconsistent with geometry.periods")
        if geo.get("flux") == 0:
            errs.append("geometry.flux: must be non-zero (use flat_torus)")
    elif "area" in geo or "flux" in geo:
        errs.append(f"geometry: area/flux only apply to flux_bundle, not {kind}")
    if len(geo["holonomy"]) != b:
        errs.append(f"geometry.holonomy: need {b} entries, one per base generator")
    if len(d["spin"]["base_twists"]) != b:
        errs.append(f"spin.base_twists: need {b} entries, one per base generator")
    proj = d["spin"]["fiber"] == "projectable"
    for c in d["checks"]:
        if proj and c in ("thm2", "thm3"):
            errs.append(f"checks: {c} needs a non-projectable fiber spin structure")
        if not proj and c.startswith("thm1"):
            errs.append(f"checks: {c} needs a projectable fiber spin structure")
    solver = d["solver"]
    lo, hi = solver["k_range"]
    if lo > hi:
        errs.append("solver.k_range: lower end exceeds upper end")
    if "thm1_convergence" in d["checks"] and not lo <= 0 <= hi:
        errs.append("solver.k_range: thm1_convergence needs sector k = 0 in range")
    if isinstance(solver["grid"], int) and solver["grid"] % 2:
        errs.append("solver.grid: must be even")
    if not constant:
        F = max(f for f, _ in prof["cos"] + prof["sin"])
        if d["collapse"]["rule"] == "shrink_oscillate":
            F *= max(d["collapse"]["stages"])
        need = solver["grid_factor"] * F
        need += need % 2
        if isinstance(solver["grid"], int) and solver["grid"] < need:
            errs.append(
                f"solver.grid: G={solver['grid']} under-resolves profile frequency {F}; "
                f"required G >= {need}"
            )
    if not errs:
        try:
            _build_geometry(d)
        except GeometryError as exc:
            errs.append(f"geometry: {exc}")
    return errs


def parse_config(text) -> ExperimentConfig:
    """Validate a JSON document (string or already-decoded dict).

    Raises :class:`ConfigError` listing every schema and consistency
    violation.  Missing solver settings are filled from ``SOLVER_DEFAULTS``.
    """
    if isinstance(text, (str, bytes)):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"not valid JSON: {exc}"]) from exc
    else:
        data = copy.deepcopy(text)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError(
            [f"{'.'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        )
    d = _normalize(data)
    errs = _cross_field(d)
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(d)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
