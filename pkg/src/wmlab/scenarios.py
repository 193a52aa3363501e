"""Scenario schema, geometry building, refinement ladders and check dispatch.

A config is a JSON object {"scenarios": [...]} where each scenario names a
geometry, an ambient space, a density, the Bakry-Emery parameter m, the
checks to run and the number of refinement levels.  Unknown keys are
errors: a silently ignored tolerance name could fake a pass.
"""

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import heintze, reilly_ros
from .density import BakryEmeryParams, DensityField, certify_nonneg_BE
from .errors import (
    ConfigError,
    HypothesisFailed,
    LabError,
    NonConvexCone,
    NotCMC,
    NotNearEquality,
    OutOfBall,
)
from .fields import computed_immersion_fields
from .generators import (
    gen_annulus,
    gen_circle,
    gen_disk,
    gen_icosphere,
    gen_wedge,
    scaled_sphere_with_analytic_fields,
)
from .mesh import linear_transform, radial_perturbation, translate
from .meshfiles import load_mesh
from .report import CheckReport, _jsonable
from .spaceform import AmbientSpace

PLANAR_CHECKS = {"ros", "cone", "linear_isoperimetric", "reilly"}
CLOSED_CHECKS = {"eigenbound_max", "eigenbound_mean", "divergence_chain", "gradient_bound", "equality_diagnostic"}
MESHLESS_CHECKS = {"linear_isoperimetric_ball", "shrinker", "bakry_emery"}
ALL_CHECKS = PLANAR_CHECKS | CLOSED_CHECKS | MESHLESS_CHECKS

GEOMETRY_KINDS = {"disk", "circle", "icosphere", "wedge", "annulus",
                  "geodesic_sphere", "ball", "file", "none"}

_TRANSFORM_KEYS = {"scale", "translate", "radial_noise"}


@dataclass
class Scenario:
    name: str
    geometry: dict
    ambient: dict
    density: dict
    m: object
    checks: list
    refinement_levels: int = 1
    tolerances: dict = dc_field(default_factory=dict)

    def resolved(self):
        return {
            "name": self.name,
            "geometry": self.geometry,
            "ambient": self.ambient,
            "density": self.density,
            "m": self.m,
            "checks": self.checks,
            "refinement_levels": self.refinement_levels,
            "tolerances": self.tolerances,
        }


_SCENARIO_KEYS = {"name", "geometry", "ambient", "density", "m", "checks",
                  "refinement_levels", "tolerances"}
_TOLERANCE_KEYS = {"pass_rel", "equality", "lemma_rel", "bound_abs"}


def parse_config(source):
    """Load and validate a config from a path, JSON text, or dict."""
    if isinstance(source, dict):
        cfg = source
    else:
        text = source if str(source).lstrip().startswith("{") else open(source).read()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}")
    extra = set(cfg) - {"scenarios"}
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    if "scenarios" not in cfg or not isinstance(cfg["scenarios"], list):
        raise ConfigError("config needs a 'scenarios' list")
    scenarios = [_parse_scenario(s, i) for i, s in enumerate(cfg["scenarios"])]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique")
    return scenarios


def _parse_scenario(raw, index):
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario #{index} must be an object")
    extra = set(raw) - _SCENARIO_KEYS
    if extra:
        raise ConfigError(f"scenario #{index}: unknown keys {sorted(extra)}")
    for key in ("name", "geometry", "checks"):
        if key not in raw:
            raise ConfigError(f"scenario #{index}: missing '{key}'")
    sc = Scenario(
        name=str(raw["name"]),
        geometry=dict(raw["geometry"]),
        ambient=dict(raw.get("ambient", {"delta": 0.0, "dim": 2})),
        density=dict(raw.get("density", {"kind": "constant", "c": 0.0})),
        m=raw.get("m", "inf"),
        checks=list(raw["checks"]),
        refinement_levels=int(raw.get("refinement_levels", 1)),
        tolerances=dict(raw.get("tolerances", {})),
    )
    _validate_scenario(sc)
    return sc


def _check_id(entry):
    return entry["id"] if isinstance(entry, dict) else entry


def _check_params(entry):
    return dict(entry.get("params", {})) if isinstance(entry, dict) else {}


def _validate_scenario(sc):
    name = sc.name
    kind = sc.geometry.get("kind")
    if kind not in GEOMETRY_KINDS:
        raise ConfigError(f"{name}: unknown geometry kind {kind!r}")
    extra = set(sc.ambient) - {"delta", "dim"}
    if extra:
        raise ConfigError(f"{name}: unknown ambient keys {sorted(extra)}")
    extra = set(sc.tolerances) - _TOLERANCE_KEYS
    if extra:
        raise ConfigError(f"{name}: unknown tolerance keys {sorted(extra)}")
    if sc.refinement_levels < 1:
        raise ConfigError(f"{name}: refinement_levels must be >= 1")
    delta = float(sc.ambient.get("delta", 0.0))
    for entry in sc.checks:
        cid = _check_id(entry)
        if cid not in ALL_CHECKS:
            raise ConfigError(f"{name}: unknown check {cid!r}")
        if isinstance(entry, dict):
            extra = set(entry) - {"id", "params"}
            if extra:
                raise ConfigError(f"{name}: unknown check keys {sorted(extra)}")
        if cid == "eigenbound_max" and delta >= 0:
            raise ConfigError(f"{name}: eigenbound_max requires delta < 0")
        if cid in ("eigenbound_mean", "equality_diagnostic") and delta < 0:
            raise ConfigError(f"{name}: {cid} requires delta >= 0")
        if cid in PLANAR_CHECKS and kind not in ("disk", "wedge", "annulus", "file"):
            raise ConfigError(f"{name}: {cid} needs a planar-domain geometry")
        if cid in PLANAR_CHECKS and delta != 0.0:
            raise ConfigError(f"{name}: planar-domain checks run in the flat ambient")
        if cid in CLOSED_CHECKS and kind not in ("circle", "icosphere",
                                                 "geodesic_sphere", "file"):
            raise ConfigError(f"{name}: {cid} needs a closed curve/surface geometry")
        if kind in ("circle", "icosphere", "disk", "wedge", "annulus") and delta != 0.0:
            raise ConfigError(
                f"{name}: embedded meshes live in the flat ambient; "
                "use geodesic_sphere for curved space forms")
        if cid == "linear_isoperimetric_ball" and kind != "ball":
            raise ConfigError(f"{name}: the analytic ball check needs geometry kind 'ball'")
        if cid == "cone" and kind not in ("wedge", "file"):
            raise ConfigError(f"{name}: the cone check needs a wedge geometry")
    # density spec must parse (center_offset is stripped for the curved path)
    dspec = dict(sc.density)
    dspec.pop("center_offset", None)
    DensityField.from_spec(dspec)
    dim = int(sc.ambient.get("dim", 2))
    BakryEmeryParams(sc.m, dim)


@dataclass
class GeometryBundle:
    mesh: object
    fields: object
    space: AmbientSpace
    density: DensityField
    h: float


def _density_for(sc):
    spec = dict(sc.density)
    offset = float(spec.pop("center_offset", 0.0))
    return DensityField.from_spec(spec), offset


def build_geometry(sc, level=0):
    """Instantiate the scenario geometry at the given refinement level."""
    g = dict(sc.geometry)
    kind = g.pop("kind")
    transform = {k: g.pop(k) for k in list(g) if k in _TRANSFORM_KEYS}
    delta = float(sc.ambient.get("delta", 0.0))
    dim = int(sc.ambient.get("dim", 2))
    space = AmbientSpace(delta, dim) if delta != 0.0 or kind == "geodesic_sphere" \
        else AmbientSpace(0.0, dim)
    density, offset = _density_for(sc)
    fields = None
    try:
        if kind == "disk":
            mesh = gen_disk(g.pop("radius", 1.0), int(g.pop("n_rings", 4)) * 2**level)
        elif kind == "circle":
            mesh = gen_circle(g.pop("radius", 1.0), int(g.pop("n_segments", 32)) * 2**level)
        elif kind == "icosphere":
            mesh = gen_icosphere(g.pop("radius", 1.0), int(g.pop("subdivisions", 1)) + level)
        elif kind == "annulus":
            mesh = gen_annulus(g.pop("r_inner"), g.pop("r_outer"),
                               int(g.pop("n_rings", 4)) * 2**level)
        elif kind == "wedge":
            eps = g.pop("eps_vertex", None)
            if isinstance(eps, list):
                eps = eps[min(level, len(eps) - 1)]
            mesh = gen_wedge(g.pop("radius", 1.0), float(g.pop("opening_angle")),
                             int(g.pop("n_rings", 6)) * 2**level, eps_vertex=eps,
                             arc_center_offset=float(g.pop("arc_center_offset", 0.0)))
        elif kind == "geodesic_sphere":
            res = int(g.pop("resolution", 2))
            res = res * 2**level if dim == 2 else res + level
            mesh, fields = scaled_sphere_with_analytic_fields(
                space, float(g.pop("geodesic_radius")), res, density,
                density_offset=offset)
        elif kind == "file":
            mesh = load_mesh(g.pop("path"))
        elif kind in ("ball", "none"):
            ball = {"radius": g.pop("radius", 1.0), "n": g.pop("n", dim - 1)}
            if g:
                raise ConfigError(f"{sc.name}: unknown geometry keys {sorted(g)}")
            return GeometryBundle(None, ball, space, density, float("nan"))
        else:  # pragma: no cover
            raise ConfigError(f"unknown geometry kind {kind!r}")
    except LabError:
        raise
    if g:
        raise ConfigError(f"{sc.name}: unknown geometry keys {sorted(g)}")
    mesh = _apply_transform(mesh, transform)
    if fields is None and mesh.cell_kind in ("curve", "surface"):
        fields = computed_immersion_fields(mesh, space, density)
    return GeometryBundle(mesh, fields, space, density, mesh.mesh_size())


def _apply_transform(mesh, transform):
    extra = set(transform) - _TRANSFORM_KEYS
    if extra:
        raise ConfigError(f"unknown transform keys {sorted(extra)}")
    if "scale" in transform:
        s = transform["scale"]
        mesh = linear_transform(mesh, s if isinstance(s, list) else [s] * mesh.vertices.shape[1])
    if "radial_noise" in transform:
        spec = dict(transform["radial_noise"])
        mesh = radial_perturbation(mesh, float(spec.pop("amplitude")),
                                   seed=int(spec.pop("seed", 0)))
        if spec:
            raise ConfigError(f"unknown radial_noise keys {sorted(spec)}")
    if "translate" in transform:
        mesh = translate(mesh, transform["translate"])
    return mesh


def _reilly_u(params, bundle):
    spec = dict(params.get("u", {"kind": "disk_torsion"}))
    kind = spec.pop("kind", "disk_torsion")
    if kind == "disk_torsion":
        u = reilly_ros.disk_torsion(spec.pop("radius", 1.0))
    elif kind == "quadratic":
        u = reilly_ros.quadratic(np.asarray(spec.pop("A")),
                                 spec.pop("b", None), spec.pop("c", 0.0))
    else:
        raise ConfigError(f"unknown reilly test function {kind!r}")
    if spec:
        raise ConfigError(f"unknown reilly u keys {sorted(spec)}")
    return u


def run_check(cid, params, sc, bundle):
    """Dispatch one check on a built geometry bundle."""
    d = int(sc.ambient.get("dim", 2))
    be = BakryEmeryParams(sc.m, d)
    tol = sc.tolerances
    pass_rel = float(tol.get("pass_rel", 1e-9))
    eq_tol = tol.get("equality")
    if cid == "ros":
        return reilly_ros.check_ros(bundle.mesh, bundle.density, be,
                                    tolerance_rel=pass_rel, equality_tol=eq_tol)
    if cid == "cone":
        return reilly_ros.check_cone(bundle.mesh, bundle.density, be,
                                     tolerance_rel=pass_rel, equality_tol=eq_tol)
    if cid == "linear_isoperimetric":
        return reilly_ros.check_linear_isoperimetric(bundle.mesh, bundle.density, be,
                                                     tolerance_rel=pass_rel,
                                                     equality_tol=eq_tol)
    if cid == "linear_isoperimetric_ball":
        ball = bundle.fields
        return reilly_ros.ball_linear_isoperimetric(ball["radius"], int(ball["n"]),
                                                    bundle.density, be,
                                                    equality_tol=eq_tol)
    if cid == "reilly":
        return reilly_ros.reilly_residual(bundle.mesh, bundle.density,
                                          _reilly_u(params, bundle),
                                          tolerance_rel=float(tol.get("pass_rel", 1e-2)))
    if cid == "eigenbound_max":
        return heintze.eigenvalue_bound_max(bundle.mesh, bundle.fields, bundle.space,
                                  tolerance=tol.get("bound_abs"))
    if cid == "eigenbound_mean":
        return heintze.eigenvalue_bound_mean(bundle.mesh, bundle.fields, bundle.space,
                                  tolerance=tol.get("bound_abs"))
    if cid == "divergence_chain":
        return heintze.divergence_chain_check(bundle.mesh, bundle.fields, bundle.space,
                                     tolerance_rel=float(tol.get("lemma_rel", 1e-2)))
    if cid == "gradient_bound":
        return heintze.gradient_bound_check(bundle.mesh, bundle.fields, bundle.space)
    if cid == "equality_diagnostic":
        return heintze.equality_diagnostic(bundle.mesh, bundle.fields, bundle.space,
                                           equality_tol=eq_tol)
    if cid == "shrinker":
        return heintze.shrinker_report(bundle.space, int(params.get("resolution", 3)))
    if cid == "bakry_emery":
        region = params.get("region", {"kind": "ball", "radius": 1.0})
        return certify_nonneg_BE(bundle.space, bundle.density,
                                 BakryEmeryParams(sc.m, d), region,
                                 int(params.get("n_samples", 256)))
    raise ConfigError(f"unknown check {cid!r}")  # pragma: no cover


BOUND_CHECKS = {"eigenbound_max", "eigenbound_mean"}


def run_scenario(sc):
    """Execute every check of a scenario across its refinement ladder.

    Returns a JSON-ready dict; the top-level pass/equality of each check
    reflect the finest level, with bound tolerances and the equality band
    widened by three times the measured level-to-level change.
    """
    results = {}
    for entry in sc.checks:
        cid = _check_id(entry)
        params = _check_params(entry)
        history = []
        final = None
        failure = None
        for level in range(sc.refinement_levels):
            bundle = build_geometry(sc, level)
            try:
                rep = run_check(cid, params, sc, bundle)
            except HypothesisFailed as err:
                failure = CheckReport(
                    check_id=cid, kind="inequality", lhs=float("nan"),
                    rhs=float("nan"), passed=None,
                    hypothesis_flags={err.flag or "hypothesis": False},
                    details={"reason": str(err), "vertex": err.vertex},
                )
                break
            except (NotCMC, NotNearEquality, NonConvexCone, OutOfBall) as err:
                # precondition failures: the check asserts nothing here
                failure = CheckReport(
                    check_id=cid, kind="inequality", lhs=float("nan"),
                    rhs=float("nan"), passed=None,
                    hypothesis_flags={type(err).__name__: False},
                    details={"reason": str(err)},
                )
                break
            history.append({"level": level, "h": bundle.h, "lhs": rep.lhs,
                            "rhs": rep.rhs, "gap": rep.gap,
                            "relative_gap": rep.relative_gap})
            final = rep
            if np.isnan(bundle.h):
                break  # meshless checks have nothing to refine
        if failure is not None:
            failure.history = history
            results[cid] = failure
            continue
        final.history = history
        if len(history) >= 2 and final.kind != "diagnostic":
            measured = abs(history[-1]["lhs"] - history[-2]["lhs"])
            if cid in BOUND_CHECKS and "bound_abs" not in sc.tolerances:
                final.tolerance = max(final.tolerance, 3.0 * measured)
                final.evaluate(sc.tolerances.get("equality"))
            scale = max(abs(final.lhs), abs(final.rhs), 1e-300)
            eq_band = max(float(sc.tolerances.get("equality", CheckReport.EQUALITY_TOL)),
                          3.0 * measured / scale)
            final.equality = final.passed is not None and final.relative_gap < eq_band
        results[cid] = final
    return {
        "name": sc.name,
        "config": _jsonable(sc.resolved()),
        "checks": {cid: rep.to_dict() for cid, rep in results.items()},
    }


def fitted_order(history):
    """Least-squares slope of log |gap| against log h; None when undefined."""
    pts = [(rec["h"], abs(rec["gap"])) for rec in history
           if rec["h"] and not np.isnan(rec["h"]) and abs(rec["gap"]) > 0]
    if len(pts) < 2:
        return None
    hs, gaps = zip(*pts)
    return float(np.polyfit(np.log(hs), np.log(gaps), 1)[0])
