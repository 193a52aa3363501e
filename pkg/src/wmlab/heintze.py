"""Eigenvalue-bound machinery: weighted center of mass, comparison test
functions, the divergence/gradient lemma checks, the extrinsic eigenvalue
bounds for both curvature signs, the equality diagnostic, and the
self-shrinker radius.

All operations consume a mesh plus its ImmersionFields; ambient vectors
live in the space-form model and inner products go through the model
metric, so the Euclidean and curved paths share one code path.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergence,
    NoRoot,
    NotNearEquality,
    OutOfBall,
    WrongCurvatureSign,
)
from .mesh import CURVE
from .ops import assemble, tangential_gradient, vertex_average_cell_field, vertex_normals
from .report import CheckReport
from .spaceform import c_delta, s_delta, s_delta_antiderivative
from .spectrum import lambda1_drift

MAX_CENTER_ITER = 200
CENTER_STEP_TOL = 1e-12


@dataclass
class CenterOfMass:
    point: np.ndarray
    gradient_norm: float    # Karcher condition residual per unit weighted volume
    iterations: int


def _intrinsic_dim(mesh):
    return 1 if mesh.cell_kind == CURVE else 2


def _weights(mesh, fields):
    """Lumped weighted vertex measure (the discrete dmu)."""
    return assemble(mesh, fields.f_val).lumped_mass


def weighted_center_of_mass(mesh, fields, space):
    """Karcher mean of the vertices under the weighted measure.

    Closed form in the Euclidean model; fixed-point iteration
    p <- exp_p(mean log_p) with a 0.5 damping fallback on the curved
    models.  The returned residual is |sum m_i log_p(x_i)| / sum m_i.
    """
    x = fields.ambient_points
    m = _weights(mesh, fields)
    vol = m.sum()
    if space.model == "euclidean":
        p = (m[:, None] * x).sum(axis=0) / vol
        res = np.linalg.norm((m[:, None] * (x - p)).sum(axis=0)) / vol
        return CenterOfMass(point=p, gradient_norm=float(res), iterations=0)

    _containment_guard(space, x)
    # start from the extrinsic mean projected back to the model surface
    mean = (m[:, None] * x).sum(axis=0) / vol
    p = _project_to_model(space, mean)
    prev_res = np.inf
    step_scale = 1.0
    for it in range(1, MAX_CENTER_ITER + 1):
        logs = space.log_map(p, x)
        g = (m[:, None] * logs).sum(axis=0) / vol
        res = float(space.norm(g))
        if res > prev_res:
            step_scale = 0.5        # safety net; convex regime rarely needs it
        prev_res = min(prev_res, res)
        p_new = space.exp_map(p, step_scale * g)
        step = float(space.distance(p, p_new))
        p = p_new
        if step < CENTER_STEP_TOL:
            logs = space.log_map(p, x)
            res = float(space.norm((m[:, None] * logs).sum(axis=0))) / vol
            return CenterOfMass(point=p, gradient_norm=res, iterations=it)
    raise NoConvergence("center-of-mass iteration did not converge", residual=prev_res)


def _project_to_model(space, y):
    if space.model == "sphere-embedded":
        return y * (space.radius / np.linalg.norm(y))
    q = -space.metric(y, y)  # timelike vectors have negative square
    if q <= 0:
        y = space.basepoint()
        q = space.radius**2
    return y * (space.radius / np.sqrt(q))


def _containment_guard(space, points):
    if space.delta <= 0:
        return
    bound = np.pi / (4.0 * np.sqrt(space.delta))
    base = space.basepoint()
    d = np.asarray(space.distance(base, points))
    # any containing ball works; measure from the best of base / first point
    if d.max() > bound + 1e-9:
        d2 = np.asarray(space.distance(points[0], points))
        if d2.max() > 2.0 * bound + 1e-9:
            raise OutOfBall(
                "submanifold is not contained in a geodesic ball of radius pi/(4 sqrt(delta))")


def test_functions(mesh, fields, space, center):
    """Columns (s_delta(r)/r) x_i in normal coordinates around the center.

    For positive curvature a last column (c_delta(r) - mean c)/sqrt(delta)
    is appended.  Rows sum to s_delta(r)^2 across the coordinate columns.
    """
    x = fields.ambient_points
    r = np.asarray(space.distance(center, x))
    logs = space.log_map(center, x)
    frame = space.tangent_basis(center)
    if space.model == "hyperboloid-embedded":
        eta = np.ones(space.embedding_dim)
        eta[0] = -1.0
        coords = logs @ (eta[:, None] * frame.T)
    else:
        coords = logs @ frame.T
    safe = np.where(r > 1e-9, r, 1.0)
    scale = np.where(r > 1e-9, s_delta(space.delta, r) / safe, 1.0)
    phi = scale[:, None] * coords
    if space.delta > 0:
        m = _weights(mesh, fields)
        c = c_delta(space.delta, r)
        cbar = float((m * c).sum() / m.sum())
        phi0 = (c - cbar) / np.sqrt(space.delta)
        phi = np.column_stack([phi, phi0])
    return phi


def _diff_vector(fields):
    """H_f vector minus the ambient gradient: hvec - tangential grad f."""
    return fields.hvec - fields.grad_f_tangential


def divergence_chain_check(mesh, fields, space, center=None, tolerance_rel=1e-2):
    """The divergence comparison chain of integrals.

    n * int c  <=  -int s <H_f - grad f, grad r>  <=  int s |H_f - grad f|,
    all against the weighted measure; the ratio middle/right is 1 exactly
    when the radial field is parallel to H_f - grad f.
    """
    if center is None:
        center = weighted_center_of_mass(mesh, fields, space).point
    n = _intrinsic_dim(mesh)
    x = fields.ambient_points
    m = _weights(mesh, fields)
    r = np.asarray(space.distance(center, x))
    s = s_delta(space.delta, r)
    c = c_delta(space.delta, r)
    grad_r = space.unit_radial(center, x)
    diff = _diff_vector(fields)
    left = float(n * (m * c).sum())
    middle = float(-(m * s * space.metric(diff, grad_r)).sum())
    right = float((m * s * np.sqrt(np.maximum(space.metric(diff, diff), 0.0))).sum())
    scale = max(abs(left), abs(middle), abs(right), 1e-300)
    tol = tolerance_rel * scale
    ok = (left <= middle + tol) and (middle <= right + tol)
    rep = CheckReport(
        check_id="divergence_chain",
        kind="inequality",
        lhs=left,
        rhs=right,
        tolerance=tol,
        details={"middle": middle,
                 "ratio_middle_right": middle / right if right != 0 else None,
                 "gap_left_middle": middle - left,
                 "gap_middle_right": right - middle},
    )
    rep.evaluate()
    rep.passed = bool(ok)
    rep.equality = rep.passed and (right - left) < tol
    return rep


def _gradient_operator_error(mesh, fields):
    """Max vertex defect of dual-averaged P1 gradients on the coordinates.

    Compares against the pointwise tangential projection given by the
    vertex normal; this is the epsilon(h) tolerance of the gradient
    comparison, attributing discrete overshoot to the operator.
    """
    k = mesh.vertices.shape[1]
    nu = vertex_normals(mesh)
    proj = np.eye(k)[None, :, :] - nu[:, :, None] * nu[:, None, :]
    err = np.zeros(len(mesh.vertices))
    for i in range(k):
        g_cell = tangential_gradient(mesh, mesh.vertices[:, i])
        g_vert = vertex_average_cell_field(mesh, g_cell)
        err += ((g_vert - proj[:, i, :]) ** 2).sum(axis=1)
    return float(err.max())


def gradient_bound_check(mesh, fields, space, center=None, tolerance_rel=1e-10):
    """Gradient bound and, for nonpositive curvature, the product inequality.

    Part one: sum_i |grad phi_i|^2 + delta |X_tan|^2 <= n + eps(h) with
    eps(h) the measured gradient-operator error.  Part two (delta <= 0):
    int s * int s c <= int s^2 * int c.
    """
    if center is None:
        center = weighted_center_of_mass(mesh, fields, space).point
    n = _intrinsic_dim(mesh)
    x = fields.ambient_points
    m = _weights(mesh, fields)
    r = np.asarray(space.distance(center, x))
    s = s_delta(space.delta, r)
    c = c_delta(space.delta, r)
    phi = test_functions(mesh, fields, space, center)
    ncols = phi.shape[1] if space.delta <= 0 else phi.shape[1] - 1
    # per-cell P1 gradients: exact whenever the columns are linear in the
    # mesh coordinates, which covers the flat case and centered geodesic
    # spheres (where the columns are the round embedding itself)
    grad_sq = np.zeros(len(mesh.cells))
    for i in range(ncols):
        g = tangential_gradient(mesh, phi[:, i])
        grad_sq += (g * g).sum(axis=1)
    grad_r = space.unit_radial(center, x)
    X = s[:, None] * grad_r
    nu = fields.unit_normals
    X_tan_sq = np.maximum(space.metric(X - space.metric(X, nu)[:, None] * nu,
                                       X - space.metric(X, nu)[:, None] * nu), 0.0)
    quantity = grad_sq + space.delta * X_tan_sq[mesh.cells].mean(axis=1)
    eps_h = _gradient_operator_error(mesh, fields)
    lhs = float(quantity.max())
    rhs = n + eps_h
    part2 = None
    part2_ok = True
    if space.delta <= 0:
        i_s, i_sc = float((m * s).sum()), float((m * s * c).sum())
        i_s2, i_c = float((m * s * s).sum()), float((m * c).sum())
        slack = i_s2 * i_c - i_s * i_sc
        part2_ok = slack >= -tolerance_rel * max(abs(i_s2 * i_c), 1e-300)
        part2 = {"int_s": i_s, "int_sc": i_sc, "int_s2": i_s2, "int_c": i_c,
                 "slack": slack}
    rep = CheckReport(
        check_id="gradient_bound",
        kind="inequality",
        lhs=lhs,
        rhs=rhs,
        tolerance=1e-8,
        details={"eps_h": eps_h, "product_inequality": part2},
    )
    rep.evaluate()
    rep.passed = bool(rep.passed and part2_ok)
    return rep


def _lambda1(mesh, fields):
    return lambda1_drift(assemble(mesh, fields.f_val))


def eigenvalue_bound_max(mesh, fields, space, tolerance=None):
    """lambda_1 <= n delta + max |H_f - grad f|^2 / n for delta < 0."""
    if space.delta >= 0:
        raise WrongCurvatureSign("the max-form bound needs delta < 0")
    n = _intrinsic_dim(mesh)
    eig = _lambda1(mesh, fields)
    rhs = n * space.delta + float(np.max(fields.hf_minus_gradf_sq)) / n
    com = weighted_center_of_mass(mesh, fields, space)
    x = fields.ambient_points
    m = _weights(mesh, fields)
    r = np.asarray(space.distance(com.point, x))
    s, c = s_delta(space.delta, r), c_delta(space.delta, r)
    grad_r = space.unit_radial(com.point, x)
    X = s[:, None] * grad_r
    nu = fields.unit_normals
    X_tan = X - space.metric(X, nu)[:, None] * nu
    diff = _diff_vector(fields)
    inspect = {
        "delta_int_Xtan_sq": float(space.delta * (m * space.metric(X_tan, X_tan)).sum()),
        "n_int_c_sq": float(n * (m * c * c).sum()),
        "int_cs_diff": float((m * c * s * np.sqrt(
            np.maximum(space.metric(diff, diff), 0.0))).sum()),
    }
    rep = CheckReport(
        check_id="eigenvalue_bound_negative_curvature",
        kind="inequality",
        lhs=eig.lambda1,
        rhs=rhs,
        tolerance=0.02 * abs(rhs) if tolerance is None else tolerance,
        details={"lambda1_residual": eig.residual,
                 "near_degenerate": eig.near_degenerate,
                 "center_residual": com.gradient_norm,
                 "field_source": fields.source,
                 "gradient_comparison_integrals": inspect},
    )
    return rep.evaluate()


def eigenvalue_bound_mean(mesh, fields, space, tolerance=None):
    """lambda_1 <= n delta + mean |H_f - grad f|^2 / n for delta >= 0.

    For positive delta the submanifold must fit in a geodesic ball of
    radius pi / (4 sqrt(delta)).
    """
    if space.delta < 0:
        raise WrongCurvatureSign("the averaged bound needs delta >= 0")
    _containment_guard(space, fields.ambient_points)
    n = _intrinsic_dim(mesh)
    eig = _lambda1(mesh, fields)
    m = _weights(mesh, fields)
    vol = m.sum()
    mean_sq = float((m * fields.hf_minus_gradf_sq).sum() / vol)
    rhs = n * space.delta + mean_sq / n
    rep = CheckReport(
        check_id="eigenvalue_bound_nonnegative_curvature",
        kind="inequality",
        lhs=eig.lambda1,
        rhs=rhs,
        tolerance=0.02 * abs(rhs) if tolerance is None else tolerance,
        details={"lambda1_residual": eig.residual,
                 "near_degenerate": eig.near_degenerate,
                 "weighted_volume": float(vol),
                 "field_source": fields.source},
    )
    return rep.evaluate()


VAR_F_FLOOR = 1e-14


def equality_diagnostic(mesh, fields, space, equality_tol=None):
    """Near-equality structure: fit the proportionality X = lam (H_f - grad f)
    and test the constancy of F = lam f + int_0^r s_delta.

    Requires a near-equality eigenvalue-bound run; raises NotNearEquality
    otherwise.  lam is reported as unconstrained when f is constant on M.
    """
    tol = CheckReport.EQUALITY_TOL if equality_tol is None else equality_tol
    bound = eigenvalue_bound_mean(mesh, fields, space)
    if bound.relative_gap >= tol:
        raise NotNearEquality(
            f"relative gap {bound.relative_gap:.3e} is not below {tol:.1e}")
    com = weighted_center_of_mass(mesh, fields, space)
    x = fields.ambient_points
    m = _weights(mesh, fields)
    vol = m.sum()
    r = np.asarray(space.distance(com.point, x))
    s = s_delta(space.delta, r)
    grad_r = space.unit_radial(com.point, x)
    X = s[:, None] * grad_r
    diff = _diff_vector(fields)
    denom = float((m * space.metric(diff, diff)).sum())
    lam = float((m * space.metric(X, diff)).sum() / denom) if denom > 0 else 0.0
    f_mean = float((m * fields.f_val).sum() / vol)
    f_var = float((m * (fields.f_val - f_mean) ** 2).sum() / vol)
    unconstrained = f_var < VAR_F_FLOOR
    F = lam * fields.f_val + s_delta_antiderivative(space.delta, r)
    F_mean = float((m * F).sum() / vol)
    F_std = float(np.sqrt((m * (F - F_mean) ** 2).sum() / vol))
    rep = CheckReport(
        check_id="equality_structure",
        kind="diagnostic",
        lhs=F_std,
        rhs=0.0,
        tolerance=0.0,
        passed=True,
        details={"lambda_fit": None if unconstrained else lam,
                 "lambda_unconstrained": unconstrained,
                 "F_mean": F_mean,
                 "bound_relative_gap": bound.relative_gap},
    )
    rep.equality = F_std < 1e-8 * max(1.0, abs(F_mean))
    return rep


def shrinker_radius(delta, n, tol=1e-12, max_iter=200):
    """Positive root of r s_delta(r) = 2 n c_delta(r).

    Closed form sqrt(2 n) for the flat case; bisection to |residual| < tol
    otherwise.  For delta > 0 the root is sought in (0, pi/(2 sqrt(delta))).
    """
    if delta == 0.0:
        return float(np.sqrt(2.0 * n))

    def g(r):
        return r * s_delta(delta, r) - 2.0 * n * c_delta(delta, r)

    lo = 0.0
    if delta > 0:
        hi = np.pi / (2.0 * np.sqrt(delta)) * (1.0 - 1e-15)
        if g(hi) <= 0:
            raise NoRoot("no shrinker radius below the equator")
    else:
        hi = 1.0
        for _ in range(200):
            if g(hi) > 0:
                break
            hi *= 2.0
        else:
            raise NoRoot("bisection bracket not found")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
        if abs(g(mid)) < tol:
            return float(mid)
    mid = 0.5 * (lo + hi)
    if abs(g(mid)) < tol:
        return float(mid)
    raise NoRoot(f"bisection stalled at residual {g(mid):.3e}")


def shrinker_report(space, resolution=3):
    """Geodesic sphere of the shrinker radius under the Gaussian weight.

    Demonstrates that the weighted mean curvature vanishes there while
    |H_f - grad f|^2 = |H|^2 stays positive, so the latter cannot be
    replaced by |H_f|^2 in the eigenvalue bounds.
    """
    from .density import DensityField
    from .generators import scaled_sphere_with_analytic_fields

    n = space.dim - 1
    r0 = shrinker_radius(space.delta, n)
    mesh, fields = scaled_sphere_with_analytic_fields(
        space, r0, resolution, DensityField.gaussian(0.25))
    rep = CheckReport(
        check_id="shrinker_sphere",
        kind="diagnostic",
        lhs=float(np.abs(fields.hf_scalar).max()),
        rhs=0.0,
        tolerance=1e-8,
        passed=bool(np.abs(fields.hf_scalar).max() < 1e-8),
        details={"radius": r0,
                 "residual": float(abs(r0 * s_delta(space.delta, r0)
                                       - 2 * n * c_delta(space.delta, r0))),
                 "hf_minus_gradf_sq_min": float(fields.hf_minus_gradf_sq.min()),
                 "mean_curvature_sq": float((n * c_delta(space.delta, r0)
                                             / s_delta(space.delta, r0)) ** 2)},
    )
    rep.equality = rep.passed
    return rep
