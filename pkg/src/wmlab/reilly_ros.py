"""Drift-Poisson solves on planar domains, the weighted Reilly identity,
the Cauchy-Schwarz refinement gap, and the isoperimetric checks.

Boundary conventions: nu is the outward unit normal, H = div(nu) is
positive on convex boundaries, H_f = H - <grad f, nu>, and the second
fundamental form II(X, X) = <D_X nu, X> is positive on convex boundaries.
Under these conventions the weighted Reilly identity reads

  int_D ((L u)^2 - |Hess u|^2 - <Hess f du, du>) dmu
      = int_B (2 u_nu L^B u + H_f u_nu^2 + II(grad^B u, grad^B u)) dmu_B

with L the drift Laplacian; the sign-calibration tests pin this down.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import spsolve

from .density import weighted_element
from .errors import (
    DomainError,
    HypothesisFailed,
    MissingLabels,
    NonConvexCone,
    NotCMC,
    SingularSystem,
)
from .mesh import CURVE, PLANAR_DOMAIN, SimplicialMesh, quadrature_points, weighted_measure
from .ops import BoundaryData, assemble, tangential_gradient, vertex_average_cell_field
from .report import CheckReport


# -- analytic test functions ------------------------------------------------

class AnalyticFunction:
    """Scalar function with value/gradient/Hessian evaluators."""

    def __init__(self, value, gradient, hessian):
        self._value, self._gradient, self._hessian = value, gradient, hessian

    def value(self, x):
        return self._value(np.asarray(x, dtype=float))

    def gradient(self, x):
        return self._gradient(np.asarray(x, dtype=float))

    def hessian(self, x):
        return self._hessian(np.asarray(x, dtype=float))


def quadratic(A, b=None, c=0.0):
    """u(x) = x^T A x / 2 + <b, x> + c with exact derivatives."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)

    def value(x):
        single = x.ndim == 1
        X = np.atleast_2d(x)
        out = 0.5 * np.einsum("ni,ij,nj->n", X, A, X) + X @ b + c
        return float(out[0]) if single else out

    def gradient(x):
        single = x.ndim == 1
        X = np.atleast_2d(x)
        out = X @ A + b
        return out[0] if single else out

    def hessian(x):
        single = x.ndim == 1
        X = np.atleast_2d(x)
        out = np.broadcast_to(A, (X.shape[0],) + A.shape).copy()
        return out[0] if single else out

    return AnalyticFunction(value, gradient, hessian)


def disk_torsion(radius=1.0, dim=2):
    """u = (|x|^2 - R^2)/4, the drift-free torsion function of the disk."""
    return quadratic(0.5 * np.eye(dim), c=-radius**2 / 4.0)


# -- Poisson solves ------------------------------------------------------------

@dataclass
class PoissonSolution:
    u: np.ndarray
    boundary_vertices: np.ndarray      # vertex ids carrying u_nu values
    u_nu: np.ndarray
    residual: float
    bc_kind: str


def _boundary_vertex_weights(mesh, field, edges):
    """Weighted boundary measure of each hat function over the given edges."""
    beta = np.zeros(len(mesh.vertices))
    p = mesh.vertices[edges[:, 0]]
    q = mesh.vertices[edges[:, 1]]
    lengths = np.linalg.norm(q - p, axis=1)
    w = weighted_element(field, 0.5 * (p + q))
    for i in range(2):
        np.add.at(beta, edges[:, i], 0.5 * lengths * w)
    return beta


def _solve(mesh, field, dirichlet, flux_edges, bc_kind):
    pack = assemble(mesh, field)
    b = pack.lumped_mass.copy()           # load: integral of phi e^(-f)
    n = len(b)
    free = np.setdiff1d(np.arange(n), dirichlet)
    S = pack.stiffness.tocsc()
    u = np.zeros(n)
    try:
        u[free] = spsolve(S[free][:, free], -b[free])
    except RuntimeError as err:  # pragma: no cover - only on broken meshes
        raise SingularSystem(str(err))
    if not np.all(np.isfinite(u)):
        raise SingularSystem("linear solve produced non-finite values")
    resid = np.linalg.norm(S[free][:, free] @ u[free] + b[free])
    scale = max(np.linalg.norm(b[free]), 1e-300)
    # variational flux: int_B u_nu phi_i dmu = (S u + b)_i at clamped rows
    flux = pack.stiffness @ u + b
    beta = _boundary_vertex_weights(mesh, field, flux_edges)
    u_nu = flux[dirichlet] / beta[dirichlet]
    return PoissonSolution(u=u, boundary_vertices=dirichlet, u_nu=u_nu,
                           residual=float(resid / scale), bc_kind=bc_kind)


def solve_dirichlet(domain, field):
    """P1 solve of the drift-Poisson problem Lu = 1, u = 0 on the boundary.

    Returns the solution with the normal derivative recovered on the
    boundary by variational flux extraction.
    """
    if domain.cell_kind != PLANAR_DOMAIN:
        raise DomainError("Dirichlet solve expects a planar-domain mesh")
    if domain.is_closed:
        raise DomainError("domain has no boundary")
    dirichlet = np.unique(domain.boundary_edges)
    return _solve(domain, field, dirichlet, domain.boundary_edges, "dirichlet")


def solve_mixed(domain, field):
    """Mixed solve: u = 0 on the "M" arc, natural on the cone faces.

    The cutoff ring at the excised cone vertex is also left natural; its
    influence vanishes as the cutoff radius goes to zero.
    """
    if domain.cell_kind != PLANAR_DOMAIN:
        raise DomainError("mixed solve expects a planar-domain mesh")
    labels = set(domain.boundary_labels)
    if "M" not in labels or "cone-face" not in labels:
        raise MissingLabels("mixed solve needs 'M' and 'cone-face' boundary labels")
    m_edges = domain.boundary_edges_with("M")
    dirichlet = np.unique(m_edges)
    return _solve(domain, field, dirichlet, m_edges, "mixed")


# -- weighted Reilly identity -----------------------------------------------------

def _loop_drift_laplacian(mesh, field, loop):
    """Drift Laplacian of u restricted to a closed boundary loop."""
    pts = mesh.vertices[loop]
    m = len(loop)
    cells = np.stack([np.arange(m), (np.arange(m) + 1) % m], axis=1)
    poly = SimplicialMesh(pts, cells, CURVE)
    fv = np.asarray(field.value(pts))
    pack = assemble(poly, fv)
    return poly, pack


def reilly_residual(domain, field, u, qorder=3, tolerance_rel=1e-2):
    """Both sides of the weighted Reilly identity, evaluated by quadrature.

    ``u`` is analytic (the primary mode) or a mesh function; the mesh
    function mode recovers derivatives from P1 gradients and is labeled
    low-order in the report.
    """
    if domain.cell_kind != PLANAR_DOMAIN:
        raise DomainError("the Reilly identity is checked on planar domains")
    analytic = hasattr(u, "hessian")
    if analytic:
        lhs = _reilly_lhs_analytic(domain, field, u, qorder)
    else:
        lhs = _reilly_lhs_meshfunction(domain, field, np.asarray(u, dtype=float))

    bd = BoundaryData(domain)
    pos = np.arange(len(bd.vertex_ids))
    rhs = 0.0
    for li, loop in enumerate(bd.loops):
        sel = pos[bd.loop_ids == li]
        loop = np.asarray(loop)
        pts = domain.vertices[loop]
        nu = bd.normals[sel]
        H = bd.curvatures[sel]
        ell = bd.dual_lengths[sel]
        fv = np.asarray(field.value(pts))
        gradf = field.gradient(pts)
        if analytic:
            gu = u.gradient(pts)
            uv = np.asarray(u.value(pts))
        else:
            uvert = np.asarray(u, dtype=float)
            gu_cell = tangential_gradient(domain, uvert)
            gu = vertex_average_cell_field(domain, gu_cell)[loop]
            uv = uvert[loop]
        u_nu = (gu * nu).sum(1)
        gu_tan = gu - u_nu[:, None] * nu
        poly, pack = _loop_drift_laplacian(domain, field, loop)
        lap_b = pack.drift_laplacian(uv)
        h_f = H - (gradf * nu).sum(1)
        integrand = 2.0 * u_nu * lap_b + h_f * u_nu**2 + H * (gu_tan * gu_tan).sum(1)
        rhs += float((ell * np.exp(-fv) * integrand).sum())

    rep = CheckReport(
        check_id="reilly_identity",
        kind="identity",
        lhs=float(lhs),
        rhs=float(rhs),
        details={"mode": "analytic" if analytic else "mesh-function (low-order)"},
    )
    rep.tolerance = tolerance_rel * max(abs(rep.lhs), abs(rep.rhs), 1e-300)
    return rep.evaluate()


def _reilly_lhs_analytic(domain, field, u, qorder):
    pts, w, _ = quadrature_points(domain, qorder)
    flat = pts.reshape(-1, 2)
    gu = u.gradient(flat)
    hu = u.hessian(flat)
    gf = field.gradient(flat)
    hf = field.hessian(flat)
    lap_f_u = np.einsum("nii->n", hu) - (gf * gu).sum(1)
    hess_sq = np.einsum("nij,nij->n", hu, hu)
    ric_f = np.einsum("nij,ni,nj->n", hf, gu, gu)
    env = np.exp(-np.asarray(field.value(flat)))
    vals = ((lap_f_u**2 - hess_sq - ric_f) * env).reshape(pts.shape[:2])
    return float(np.einsum("m,mq,q->", domain.cell_measures(), vals, w))


def _reilly_lhs_meshfunction(domain, field, uvert):
    # P1 gradient, then a recovered (vertex-averaged) gradient differentiated
    # once more; first-order accurate only
    gu_cell = tangential_gradient(domain, uvert)
    gu_vert = vertex_average_cell_field(domain, gu_cell)
    hess_cells = np.stack([tangential_gradient(domain, gu_vert[:, k]) for k in range(2)],
                          axis=1)
    centroids = domain.vertices[domain.cells].mean(axis=1)
    gf = field.gradient(centroids)
    hf = field.hessian(centroids)
    gu_c = gu_vert[domain.cells].mean(axis=1)
    lap_f_u = np.einsum("nii->n", hess_cells) - (gf * gu_c).sum(1)
    hess_sq = np.einsum("nij,nij->n", hess_cells, hess_cells)
    ric_f = np.einsum("nij,ni,nj->n", hf, gu_c, gu_c)
    env = np.exp(-np.asarray(field.value(centroids)))
    return float((domain.cell_measures() * (lap_f_u**2 - hess_sq - ric_f) * env).sum())


# -- Cauchy-Schwarz refinement ------------------------------------------------------

def cauchy_schwarz_gap(field, params, x, u):
    """Defect of the dimensional Cauchy-Schwarz refinement at the point x.

    [|Hess u|^2 + Ric_f(du, du)] - [(L u)^2 / m + Ric_f^m(du, du)];
    nonnegative whenever m > d, or m = d with constant weight.
    """
    params.check_density(field)
    x = np.asarray(x, dtype=float)
    gu = u.gradient(x)
    hu = u.hessian(x)
    gf = field.gradient(x)
    hf = field.hessian(x)
    hess_sq = float(np.einsum("ij,ij->", hu, hu))
    lap_f_u = float(np.trace(hu)) - float(gf @ gu)
    df_du = float(gf @ gu)
    if params.is_infinite:
        return hess_sq
    gap = hess_sq - lap_f_u**2 / params.m
    if params.m > params.d:
        gap += df_du**2 / (params.m - params.d)
    return gap


# -- boundary curvature along labeled sub-polylines -----------------------------------

def _circumradius_curvature(a, b, c):
    e1, e2 = b - a, c - b
    chord = c - a
    l1, l2, l3 = np.linalg.norm(e1), np.linalg.norm(e2), np.linalg.norm(chord)
    cross = e1[0] * e2[1] - e1[1] * e2[0]
    if abs(cross) < 1e-14 * l1 * l2:
        return 0.0
    return float(np.sign(cross) * 2.0 * abs(cross) / (l1 * l2 * l3))


def _arc_runs(mesh, label):
    """Contiguous runs of ``label`` edges along each boundary loop."""
    edge_label = {}
    for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
        edge_label[(int(i), int(j))] = lab
    runs = []
    for loop in mesh.boundary_loops():
        m = len(loop)
        flags = [edge_label[(loop[a], loop[(a + 1) % m])] == label for a in range(m)]
        if all(flags):
            runs.append((loop, True))
            continue
        a = 0
        while a < m:
            if flags[a] and not flags[a - 1]:
                run = [loop[a]]
                b = a
                while flags[b % m]:
                    run.append(loop[(b + 1) % m])
                    b += 1
                runs.append((run, False))
            a += 1
    return runs


def _arc_geometry(mesh, label="M"):
    """Per-vertex normals/curvature and per-edge lengths of labeled arcs.

    Curvature comes from circumcircles of vertex triples along the arc
    only (one-sided at the run ends), so corner vertices of a wedge do not
    pollute the arc values; exact on circular arcs.
    """
    runs = _arc_runs(mesh, label)
    if not runs:
        raise MissingLabels(f"no boundary edges labeled {label!r}")
    v = mesh.vertices
    verts, normals, kappas = [], [], []
    edges = []
    for run, closed in runs:
        run = list(run)
        m = len(run)
        for a in range(m):
            p_prev = v[run[(a - 1) % m]] if (closed or a > 0) else None
            p_next = v[run[(a + 1) % m]] if (closed or a < m - 1) else None
            pt = v[run[a]]
            if p_prev is None:
                trip = (pt, v[run[a + 1]], v[run[a + 2]])
                tangent = v[run[a + 1]] - pt
            elif p_next is None:
                trip = (v[run[a - 2]], v[run[a - 1]], pt)
                tangent = pt - v[run[a - 1]]
            else:
                trip = (p_prev, pt, p_next)
                tangent = p_next - p_prev
            kappas.append(_circumradius_curvature(*trip))
            t = tangent / np.linalg.norm(tangent)
            normals.append([t[1], -t[0]])
            verts.append(run[a])
        for a in range(m - 1):
            edges.append((run[a], run[a + 1]))
        if closed:
            edges.append((run[-1], run[0]))
    index = {vid: k for k, vid in enumerate(verts)}
    return (np.array(verts, dtype=np.int64), np.array(normals), np.array(kappas),
            np.array(edges, dtype=np.int64).reshape(-1, 2), index)


def _arc_hf(mesh, field, label="M"):
    verts, normals, kappas, edges, index = _arc_geometry(mesh, label)
    gradf = field.gradient(mesh.vertices[verts])
    h_f = kappas - (gradf * normals).sum(1)
    return verts, h_f, edges, index


def _arc_integrals(mesh, field, label="M"):
    """Weighted arc measure and the integral of 1/H_f over the arc."""
    verts, h_f, edges, index = _arc_hf(mesh, field, label)
    bad = np.nonzero(h_f <= 0)[0]
    if len(bad):
        raise HypothesisFailed("H_f is not positive on the boundary",
                               vertex=int(verts[bad[0]]), flag="Hf_positive")
    p = mesh.vertices[edges[:, 0]]
    q = mesh.vertices[edges[:, 1]]
    lengths = np.linalg.norm(q - p, axis=1)
    wmid = weighted_element(field, 0.5 * (p + q))
    inv_hf = np.array([0.5 * (1.0 / h_f[index[int(i)]] + 1.0 / h_f[index[int(j)]])
                       for i, j in edges])
    area_m = float((lengths * wmid).sum())
    int_inv = float((lengths * wmid * inv_hf).sum())
    return area_m, int_inv, h_f, verts, lengths, wmid, index


def _be_flag(field, params, mesh, n_dirs=8):
    """Sampled nonnegativity of the Bakry-Emery tensor over the domain."""
    from .density import bakry_emery_m
    from .spaceform import AmbientSpace

    space = AmbientSpace(0.0, mesh.vertices.shape[1])
    centroids = mesh.vertices[mesh.cells].mean(axis=1)
    th = np.pi * np.arange(n_dirs) / n_dirs
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    hf = field.hessian(centroids)
    gf = field.gradient(centroids)
    worst = np.inf
    for v in dirs:
        vals = space.delta * (space.dim - 1) + np.einsum("nij,i,j->n", hf, v, v)
        if not params.is_infinite and params.m > params.d:
            vals = vals - (gf @ v) ** 2 / (params.m - params.d)
        worst = min(worst, float(vals.min()))
    return worst >= -1e-10, worst


# -- the isoperimetric checks ----------------------------------------------------------

def check_ros(domain, field, params, tolerance_rel=1e-9, equality_tol=None):
    """Weighted volume of the domain against the boundary 1/H_f integral.

    Vol_f(D) <= (m-1)/m * int_B dmu / H_f under nonnegative Bakry-Emery
    tensor and positive H_f; equality exactly for balls with constant
    weight and m = d.
    """
    if domain.cell_kind != PLANAR_DOMAIN:
        raise DomainError("the volume comparison runs on planar domains")
    params.check_density(field)
    be_ok, be_min = _be_flag(field, params, domain)
    area_m, int_inv, h_f, verts, _, _, _ = _arc_integrals(domain, field, "M")
    lhs = weighted_measure(domain, field)
    rhs = params.volume_factor * int_inv
    rep = CheckReport(
        check_id="ros_volume_bound",
        kind="inequality",
        lhs=lhs,
        rhs=rhs,
        tolerance=tolerance_rel * max(abs(lhs), abs(rhs)),
        hypothesis_flags={"bakry_emery_nonneg": be_ok, "Hf_positive": True},
        details={"m": "inf" if params.is_infinite else params.m,
                 "limit_case": params.is_infinite,
                 "bakry_emery_min": be_min,
                 "Hf_min": float(h_f.min()),
                 "boundary_measure": area_m},
    )
    return rep.evaluate(equality_tol)


def _wedge_opening_angle(mesh):
    if "opening_angle" in mesh.metadata:
        return float(mesh.metadata["opening_angle"])
    # reconstruct from the two straight cone faces
    edges = [e for e, lab in zip(mesh.boundary_edges, mesh.boundary_labels)
             if lab == "cone-face"]
    if not edges:
        raise MissingLabels("no 'cone-face' edges on the cone boundary")
    dirs = []
    for i, j in edges:
        d = mesh.vertices[j] - mesh.vertices[i]
        d = d / np.linalg.norm(d)
        if not any(abs(abs(d @ e)) > 1 - 1e-9 for e in dirs):
            dirs.append(d)
    if len(dirs) != 2:
        raise MissingLabels("cone faces do not form two straight rays")
    return float(np.arccos(np.clip(abs(dirs[0] @ dirs[1]), -1.0, 1.0)))


def _junction_interior_angles(mesh, label="M"):
    """Interior angles where the labeled arc meets the rest of the boundary.

    Returns (angles, slacks): the polygonal interior angle (pi - turning
    angle) at each junction vertex, plus the chord-induced slack kappa*l
    that the discrete angle can exceed the smooth contact angle by.
    """
    edge_label = {}
    for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
        edge_label[(int(i), int(j))] = lab
    _, _, kappas, _, index = _arc_geometry(mesh, label)
    angles, slacks = [], []
    v = mesh.vertices
    for loop in mesh.boundary_loops():
        m = len(loop)
        for a in range(m):
            lab_in = edge_label[(loop[a - 1], loop[a])]
            lab_out = edge_label[(loop[a], loop[(a + 1) % m])]
            if (lab_in == label) == (lab_out == label):
                continue
            e_in = v[loop[a]] - v[loop[a - 1]]
            e_out = v[loop[(a + 1) % m]] - v[loop[a]]
            turn = np.arctan2(e_in[0] * e_out[1] - e_in[1] * e_out[0], e_in @ e_out)
            angles.append(np.pi - float(turn))
            arc_edge = e_in if lab_in == label else e_out
            kappa = abs(kappas[index[loop[a]]]) if loop[a] in index else 0.0
            slacks.append(kappa * float(np.linalg.norm(arc_edge)) + 1e-6)
    return angles, slacks


def check_cone(domain, field, params, tolerance_rel=1e-9, equality_tol=None):
    """The volume bound inside a convex cone, integrating over the arc only.

    Equality exactly when the arc is a circle centered at the cone vertex
    and the weight is constant with m = d.  The arc must meet the cone
    faces at interior angle <= pi/2: an obtuse contact corner destroys the
    H^2 regularity of the mixed problem and the bound genuinely fails
    there, so obtuse contact is reported as a hypothesis failure.
    """
    if domain.cell_kind != PLANAR_DOMAIN:
        raise DomainError("the cone comparison runs on planar domains")
    params.check_density(field)
    angle = _wedge_opening_angle(domain)
    if angle > np.pi + 1e-9:
        raise NonConvexCone(f"opening angle {angle:.4f} exceeds pi")
    be_ok, be_min = _be_flag(field, params, domain)
    junctions, slacks = _junction_interior_angles(domain, "M")
    contact_ok = all(a <= np.pi / 2 + s for a, s in zip(junctions, slacks))
    area_m, int_inv, h_f, _, _, _, _ = _arc_integrals(domain, field, "M")
    lhs = weighted_measure(domain, field)
    rhs = params.volume_factor * int_inv
    rep = CheckReport(
        check_id="cone_volume_bound",
        kind="inequality",
        lhs=lhs,
        rhs=rhs,
        tolerance=tolerance_rel * max(abs(lhs), abs(rhs)),
        hypothesis_flags={"bakry_emery_nonneg": be_ok, "Hf_positive": True,
                          "convex_cone": True, "contact_angle_ok": contact_ok},
        details={"m": "inf" if params.is_infinite else params.m,
                 "opening_angle": angle,
                 "eps_vertex": domain.metadata.get("eps_vertex"),
                 "bakry_emery_min": be_min,
                 "Hf_min": float(h_f.min()),
                 "arc_measure": area_m,
                 "contact_angles": junctions},
    )
    return rep.evaluate(equality_tol)


CMC_SPREAD = 1e-6


def check_linear_isoperimetric(domain, field, params, tolerance_rel=1e-9,
                               equality_tol=None):
    """H_f Vol_f(D) <= (m-1)/m Vol_f(B) for constant weighted mean curvature."""
    if domain.cell_kind != PLANAR_DOMAIN:
        raise DomainError("the linear isoperimetric check runs on planar domains")
    params.check_density(field)
    be_ok, be_min = _be_flag(field, params, domain)
    area_m, _, h_f, verts, lengths, wmid, index = _arc_integrals(domain, field, "M")
    mean_hf = float(h_f.mean())
    spread = (h_f.max() - h_f.min()) / max(abs(mean_hf), 1e-300)
    if spread > CMC_SPREAD:
        raise NotCMC(f"H_f relative spread {spread:.2e} exceeds {CMC_SPREAD:.0e}")
    lhs = mean_hf * weighted_measure(domain, field)
    rhs = params.volume_factor * area_m
    rep = CheckReport(
        check_id="linear_isoperimetric",
        kind="inequality",
        lhs=lhs,
        rhs=rhs,
        tolerance=tolerance_rel * max(abs(lhs), abs(rhs)),
        hypothesis_flags={"bakry_emery_nonneg": be_ok, "Hf_positive": bool(mean_hf > 0)},
        details={"m": "inf" if params.is_infinite else params.m,
                 "H_f": mean_hf, "bakry_emery_min": be_min},
    )
    return rep.evaluate(equality_tol)


def _unit_sphere_area(n):
    from math import gamma, pi

    return 2.0 * pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


def ball_linear_isoperimetric(radius, n, field, params, quad_nodes=64,
                              equality_tol=None):
    """Analytic-oracle version for round balls in R^(n+1) with radial weight.

    Radial quadrature only, no meshing; exact to quadrature tolerance for
    the closed-form equality case.
    """
    if not field.is_radial:
        raise DomainError("the analytic ball path needs a radial weight")
    params.check_density(field)
    R = float(radius)
    h_f = n / R - float(field.profile_derivative(R))
    if h_f <= 0:
        raise HypothesisFailed("H_f is not positive on the sphere", flag="Hf_positive")
    x, w = np.polynomial.legendre.leggauss(quad_nodes)
    t = 0.5 * R * (x + 1.0)
    sigma = _unit_sphere_area(n)
    vol_omega = sigma * float(((t**n) * np.exp(-field.profile(t)) * w).sum()) * 0.5 * R
    vol_m = sigma * R**n * float(np.exp(-field.profile(R)))
    # radial Hessian eigenvalues: g'' radially, g'(t)/t tangentially
    ts = np.linspace(R / quad_nodes, R, quad_nodes)
    be_rad = field.profile_second_derivative(ts)
    if not params.is_infinite and params.m > params.d:
        be_rad = be_rad - field.profile_derivative(ts) ** 2 / (params.m - params.d)
    be_tan = field.profile_derivative(ts) / ts
    be_min = float(min(be_rad.min(), be_tan.min()))
    rep = CheckReport(
        check_id="linear_isoperimetric_ball",
        kind="inequality",
        lhs=h_f * vol_omega,
        rhs=params.volume_factor * vol_m,
        tolerance=1e-10 * max(1.0, vol_m),
        hypothesis_flags={"Hf_positive": True, "bakry_emery_nonneg": be_min >= -1e-10},
        details={"m": "inf" if params.is_infinite else params.m,
                 "n": n, "radius": R, "H_f": h_f, "bakry_emery_min": be_min,
                 "analytic_path": True},
    )
    return rep.evaluate(equality_tol)
