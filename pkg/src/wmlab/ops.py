"""Density-weighted discrete differential operators on simplicial meshes.

P1 elements throughout.  The density enters each cell through the value of
e^(-f) at the cell midpoint by default (keeps symmetry and definiteness
exactly); a quadrature order can be requested for strongly curved weights.
"""

import numpy as np
from scipy import sparse

from .errors import DegenerateCell, NonTangent
from .mesh import CURVE, PLANAR_DOMAIN, SURFACE, segment_rule, triangle_rule

MIN_ANGLE = 1e-6  # radians; below this the P1 gradients overflow


class OperatorPack:
    """Weighted stiffness and mass matrices of a mesh.

    stiffness[i,j] = integral of <grad phi_i, grad phi_j> e^(-f),
    mass[i,j]      = integral of phi_i phi_j e^(-f).

    ``lumped_mass`` is the row-sum diagonal, used for pointwise operator
    values; the consistent mass drives eigenproblems.
    """

    def __init__(self, stiffness, mass, lumped_mass):
        self.stiffness = stiffness
        self.mass = mass
        self.lumped_mass = lumped_mass

    @property
    def vertex_count(self):
        return self.stiffness.shape[0]

    def drift_laplacian(self, u):
        """Pointwise Delta_f u = -lumped_mass^-1 (S u)."""
        return -(self.stiffness @ np.asarray(u, dtype=float)) / self.lumped_mass

    def export_matrix_market(self, path_prefix):
        from scipy.io import mmwrite

        mmwrite(f"{path_prefix}_stiffness.mtx", sparse.coo_matrix(self.stiffness))
        mmwrite(f"{path_prefix}_mass.mtx", sparse.coo_matrix(self.mass))


def _cell_density_factors(mesh, field, qorder):
    """Per-cell quadrature (weights, e^(-f) values, barycentric points)."""
    k = mesh.cells.shape[1]
    if qorder is None:
        bary = np.full((1, k), 1.0 / k)
        w = np.array([1.0])
    elif mesh.cell_kind == CURVE:
        bary, w = segment_rule(qorder)
    else:
        bary, w = triangle_rule(qorder)
    corners = mesh.vertices[mesh.cells]
    pts = np.einsum("qk,mkd->mqd", bary, corners)
    if hasattr(field, "value"):
        f = np.asarray(field.value(pts.reshape(-1, pts.shape[-1]))).reshape(pts.shape[:2])
    else:
        fv = np.asarray(field, dtype=float)
        f = np.einsum("qk,mk->mq", bary, fv[mesh.cells])
    return w, np.exp(-f), bary


def _triangle_gradients(mesh):
    """Constant P1 gradients per triangle, plus areas, in the embedding."""
    v = mesh.vertices
    if v.shape[1] == 2:
        v = np.pad(v, ((0, 0), (0, 1)))
    p = [v[mesh.cells[:, i]] for i in range(3)]
    nrm = np.cross(p[1] - p[0], p[2] - p[0])
    twoA = np.linalg.norm(nrm, axis=1)
    if np.any(twoA <= 0):
        raise DegenerateCell("zero-area triangle")
    nhat = nrm / twoA[:, None]
    edges = [p[2] - p[1], p[0] - p[2], p[1] - p[0]]  # opposite each corner
    lengths = np.stack([np.linalg.norm(e, axis=1) for e in edges])
    # smallest angle from the law of sines: sin(angle_i) = 2A * ... guard
    min_sin = twoA / (lengths.max(axis=0) * np.partition(lengths, 1, axis=0)[1])
    if np.any(min_sin < MIN_ANGLE):
        raise DegenerateCell("triangle angle below 1e-6 rad")
    grads = np.stack([np.cross(nhat, e) / twoA[:, None] for e in edges], axis=1)
    return grads, 0.5 * twoA, nhat


def assemble(mesh, field, qorder=None):
    """Weighted stiffness/mass pack for a DensityField or per-vertex f.

    ``qorder=None`` samples e^(-f) at cell midpoints; an integer requests
    that many quadrature points per cell for the density factor.
    """
    n = len(mesh.vertices)
    w, env, bary = _cell_density_factors(mesh, field, qorder)
    if mesh.cell_kind == CURVE:
        lengths = mesh.cell_measures()
        wc = env @ w                       # density factor per cell
        s_loc = np.array([[1.0, -1.0], [-1.0, 1.0]])
        sdata = (wc / lengths)[:, None, None] * s_loc
        if qorder is None:
            m_loc = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
            mdata = (wc * lengths)[:, None, None] * m_loc
        else:
            phi = bary                      # (q, 2)
            mloc = np.einsum("q,mq,qi,qj->mij", w, env, phi, phi)
            mdata = lengths[:, None, None] * mloc
    else:
        grads, areas, _ = _triangle_gradients(mesh)
        wc = env @ w
        gg = np.einsum("mik,mjk->mij", grads, grads)
        sdata = (wc * areas)[:, None, None] * gg
        if qorder is None:
            m_loc = (np.ones((3, 3)) + np.eye(3)) / 12.0
            mdata = (wc * areas)[:, None, None] * m_loc
        else:
            phi = bary
            mloc = np.einsum("q,mq,qi,qj->mij", w, env, phi, phi)
            mdata = areas[:, None, None] * mloc

    k = mesh.cells.shape[1]
    rows = np.repeat(mesh.cells, k, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, k)).ravel()
    S = sparse.csr_array((sdata.ravel(), (rows, cols)), shape=(n, n))
    M = sparse.csr_array((mdata.ravel(), (rows, cols)), shape=(n, n))
    lumped = np.asarray(M.sum(axis=1)).ravel()
    return OperatorPack(S, M, lumped)


# -- extrinsic curvature ------------------------------------------------------

def voronoi_vertex_measure(mesh):
    """Circumcentric (mixed) dual measure per vertex.

    For curves this is half the length of the adjacent segments.  For
    surfaces it is Meyer's mixed area: circumcentric in non-obtuse
    triangles, the barycentric fallback (1/2 at the obtuse corner, 1/4
    elsewhere) otherwise.  This is the vertex measure that makes the
    coordinate Laplacian a consistent curvature estimate at irregular
    vertices.
    """
    n = len(mesh.vertices)
    measure = np.zeros(n)
    if mesh.cell_kind == CURVE:
        L = mesh.cell_measures()
        for i in range(2):
            np.add.at(measure, mesh.cells[:, i], 0.5 * L)
        return measure
    v = mesh.vertices
    if v.shape[1] == 2:
        v = np.pad(v, ((0, 0), (0, 1)))
    p = [v[mesh.cells[:, i]] for i in range(3)]
    areas = mesh.cell_measures()
    e = [p[(i + 2) % 3] - p[(i + 1) % 3] for i in range(3)]  # edge opposite corner i
    lsq = np.stack([np.einsum("ij,ij->i", ei, ei) for ei in e])
    # cot(angle at corner i) = (l_j^2 + l_k^2 - l_i^2) / (4 A)
    cots = np.stack([
        (lsq[(i + 1) % 3] + lsq[(i + 2) % 3] - lsq[i]) / (4.0 * areas) for i in range(3)])
    obtuse = cots < 0.0
    any_obtuse = obtuse.any(axis=0)
    for i in range(3):
        circum = 0.125 * (lsq[(i + 1) % 3] * cots[(i + 1) % 3] +
                          lsq[(i + 2) % 3] * cots[(i + 2) % 3])
        fallback = np.where(obtuse[i], 0.5 * areas, 0.25 * areas)
        np.add.at(measure, mesh.cells[:, i], np.where(any_obtuse, fallback, circum))
    return measure


def mean_curvature_vector(mesh):
    """Discrete mean curvature vector of a closed embedded mesh.

    Unweighted Laplacian applied to the coordinates over the circumcentric
    lumped vertex measure; points toward the center of convex bodies,
    |H| = n/rho on round spheres.
    """
    if not mesh.is_closed or mesh.cell_kind == PLANAR_DOMAIN:
        raise DegenerateCell("mean curvature needs a closed curve or surface mesh")
    pack = assemble(mesh, _ZeroField())
    return -(pack.stiffness @ mesh.vertices) / voronoi_vertex_measure(mesh)[:, None]


class _ZeroField:
    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[0]) if x.ndim > 1 else 0.0


def _orientation_sign(mesh):
    """+1 when the stored orientation is outward/counterclockwise."""
    v = mesh.vertices
    if mesh.cell_kind == CURVE:
        p, q = v[mesh.cells[:, 0]], v[mesh.cells[:, 1]]
        area2 = np.sum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0])
        return 1.0 if area2 >= 0 else -1.0
    p = [v[mesh.cells[:, i]] for i in range(3)]
    vol6 = np.einsum("ij,ij->", p[0], np.cross(p[1], p[2]))
    return 1.0 if vol6 >= 0 else -1.0


def vertex_normals(mesh):
    """Outward unit normals at the vertices of a closed embedded mesh."""
    if mesh.cell_kind == CURVE:
        if mesh.vertices.shape[1] != 2:
            raise DegenerateCell("curve normals defined for plane curves")
        n = len(mesh.vertices)
        nxt = np.empty(n, dtype=np.int64)
        prv = np.empty(n, dtype=np.int64)
        nxt[mesh.cells[:, 0]] = mesh.cells[:, 1]
        prv[mesh.cells[:, 1]] = mesh.cells[:, 0]
        t = mesh.vertices[nxt] - mesh.vertices[prv]
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        return _orientation_sign(mesh) * np.stack([t[:, 1], -t[:, 0]], axis=1)
    grads, areas, nhat = _triangle_gradients(mesh)
    acc = np.zeros_like(mesh.vertices)
    corners = mesh.vertices[mesh.cells]
    for i in range(3):
        a = corners[:, (i + 1) % 3] - corners[:, i]
        b = corners[:, (i + 2) % 3] - corners[:, i]
        cosang = np.clip((a * b).sum(1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)),
                         -1.0, 1.0)
        np.add.at(acc, mesh.cells[:, i], np.arccos(cosang)[:, None] * nhat)
    acc /= np.linalg.norm(acc, axis=1, keepdims=True)
    return _orientation_sign(mesh) * acc


def weighted_mean_curvature(mesh, field, orientation="outward"):
    """H_f = div(nu) - <grad f, nu> per vertex, nu the chosen unit normal.

    Flipping the orientation negates the values exactly.
    """
    if orientation not in ("outward", "inward"):
        raise ValueError("orientation must be 'outward' or 'inward'")
    sign = 1.0 if orientation == "outward" else -1.0
    nu = sign * vertex_normals(mesh)
    hvec = mean_curvature_vector(mesh)
    grad_f = field.gradient(mesh.vertices)
    return -(hvec * nu).sum(axis=1) - (grad_f * nu).sum(axis=1)


def hf_minus_gradf_sq(mesh, field):
    """|H_f vector - grad f|^2 = |H|^2 + |tangential grad f|^2 per vertex."""
    nu = vertex_normals(mesh)
    hvec = mean_curvature_vector(mesh)
    grad_f = field.gradient(mesh.vertices)
    grad_f_tan = grad_f - (grad_f * nu).sum(axis=1)[:, None] * nu
    diff = hvec - grad_f_tan
    return (diff * diff).sum(axis=1)


# -- tangential calculus -------------------------------------------------------

def tangential_gradient(mesh, u):
    """Per-cell P1 gradient of a vertex function, as ambient vectors."""
    u = np.asarray(u, dtype=float)
    if mesh.cell_kind == CURVE:
        e = mesh.vertices[mesh.cells[:, 1]] - mesh.vertices[mesh.cells[:, 0]]
        L = np.linalg.norm(e, axis=1)
        du = (u[mesh.cells[:, 1]] - u[mesh.cells[:, 0]]) / L
        return du[:, None] * (e / L[:, None])
    grads, _, _ = _triangle_gradients(mesh)
    g = np.einsum("mik,mi->mk", grads, u[mesh.cells])
    if mesh.vertices.shape[1] == 2:
        g = g[:, :2]
    return g


def vertex_average_cell_field(mesh, cell_field):
    """Area-weighted dual-cell average of a per-cell quantity."""
    cf = np.asarray(cell_field, dtype=float)
    meas = mesh.cell_measures()
    k = mesh.cells.shape[1]
    num = np.zeros((len(mesh.vertices),) + cf.shape[1:])
    den = np.zeros(len(mesh.vertices))
    for i in range(k):
        np.add.at(num, mesh.cells[:, i], (meas.reshape(-1, *([1] * (cf.ndim - 1)))) * cf)
        np.add.at(den, mesh.cells[:, i], meas)
    return num / den.reshape(-1, *([1] * (cf.ndim - 1)))


def _cells_from_vertex_field(mesh, Y):
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] == len(mesh.cells) and Y.ndim == 2:
        return Y
    if Y.shape[0] == len(mesh.vertices):
        return Y[mesh.cells].mean(axis=1)
    raise ValueError("vector field must be per-cell or per-vertex")


def f_divergence(mesh, field, Y, tangent_tol=1e-8):
    """Extrinsic f-divergence div_M(Y) - <grad f, Y> per vertex.

    Defined weakly against the weighted measure, so integration by parts
    against mesh functions holds to assembly roundoff; with Y the cell
    gradient of u this is exactly the drift Laplacian of u.
    """
    Yc = _cells_from_vertex_field(mesh, Y)
    scale = max(float(np.abs(Yc).max()), 1e-300)
    if mesh.cell_kind == CURVE:
        e = mesh.vertices[mesh.cells[:, 1]] - mesh.vertices[mesh.cells[:, 0]]
        ehat = e / np.linalg.norm(e, axis=1, keepdims=True)
        off = Yc - (Yc * ehat).sum(1)[:, None] * ehat
    else:
        _, _, nhat = _triangle_gradients(mesh)
        if mesh.vertices.shape[1] == 2:
            off = np.zeros_like(Yc)
        else:
            off = (Yc * nhat).sum(1)[:, None] * nhat
    floor = 1e-13 * (1.0 + float(np.abs(mesh.vertices).max()))
    if float(np.abs(off).max()) > tangent_tol * scale + floor:
        raise NonTangent("vector field is not tangent to the mesh")

    pack = assemble(mesh, field)
    w, env, _ = _cell_density_factors(mesh, field, None)
    wc = env @ w
    meas = mesh.cell_measures()
    if mesh.cell_kind == CURVE:
        e = mesh.vertices[mesh.cells[:, 1]] - mesh.vertices[mesh.cells[:, 0]]
        L = np.linalg.norm(e, axis=1)
        gphi = np.stack([-e / L[:, None] ** 2, e / L[:, None] ** 2], axis=1)
    else:
        gphi, _, _ = _triangle_gradients(mesh)
        if mesh.vertices.shape[1] == 2:
            gphi = gphi[:, :, :2]
    b = np.zeros(len(mesh.vertices))
    contrib = np.einsum("m,m,mik,mk->mi", wc, meas, gphi, Yc)
    for i in range(mesh.cells.shape[1]):
        np.add.at(b, mesh.cells[:, i], contrib[:, i])
    return -b / pack.lumped_mass


# -- boundary geometry of planar domains -----------------------------------------

class BoundaryData:
    """Outward normals, discrete curvature and dual lengths along loops."""

    def __init__(self, mesh):
        if mesh.cell_kind != PLANAR_DOMAIN:
            raise DegenerateCell("boundary data defined for planar domains")
        self.mesh = mesh
        self.loops = mesh.boundary_loops()
        idx, nrm, crv, dual, loop_id = [], [], [], [], []
        v = mesh.vertices
        for li, loop in enumerate(self.loops):
            m = len(loop)
            for a in range(m):
                p, c, n = v[loop[a - 1]], v[loop[a]], v[loop[(a + 1) % m]]
                e1, e2 = c - p, n - c
                l1, l2 = np.linalg.norm(e1), np.linalg.norm(e2)
                t = (n - p) / np.linalg.norm(n - p)
                cross = e1[0] * e2[1] - e1[1] * e2[0]
                chord = np.linalg.norm(n - p)
                if abs(cross) < 1e-14 * l1 * l2:
                    kappa = 0.0
                else:
                    kappa = np.sign(cross) * 2.0 * abs(cross) / (l1 * l2 * chord)
                idx.append(loop[a])
                nrm.append([t[1], -t[0]])
                crv.append(kappa)
                dual.append(0.5 * (l1 + l2))
                loop_id.append(li)
        self.vertex_ids = np.array(idx, dtype=np.int64)
        self.normals = np.array(nrm)
        self.curvatures = np.array(crv)
        self.dual_lengths = np.array(dual)
        self.loop_ids = np.array(loop_id, dtype=np.int64)
