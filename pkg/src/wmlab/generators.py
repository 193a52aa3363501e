"""Test-geometry generators: circles, icospheres, disks, wedges, annuli,
and geodesic spheres of the curved space forms with analytic extrinsic data.
"""

import numpy as np
from scipy.spatial import Delaunay

from .errors import DegenerateInput, DomainError
from .fields import ImmersionFields
from .mesh import CURVE, PLANAR_DOMAIN, SURFACE, SimplicialMesh, cross2
from .spaceform import c_delta, s_delta

DEFAULT_EPS_VERTEX = 1e-3  # cone-vertex cutoff, as a fraction of the radius


def gen_circle(radius, n_segments):
    """Closed polyline inscribed in the circle, counterclockwise."""
    if n_segments < 8:
        raise DegenerateInput("need at least 8 segments")
    if radius <= 0:
        raise DegenerateInput("radius must be positive")
    th = 2.0 * np.pi * np.arange(n_segments) / n_segments
    verts = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    cells = np.stack([np.arange(n_segments), (np.arange(n_segments) + 1) % n_segments], axis=1)
    return SimplicialMesh(verts, cells, CURVE,
                          metadata={"generator": "circle", "radius": radius})


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=float)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def gen_icosphere(radius, subdivisions):
    """Subdivided icosahedron projected to the sphere; 10*4^s + 2 vertices."""
    if subdivisions < 0:
        raise DegenerateInput("subdivisions must be >= 0")
    if radius <= 0:
        raise DegenerateInput("radius must be positive")
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = _ICO_FACES.tolist()
    for _ in range(int(subdivisions)):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    verts = radius * np.array(verts)
    mesh = SimplicialMesh(verts, np.array(faces), SURFACE,
                          metadata={"generator": "icosphere", "radius": radius,
                                    "subdivisions": int(subdivisions)})
    # outward orientation: positive enclosed volume
    p = [verts[mesh.cells[:, i]] for i in range(3)]
    vol = np.einsum("ij,ij->", p[0], np.cross(p[1], p[2])) / 6.0
    if vol < 0:
        mesh = SimplicialMesh(verts, mesh.cells[:, [0, 2, 1]], SURFACE, metadata=mesh.metadata)
    return mesh


def gen_disk(radius, n_rings):
    """Triangulated disk from hexagonal rings; boundary labeled "M"."""
    if n_rings < 2:
        raise DegenerateInput("need at least 2 rings")
    if radius <= 0:
        raise DegenerateInput("radius must be positive")
    pts = [np.zeros(2)]
    for k in range(1, n_rings + 1):
        m = 6 * k
        th = 2.0 * np.pi * np.arange(m) / m
        r = radius * k / n_rings
        pts.append(np.stack([r * np.cos(th), r * np.sin(th)], axis=1))
    verts = np.vstack(pts)
    tri = Delaunay(verts)
    cells = tri.simplices.copy()
    p0, p1, p2 = verts[cells[:, 0]], verts[cells[:, 1]], verts[cells[:, 2]]
    flip = cross2(p1 - p0, p2 - p0) < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]
    return SimplicialMesh(verts, cells, PLANAR_DOMAIN,
                          metadata={"generator": "disk", "radius": radius,
                                    "n_rings": int(n_rings)})


def _wedge_outer_reach(theta, radius, center_offset):
    """Distance from the apex to the arc circle along direction theta."""
    if center_offset == 0.0:
        return np.full_like(np.asarray(theta, dtype=float), radius)
    proj = center_offset * np.cos(theta)
    disc = radius**2 - center_offset**2 + proj**2
    if np.any(disc <= 0):
        raise DegenerateInput("arc circle does not enclose the apex direction")
    return proj + np.sqrt(disc)


def build_wedge(radius, opening_angle, n_rings, eps_vertex=None, arc_center_offset=0.0):
    """Wedge mesh builder without the convexity cap; see :func:`gen_wedge`."""
    if n_rings < 2:
        raise DegenerateInput("need at least 2 rings")
    if radius <= 0:
        raise DegenerateInput("radius must be positive")
    if not 0.0 < opening_angle < 2.0 * np.pi:
        raise DegenerateInput("opening angle must lie in (0, 2*pi)")
    if abs(arc_center_offset) >= radius:
        raise DegenerateInput("arc center offset must be smaller than the radius")
    eps = DEFAULT_EPS_VERTEX * radius if eps_vertex is None else float(eps_vertex)
    if not 0.0 < eps < radius:
        raise DegenerateInput("cutoff radius must lie in (0, radius)")

    n_theta = max(2, int(round(2.0 * n_rings * opening_angle / (np.pi / 2.0))))
    dtheta = opening_angle / n_theta
    # geometric grading keeps cells near-square all the way down to the cutoff
    n_layers = max(n_rings, int(np.ceil(np.log(radius / eps) / np.log1p(dtheta))))
    rr = radius * (eps / radius) ** ((n_layers - np.arange(n_layers + 1)) / n_layers)
    th = -0.5 * opening_angle + opening_angle * np.arange(n_theta + 1) / n_theta
    reach = _wedge_outer_reach(th, radius, arc_center_offset) / radius

    verts = np.empty(((n_layers + 1) * (n_theta + 1), 2))
    for k in range(n_layers + 1):
        rad = rr[k] * reach
        verts[k * (n_theta + 1):(k + 1) * (n_theta + 1), 0] = rad * np.cos(th)
        verts[k * (n_theta + 1):(k + 1) * (n_theta + 1), 1] = rad * np.sin(th)

    def vid(k, j):
        return k * (n_theta + 1) + j

    cells = []
    for k in range(n_layers):
        for j in range(n_theta):
            a, b = vid(k, j), vid(k + 1, j)
            c, d = vid(k + 1, j + 1), vid(k, j + 1)
            cells += [[a, b, c], [a, c, d]]
    mesh = SimplicialMesh(verts, np.array(cells), PLANAR_DOMAIN)

    labels = []
    for i, j in mesh.boundary_edges:
        ki, kj = i // (n_theta + 1), j // (n_theta + 1)
        ji, jj = i % (n_theta + 1), j % (n_theta + 1)
        if ki == kj == n_layers:
            labels.append("M")
        elif ki == kj == 0:
            labels.append("cutoff")
        elif ji == jj == 0 or ji == jj == n_theta:
            labels.append("cone-face")
        else:  # pragma: no cover - structured grid leaves no other case
            labels.append("cone-face")
    return SimplicialMesh(verts, np.array(cells), PLANAR_DOMAIN, boundary_labels=labels,
                          metadata={"generator": "wedge", "radius": radius,
                                    "opening_angle": opening_angle, "eps_vertex": eps,
                                    "arc_center_offset": arc_center_offset,
                                    "apex": [0.0, 0.0], "n_rings": int(n_rings)})


def gen_wedge(radius, opening_angle, n_rings, eps_vertex=None, arc_center_offset=0.0):
    """Convex planar cone sector with the vertex excised at ``eps_vertex``.

    The outer arc is labeled "M", the two straight rays "cone-face" and the
    tiny excision ring "cutoff".  ``arc_center_offset`` slides the arc's
    circle center along the bisector, producing the off-center strictness
    control.
    """
    if not 0.0 < opening_angle <= np.pi:
        raise DegenerateInput("opening angle must lie in (0, pi] for a convex cone")
    return build_wedge(radius, opening_angle, n_rings,
                       eps_vertex=eps_vertex, arc_center_offset=arc_center_offset)


def gen_annulus(r_inner, r_outer, n_rings):
    """Annulus as a negative-control geometry; both circles labeled "M"."""
    if n_rings < 2:
        raise DegenerateInput("need at least 2 rings")
    if not 0.0 < r_inner < r_outer:
        raise DegenerateInput("need 0 < r_inner < r_outer")
    n_theta = 8 * n_rings
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    rr = np.linspace(r_inner, r_outer, n_rings + 1)
    verts = np.concatenate([
        np.stack([r * np.cos(th), r * np.sin(th)], axis=1) for r in rr])

    def vid(k, j):
        return k * n_theta + j % n_theta

    cells = []
    for k in range(n_rings):
        for j in range(n_theta):
            a, b = vid(k, j), vid(k + 1, j)
            c, d = vid(k + 1, j + 1), vid(k, j + 1)
            cells += [[a, b, c], [a, c, d]]
    return SimplicialMesh(verts, np.array(cells), PLANAR_DOMAIN,
                          metadata={"generator": "annulus", "r_inner": r_inner,
                                    "r_outer": r_outer})


def scaled_sphere_with_analytic_fields(space, geodesic_radius, resolution, field,
                                       density_offset=0.0):
    """Geodesic sphere of a space form as an intrinsic round mesh.

    Returns ``(mesh, fields)``: the intrinsic mesh is a round sphere or
    circle of radius s_delta(rho), isometric to the geodesic sphere; the
    fields carry the exact extrinsic data (|H| = n c/s, the weighted mean
    curvature for the radial density, and the embedded model positions used
    by the center-of-mass machinery).

    ``density_offset`` moves the density's radial center a geodesic
    distance along the first tangent axis, so off-center weights with a
    genuine tangential gradient can be produced.
    """
    rho = float(geodesic_radius)
    if rho <= 0:
        raise DomainError("geodesic radius must be positive")
    if space.delta > 0 and rho >= np.pi / (2.0 * np.sqrt(space.delta)):
        raise DomainError("geodesic sphere radius must stay below pi / (2 sqrt(delta))")
    if not field.is_radial:
        raise DomainError("geodesic spheres support radial densities only")
    n = space.dim - 1
    s = float(s_delta(space.delta, rho))
    c = float(c_delta(space.delta, rho))
    if n == 1:
        mesh = gen_circle(s, max(8, int(resolution)))
    elif n == 2:
        mesh = gen_icosphere(s, int(resolution))
    else:
        raise DomainError("hypersurface spectra support n = 1 curves and n = 2 surfaces")

    base = space.basepoint()
    frame = space.tangent_basis(base)   # (n+1) tangent vectors at the base
    w = mesh.vertices / s               # unit directions in T_base coordinates
    ambient = space.exp_map(base, rho * (w @ frame))
    normals = space.unit_radial(base, ambient)
    hvec = -(n * c / s) * normals

    if density_offset == 0.0:
        q = base
    else:
        q = space.exp_map(base, float(density_offset) * frame[0])
    dist_q = np.asarray(space.distance(q, ambient))
    g1 = field.profile_derivative(dist_q)
    grad_f = g1[:, None] * space.unit_radial(q, ambient)
    gf_nu = space.metric(grad_f, normals)
    grad_f_tan = grad_f - gf_nu[:, None] * normals

    fields = ImmersionFields(
        r=np.full(len(w), rho),
        f_val=field.profile(dist_q),
        hf_scalar=n * c / s - gf_nu,
        hf_minus_gradf_sq=(n * c / s) ** 2 + space.metric(grad_f_tan, grad_f_tan),
        source="analytic",
        ambient_points=ambient,
        unit_normals=normals,
        grad_f_ambient=grad_f,
        grad_f_tangential=grad_f_tan,
        hvec=hvec,
        base_point=base,
    )
    mesh.metadata.update({"generator": "geodesic_sphere", "geodesic_radius": rho,
                          "delta": space.delta})
    return mesh, fields
