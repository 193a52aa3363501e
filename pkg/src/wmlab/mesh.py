"""Simplicial meshes: closed polylines, closed triangle surfaces, planar domains.

Meshes are immutable after construction.  Boundary structure (edges with
induced orientation plus string labels) is derived on construction for
planar domains; closed curve/surface meshes have an empty boundary.
"""

import numpy as np

from .errors import DegenerateCell, InvalidTopology

QUALITY_FLOOR = 1e-3  # minimum inradius/circumradius

CURVE = "curve"
SURFACE = "surface"
PLANAR_DOMAIN = "planar-domain"


def cross2(a, b):
    """Scalar cross product of planar vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class SimplicialMesh:
    """Vertices plus segment or triangle cells with consistent orientation.

    Parameters
    ----------
    vertices : (n, d) float array
    cells : (m, 2) or (m, 3) int array
        Segments for curves, triangles for surfaces and planar domains.
        Triangles of a planar domain must be counterclockwise; surface
        triangles must orient consistently (outward for closed surfaces).
    cell_kind : one of "curve", "surface", "planar-domain"
    boundary_labels : optional list of labels, one per boundary edge, in
        the order of ``boundary_edges``; defaults to "M" everywhere.
    """

    def __init__(self, vertices, cells, cell_kind, boundary_labels=None, metadata=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.cell_kind = cell_kind
        self.metadata = dict(metadata or {})
        if self.vertices.ndim != 2:
            raise InvalidTopology("vertices must be a 2D array")
        if cell_kind == CURVE:
            if self.cells.shape[1] != 2:
                raise InvalidTopology("curve cells must be segments")
        elif cell_kind in (SURFACE, PLANAR_DOMAIN):
            if self.cells.shape[1] != 3:
                raise InvalidTopology(f"{cell_kind} cells must be triangles")
            if cell_kind == PLANAR_DOMAIN and self.vertices.shape[1] != 2:
                raise InvalidTopology("planar domains live in R^2")
        else:
            raise InvalidTopology(f"unknown cell kind {cell_kind!r}")
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= len(self.vertices)):
            raise InvalidTopology("cell index out of range")

        self.boundary_edges, self._validate_cache = self._validate()
        if boundary_labels is None:
            self.boundary_labels = ["M"] * len(self.boundary_edges)
        else:
            if len(boundary_labels) != len(self.boundary_edges):
                raise InvalidTopology("one label per boundary edge required")
            self.boundary_labels = list(boundary_labels)

    # -- validation -----------------------------------------------------

    def _validate(self):
        if self.cell_kind == CURVE:
            return self._validate_curve()
        return self._validate_triangles()

    def _validate_curve(self):
        n = len(self.vertices)
        outdeg = np.zeros(n, dtype=int)
        indeg = np.zeros(n, dtype=int)
        np.add.at(outdeg, self.cells[:, 0], 1)
        np.add.at(indeg, self.cells[:, 1], 1)
        used = (outdeg + indeg) > 0
        if not np.all((outdeg[used] == 1) & (indeg[used] == 1)):
            raise InvalidTopology("curve must be a disjoint union of closed oriented loops")
        lengths = np.linalg.norm(
            self.vertices[self.cells[:, 1]] - self.vertices[self.cells[:, 0]], axis=1)
        if np.any(lengths <= 0):
            raise DegenerateCell("zero-length segment")
        return np.zeros((0, 2), dtype=np.int64), {}

    def _validate_triangles(self):
        tris = self.cells
        # directed edges: each may appear at most once (consistent orientation)
        directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
        keys = directed[:, 0].astype(np.int64) * len(self.vertices) + directed[:, 1]
        if len(np.unique(keys)) != len(keys):
            raise InvalidTopology("inconsistent orientation or duplicated triangle edge")
        # undirected edge counts: 1 (boundary) or 2 (interior)
        und = np.sort(directed, axis=1)
        ukeys = und[:, 0] * len(self.vertices) + und[:, 1]
        uniq, counts = np.unique(ukeys, return_counts=True)
        if np.any(counts > 2):
            raise InvalidTopology("edge shared by more than two triangles")
        boundary_keys = set(uniq[counts == 1].tolist())
        boundary = np.array(
            [e for e, k in zip(directed, keys) if (min(e) * len(self.vertices) + max(e)) in boundary_keys],
            dtype=np.int64,
        ).reshape(-1, 2)
        if self.cell_kind == SURFACE and len(boundary):
            raise InvalidTopology("surface mesh must be closed")
        if self.cell_kind == PLANAR_DOMAIN:
            areas = self._triangle_signed_areas()
            if np.any(areas <= 0):
                raise InvalidTopology("planar-domain triangles must be counterclockwise")
        q = self.cell_quality()
        if np.any(q < QUALITY_FLOOR):
            raise DegenerateCell(
                f"cell quality {q.min():.2e} below floor {QUALITY_FLOOR:.0e}")
        return boundary, {}

    def _triangle_signed_areas(self):
        p0 = self.vertices[self.cells[:, 0]]
        p1 = self.vertices[self.cells[:, 1]]
        p2 = self.vertices[self.cells[:, 2]]
        return 0.5 * cross2(p1 - p0, p2 - p0)

    # -- measures ----------------------------------------------------------

    def cell_measures(self):
        """Length of each segment or area of each triangle."""
        if self.cell_kind == CURVE:
            return np.linalg.norm(
                self.vertices[self.cells[:, 1]] - self.vertices[self.cells[:, 0]], axis=1)
        p0 = self.vertices[self.cells[:, 0]]
        p1 = self.vertices[self.cells[:, 1]]
        p2 = self.vertices[self.cells[:, 2]]
        if self.vertices.shape[1] == 2:
            return 0.5 * np.abs(cross2(p1 - p0, p2 - p0))
        return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=-1)

    def cell_quality(self):
        """Inradius / circumradius per triangle (1/2 for equilateral)."""
        if self.cell_kind == CURVE:
            return np.ones(len(self.cells))
        p0 = self.vertices[self.cells[:, 0]]
        p1 = self.vertices[self.cells[:, 1]]
        p2 = self.vertices[self.cells[:, 2]]
        a = np.linalg.norm(p1 - p2, axis=-1)
        b = np.linalg.norm(p2 - p0, axis=-1)
        c = np.linalg.norm(p0 - p1, axis=-1)
        area = self.cell_measures()
        s = 0.5 * (a + b + c)
        with np.errstate(divide="ignore", invalid="ignore"):
            r_in = area / s
            r_circ = a * b * c / (4.0 * np.maximum(area, 1e-300))
            return np.where(area > 0, r_in / r_circ, 0.0)

    def mesh_size(self):
        """Longest cell diameter; the h of refinement studies."""
        if self.cell_kind == CURVE:
            return float(self.cell_measures().max())
        p = [self.vertices[self.cells[:, i]] for i in range(3)]
        e = [np.linalg.norm(p[(i + 1) % 3] - p[i], axis=-1) for i in range(3)]
        return float(np.max(e))

    def euler_characteristic(self):
        nv = len(np.unique(self.cells))
        if self.cell_kind == CURVE:
            return nv - len(self.cells)
        directed = np.concatenate(
            [self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [2, 0]]])
        und = np.sort(directed, axis=1)
        ne = len(np.unique(und[:, 0] * len(self.vertices) + und[:, 1]))
        return nv - ne + len(self.cells)

    @property
    def is_closed(self):
        return len(self.boundary_edges) == 0

    # -- boundary structure ---------------------------------------------------

    def boundary_vertex_labels(self):
        """Vertex labels from edge labels; "M" wins at junctions, then others."""
        priority = {"M": 0, "cone-face": 1, "cutoff": 2}
        labels = {}
        for (i, j), lab in zip(self.boundary_edges, self.boundary_labels):
            for v in (int(i), int(j)):
                if v not in labels or priority.get(lab, 9) < priority.get(labels[v], 9):
                    labels[v] = lab
        return labels

    def boundary_loops(self):
        """Boundary as vertex loops, each in induced orientation."""
        nxt = {int(i): int(j) for i, j in self.boundary_edges}
        seen = set()
        loops = []
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = nxt[start]
            while cur != start:
                loop.append(cur)
                seen.add(cur)
                cur = nxt[cur]
            loops.append(loop)
        return loops

    def boundary_edges_with(self, label):
        idx = [k for k, lab in enumerate(self.boundary_labels) if lab == label]
        return self.boundary_edges[idx]

    def with_vertices(self, vertices, metadata=None):
        """Same connectivity over new vertex positions."""
        md = dict(self.metadata)
        md.update(metadata or {})
        return SimplicialMesh(vertices, self.cells, self.cell_kind,
                              boundary_labels=self.boundary_labels, metadata=md)

    def __repr__(self):
        return (f"SimplicialMesh({self.cell_kind}, {len(self.vertices)} vertices, "
                f"{len(self.cells)} cells)")


# -- quadrature ---------------------------------------------------------------

# interior 3-point rule, exact for quadratics
_TRI_3PT = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.array([1 / 3, 1 / 3, 1 / 3]),
)
_S15 = np.sqrt(15.0)
_A1, _B1 = 0.797426985353087, 0.101286507323456
_A2, _B2 = 0.059715871789770, 0.470142064105115
# Radon 7-point rule, exact for quintics
_TRI_7PT = (
    np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
        [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
    ]),
    np.concatenate([[9 / 40], np.full(3, (155 - _S15) / 1200), np.full(3, (155 + _S15) / 1200)]),
)
_TRI_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    3: _TRI_3PT,
    7: _TRI_7PT,
}


def triangle_rule(npoints):
    """Barycentric points and weights; npoints in {1, 3, 7}."""
    if npoints not in _TRI_RULES:
        raise ValueError(f"triangle rules available for 1, 3 or 7 points, not {npoints}")
    return _TRI_RULES[npoints]


def segment_rule(npoints):
    """Gauss-Legendre rule on [0, 1] as barycentric pairs and weights."""
    x, w = np.polynomial.legendre.leggauss(int(npoints))
    t = 0.5 * (x + 1.0)
    return np.stack([1.0 - t, t], axis=1), 0.5 * w


def quadrature_points(mesh, npoints=None):
    """Quadrature nodes per cell: (cells, q, d) coords and (q,) weights."""
    if mesh.cell_kind == CURVE:
        bary, w = segment_rule(2 if npoints is None else npoints)
    else:
        bary, w = triangle_rule(3 if npoints is None else npoints)
    corners = mesh.vertices[mesh.cells]            # (m, k, d)
    pts = np.einsum("qk,mkd->mqd", bary, corners)  # (m, q, d)
    return pts, w, bary


def density_at_quadrature(mesh, field, npoints=None):
    """e^(-f) at quadrature nodes; ``field`` is a DensityField or per-vertex f."""
    pts, w, bary = quadrature_points(mesh, npoints)
    if hasattr(field, "value"):
        f = field.value(pts.reshape(-1, pts.shape[-1])).reshape(pts.shape[:2])
    else:
        fv = np.asarray(field, dtype=float)
        if fv.shape != (len(mesh.vertices),):
            raise ValueError("per-vertex density must have one value per vertex")
        f = np.einsum("qk,mk->mq", bary, fv[mesh.cells])
    return np.exp(-f), w


def weighted_measure(mesh, field, npoints=None):
    """Total weighted measure: sum over cells of the quadrature of e^(-f)."""
    env, w = density_at_quadrature(mesh, field, npoints)
    return float(np.einsum("m,mq,q->", mesh.cell_measures(), env, w))


# -- transforms ----------------------------------------------------------------

def translate(mesh, offset):
    off = np.asarray(offset, dtype=float)
    return mesh.with_vertices(mesh.vertices + off)


def linear_transform(mesh, matrix):
    """Apply a linear map; diagonal scaling turns circles into ellipses."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim == 1:
        A = np.diag(A)
    if np.linalg.det(A) <= 0:
        raise ValueError("transform must preserve orientation")
    return mesh.with_vertices(mesh.vertices @ A.T)


def radial_perturbation(mesh, amplitude, seed=0):
    """Scale each vertex by 1 + amplitude * eta with deterministic noise."""
    rng = np.random.default_rng(seed)
    eta = rng.uniform(-1.0, 1.0, size=len(mesh.vertices))
    return mesh.with_vertices(mesh.vertices * (1.0 + amplitude * eta)[:, None],
                              metadata={"radial_noise": amplitude})
