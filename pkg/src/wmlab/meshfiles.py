"""OFF and OBJ mesh files (ASCII, triangles and polyline segments).

Boundary labels of planar domains travel in a sidecar JSON file
``<mesh>.labels.json`` mapping vertex index to label; edge labels are
reconstructed from vertex labels on load ("M" only between two "M"
vertices, "cutoff" next to any "cutoff" vertex, "cone-face" otherwise).
"""

import json
import os

import numpy as np

from .errors import InvalidTopology, ParseError
from .mesh import CURVE, PLANAR_DOMAIN, SURFACE, SimplicialMesh, cross2

_PLANAR_Z_TOL = 1e-12


def _sidecar_path(path):
    return str(path) + ".labels.json"


def save_mesh(mesh, path, fmt=None):
    """Write OFF or OBJ (by extension when ``fmt`` is None), plus labels."""
    fmt = (fmt or os.path.splitext(str(path))[1].lstrip(".")).upper()
    verts = mesh.vertices
    if verts.shape[1] == 2:
        verts = np.pad(verts, ((0, 0), (0, 1)))
    lines = []
    if fmt == "OFF":
        lines.append("OFF")
        lines.append(f"{len(verts)} {len(mesh.cells)} 0")
        for v in verts:
            lines.append(" ".join("%.17g" % x for x in v))
        for cell in mesh.cells:
            lines.append(f"{len(cell)} " + " ".join(str(int(i)) for i in cell))
    elif fmt == "OBJ":
        for v in verts:
            lines.append("v " + " ".join("%.17g" % x for x in v))
        tag = "f" if mesh.cells.shape[1] == 3 else "l"
        for cell in mesh.cells:
            lines.append(f"{tag} " + " ".join(str(int(i) + 1) for i in cell))
    else:
        raise ParseError(f"unsupported format {fmt!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if len(mesh.boundary_edges):
        labels = mesh.boundary_vertex_labels()
        with open(_sidecar_path(path), "w") as fh:
            json.dump({str(k): v for k, v in sorted(labels.items())}, fh,
                      indent=0, sort_keys=True)


def load_mesh(path, fmt=None):
    """Parse OFF or OBJ; raises ParseError with a line number on bad input."""
    fmt = (fmt or os.path.splitext(str(path))[1].lstrip(".")).upper()
    with open(path) as fh:
        raw = fh.readlines()
    if fmt == "OFF":
        verts, cells = _parse_off(raw)
    elif fmt == "OBJ":
        verts, cells = _parse_obj(raw)
    else:
        raise ParseError(f"unsupported format {fmt!r}")
    return _build(np.array(verts), cells, _load_labels(path))


def _load_labels(path):
    side = _sidecar_path(path)
    if not os.path.exists(side):
        return None
    with open(side) as fh:
        return {int(k): v for k, v in json.load(fh).items()}


def _parse_off(raw):
    it = _content_lines(raw)
    ln, line = next(it, (0, None))
    if line is None or line.split()[0] != "OFF":
        raise ParseError("missing OFF header", line=ln)
    ln, line = next(it, (0, None))
    if line is None:
        raise ParseError("missing count line", line=ln)
    try:
        nv, nf = int(line.split()[0]), int(line.split()[1])
    except (ValueError, IndexError):
        raise ParseError("malformed count line", line=ln)
    verts, cells = [], []
    for _ in range(nv):
        ln, line = next(it, (0, None))
        if line is None:
            raise ParseError("unexpected end of vertex list", line=ln)
        parts = line.split()
        if len(parts) < 3:
            raise ParseError("vertex needs 3 coordinates", line=ln)
        try:
            verts.append([float(x) for x in parts[:3]])
        except ValueError:
            raise ParseError("bad vertex coordinate", line=ln)
    for _ in range(nf):
        ln, line = next(it, (0, None))
        if line is None:
            raise ParseError("unexpected end of face list", line=ln)
        parts = line.split()
        try:
            k = int(parts[0])
            cell = [int(x) for x in parts[1:1 + k]]
        except (ValueError, IndexError):
            raise ParseError("bad face line", line=ln)
        if k not in (2, 3) or len(cell) != k:
            raise ParseError(f"faces must have 2 or 3 vertices, got {k}", line=ln)
        cells.append(cell)
    return verts, cells


def _parse_obj(raw):
    verts, cells = [], []
    for ln, line in _content_lines(raw):
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError("vertex needs 3 coordinates", line=ln)
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ParseError("bad vertex coordinate", line=ln)
        elif parts[0] in ("f", "l"):
            idx = [p.split("/")[0] for p in parts[1:]]
            want = 3 if parts[0] == "f" else 2
            if len(idx) != want:
                raise ParseError(
                    f"'{parts[0]}' element needs {want} vertices (triangles only), got {len(idx)}",
                    line=ln)
            try:
                cells.append([int(i) - 1 for i in idx])
            except ValueError:
                raise ParseError("bad vertex index", line=ln)
        # other OBJ keywords (vn, vt, usemtl, ...) are ignored
    return verts, cells


def _content_lines(raw):
    for ln, line in enumerate(raw, start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield ln, stripped


def _build(verts, cells, vertex_labels):
    if not cells:
        raise InvalidTopology("mesh has no cells")
    arity = {len(c) for c in cells}
    if len(arity) != 1:
        raise InvalidTopology("mixed segment/triangle cells (dangling edge)")
    cells = np.array(cells, dtype=np.int64)
    if cells.min() < 0 or cells.max() >= len(verts):
        raise InvalidTopology("cell index out of range")
    if cells.shape[1] == 2:
        flat = np.all(np.abs(verts[:, 2]) <= _PLANAR_Z_TOL)
        return SimplicialMesh(verts[:, :2] if flat else verts, cells, CURVE)
    if np.all(np.abs(verts[:, 2]) <= _PLANAR_Z_TOL):
        verts2 = verts[:, :2]
        p0, p1, p2 = (verts2[cells[:, i]] for i in range(3))
        flip = cross2(p1 - p0, p2 - p0) < 0
        cells = cells.copy()
        cells[flip] = cells[flip][:, [0, 2, 1]]
        mesh = SimplicialMesh(verts2, cells, PLANAR_DOMAIN)
        if vertex_labels:
            labels = _edge_labels_from_vertices(mesh, vertex_labels)
            mesh = SimplicialMesh(verts2, cells, PLANAR_DOMAIN, boundary_labels=labels)
        return mesh
    mesh = SimplicialMesh(verts, cells, SURFACE)
    p = [verts[mesh.cells[:, i]] for i in range(3)]
    if np.einsum("ij,ij->", p[0], np.cross(p[1], p[2])) < 0:
        mesh = SimplicialMesh(verts, cells[:, [0, 2, 1]], SURFACE)
    return mesh


def _edge_labels_from_vertices(mesh, vertex_labels):
    labels = []
    for i, j in mesh.boundary_edges:
        li = vertex_labels.get(int(i), "M")
        lj = vertex_labels.get(int(j), "M")
        if li == lj == "M":
            labels.append("M")
        elif {li, lj} <= {"M", "cone-face"}:
            labels.append("cone-face")
        else:
            labels.append("cutoff")
    return labels
