"""Per-vertex extrinsic data of an immersed submanifold.

Two production paths fill the same container: the discrete one (embedded
Euclidean meshes, curvature from the mesh Laplacian) and the analytic one
(geodesic spheres of the curved space forms, closed-form everything).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass
class ImmersionFields:
    """Extrinsic quantities sampled at mesh vertices.

    ``ambient_points`` are coordinates in the space-form model (equal to
    the mesh vertices for Euclidean embeddings); vectors are ambient and
    tangent to the model, with inner products taken via the model metric.
    """

    r: np.ndarray                  # geodesic distance to base_point
    f_val: np.ndarray              # weight f at the vertex
    hf_scalar: np.ndarray          # H_f = div(nu) - <grad f, nu>, outward nu
    hf_minus_gradf_sq: np.ndarray  # |H_f vector - grad f|^2 >= 0
    source: str                    # "computed" | "analytic"
    ambient_points: np.ndarray
    unit_normals: np.ndarray       # outward unit normal (codimension 1)
    grad_f_ambient: np.ndarray
    grad_f_tangential: np.ndarray
    hvec: np.ndarray               # mean curvature vector (points inward on spheres)
    base_point: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.hf_minus_gradf_sq) < -1e-12):
            raise DomainError("|H_f - grad f|^2 must be nonnegative")

    @property
    def n_vertices(self):
        return len(self.r)


def computed_immersion_fields(mesh, space, field, base=None):
    """Discrete fields for a closed curve in R^2 or closed surface in R^3."""
    from . import ops

    if space.model != "euclidean":
        raise DomainError("computed fields require a Euclidean embedding")
    if mesh.vertices.shape[1] != space.dim:
        raise DomainError("mesh embedding dimension does not match the ambient space")
    base = np.zeros(space.dim) if base is None else np.asarray(base, dtype=float)
    pts = mesh.vertices
    hvec = ops.mean_curvature_vector(mesh)
    normals = ops.vertex_normals(mesh)
    grad_f = field.gradient(pts)
    gf_nu = (grad_f * normals).sum(axis=1)
    grad_f_tan = grad_f - gf_nu[:, None] * normals
    hf_scalar = -(hvec * normals).sum(axis=1) - gf_nu
    diff = hvec - grad_f_tan
    return ImmersionFields(
        r=np.linalg.norm(pts - base, axis=1),
        f_val=np.asarray(field.value(pts)),
        hf_scalar=hf_scalar,
        hf_minus_gradf_sq=(diff * diff).sum(axis=1),
        source="computed",
        ambient_points=pts,
        unit_normals=normals,
        grad_f_ambient=grad_f,
        grad_f_tangential=grad_f_tan,
        hvec=hvec,
        base_point=base,
    )
