"""Simply connected space forms and the comparison coefficients s_delta, c_delta.

The three models are realized by explicit embeddings so that distance,
log and exp maps are closed-form:

* ``euclidean``            -- R^d itself (delta = 0),
* ``sphere-embedded``      -- round sphere of radius 1/sqrt(delta) in R^(d+1),
* ``hyperboloid-embedded`` -- upper hyperboloid sheet of Minkowski R^(1,d),
                              scaled by 1/sqrt(-delta); coordinate 0 is timelike.
"""

import numpy as np

from .errors import AntipodalPoint, DomainError

# below this the sine/cosine-like coefficients switch to a 4-term Taylor
# series in delta to stay smooth across delta = 0
TAYLOR_CUTOFF = 1e-8

# reject log maps within this distance of the cut locus pi/sqrt(delta)
CUT_LOCUS_MARGIN = 1e-9


def _as_float(t):
    t = np.asarray(t)
    if not np.issubdtype(t.dtype, np.floating):
        t = t.astype(float)
    return t


def s_delta(delta, t):
    """Solution of g'' + delta*g = 0 with g(0)=0, g'(0)=1.

    Vectorized in ``t``; total in both arguments.  Preserves extended
    floating dtypes so callers can run high-precision oracles.
    """
    t = _as_float(t)
    if abs(delta) < TAYLOR_CUTOFF:
        z = delta * t * t
        return t * (1.0 - z / 6.0 + z * z / 120.0 - z**3 / 5040.0)
    if delta > 0:
        rt = np.sqrt(delta)
        return np.sin(rt * t) / rt
    rt = np.sqrt(-delta)
    return np.sinh(rt * t) / rt


def c_delta(delta, t):
    """Derivative of :func:`s_delta` in t; satisfies c^2 + delta*s^2 = 1."""
    t = _as_float(t)
    if abs(delta) < TAYLOR_CUTOFF:
        z = delta * t * t
        return 1.0 - z / 2.0 + z * z / 24.0 - z**3 / 720.0
    if delta > 0:
        return np.cos(np.sqrt(delta) * t)
    return np.cosh(np.sqrt(-delta) * t)


def s_delta_antiderivative(delta, t):
    """Integral of s_delta from 0 to t, i.e. (1 - c_delta(t)) / delta."""
    t = np.asarray(t, dtype=float)
    if abs(delta) < TAYLOR_CUTOFF:
        z = delta * t * t
        return 0.5 * t * t * (1.0 - z / 12.0 + z * z / 360.0)
    return (1.0 - c_delta(delta, t)) / delta


class AmbientSpace:
    """Space form of constant curvature ``delta`` and dimension ``dim``.

    Points live in the embedding space (R^dim for delta = 0, R^(dim+1)
    otherwise).  All maps are closed-form; tangent vectors are ambient
    vectors in the tangent plane of the model surface.
    """

    def __init__(self, delta, dim):
        dim = int(dim)
        if dim < 2:
            raise DomainError(f"ambient dimension must be >= 2, got {dim}")
        self.delta = float(delta)
        self.dim = dim
        if self.delta == 0.0:
            self.model = "euclidean"
            self.radius = None
        elif self.delta > 0:
            self.model = "sphere-embedded"
            self.radius = 1.0 / np.sqrt(self.delta)
        else:
            self.model = "hyperboloid-embedded"
            self.radius = 1.0 / np.sqrt(-self.delta)

    # -- embedding bookkeeping ------------------------------------------

    @property
    def embedding_dim(self):
        return self.dim if self.model == "euclidean" else self.dim + 1

    def basepoint(self):
        """Canonical origin: 0 in R^d, or radius * e_0 on the curved models."""
        p = np.zeros(self.embedding_dim)
        if self.model != "euclidean":
            p[0] = self.radius
        return p

    def metric(self, u, v):
        """Ambient inner product (Minkowski on the hyperboloid model)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        dot = (u * v).sum(axis=-1)
        if self.model == "hyperboloid-embedded":
            dot = dot - 2.0 * u[..., 0] * v[..., 0]
        return dot

    def norm(self, u):
        return np.sqrt(np.maximum(self.metric(u, u), 0.0))

    def on_manifold(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        if self.model == "euclidean":
            return p.shape[-1] == self.dim
        if p.shape[-1] != self.dim + 1:
            return False
        q = self.metric(p, p)
        target = self.radius**2 if self.model == "sphere-embedded" else -self.radius**2
        ok = np.abs(q - target) <= tol * self.radius**2
        if self.model == "hyperboloid-embedded":
            ok = ok & (p[..., 0] > 0)
        return bool(np.all(ok))

    def injectivity_radius(self):
        if self.model == "sphere-embedded":
            return np.pi * self.radius
        return np.inf

    # -- distance / log / exp --------------------------------------------

    def distance(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.model == "euclidean":
            return np.linalg.norm(q - p, axis=-1)
        R = self.radius
        if self.model == "sphere-embedded":
            # chord formulas stay accurate near the diagonal / antipode,
            # unlike arccos of the inner product
            chord = np.linalg.norm(q - p, axis=-1)
            near = 2.0 * R * np.arcsin(np.clip(chord / (2.0 * R), 0.0, 1.0))
            anti = np.linalg.norm(q + p, axis=-1)
            far = R * (np.pi - 2.0 * np.arcsin(np.clip(anti / (2.0 * R), 0.0, 1.0)))
            return np.where(self.metric(p, q) >= 0.0, near, far)
        # Minkowski chord of the hyperboloid: |p-q|_M = 2R sinh(d / 2R)
        chord = self.norm(q - p)
        return 2.0 * R * np.arcsinh(chord / (2.0 * R))

    def log_map(self, base, target):
        """Tangent vector at ``base`` whose exp reaches ``target``.

        Raises :class:`AntipodalPoint` on the sphere when the target is
        within CUT_LOCUS_MARGIN of the cut locus.
        """
        base = np.asarray(base, dtype=float)
        target = np.asarray(target, dtype=float)
        if self.model == "euclidean":
            return target - base
        d = self.distance(base, target)
        if self.model == "sphere-embedded":
            if np.any(self.injectivity_radius() - d < CUT_LOCUS_MARGIN):
                raise AntipodalPoint(
                    "log map undefined within %.1e of the cut locus" % CUT_LOCUS_MARGIN
                )
            w = target - (self.metric(base, target) / self.radius**2)[..., None] * base
        else:
            w = target + (self.metric(base, target) / self.radius**2)[..., None] * base
        nw = self.norm(w)
        out = np.zeros_like(w)
        mask = nw > 0
        if np.ndim(mask) == 0:
            return (d / nw) * w if mask else out
        out[mask] = (d[mask] / nw[mask])[..., None] * w[mask]
        return out

    def exp_map(self, base, v):
        base = np.asarray(base, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.model == "euclidean":
            return base + v
        R = self.radius
        nv = np.asarray(self.norm(v))
        small = nv < 1e-300
        nv_safe = np.where(small, 1.0, nv)
        vhat = v / nv_safe[..., None]
        if self.model == "sphere-embedded":
            out = np.cos(nv / R)[..., None] * base + (R * np.sin(nv / R))[..., None] * vhat
        else:
            out = np.cosh(nv / R)[..., None] * base + (R * np.sinh(nv / R))[..., None] * vhat
        if np.any(small):
            out = np.where(small[..., None], np.broadcast_to(base, out.shape), out)
        return out

    # -- frames and fields -------------------------------------------------

    def tangent_projector(self, p):
        """Matrix projecting ambient vectors onto the tangent space at p."""
        k = self.embedding_dim
        if self.model == "euclidean":
            return np.eye(k)
        p = np.asarray(p, dtype=float)
        eta = np.ones(k)
        if self.model == "hyperboloid-embedded":
            eta[0] = -1.0
        pp = self.metric(p, p)  # +-R^2
        return np.eye(k) - np.outer(p, eta * p) / pp

    def tangent_basis(self, p):
        """Deterministic orthonormal frame of T_p, rows are basis vectors."""
        k = self.embedding_dim
        if self.model == "euclidean":
            return np.eye(self.dim)
        P = self.tangent_projector(p)
        basis = []
        for i in range(k):
            w = P @ np.eye(k)[i]
            for b in basis:
                w = w - self.metric(w, b) * b
            n = self.norm(w)
            if n > 1e-10:
                basis.append(w / n)
            if len(basis) == self.dim:
                break
        if len(basis) != self.dim:
            raise DomainError("failed to build a tangent frame")
        return np.array(basis)

    def radial_field(self, base, p):
        """The comparison field s_delta(r) * grad(r) at p, r = d(base, p).

        Returns the zero vector at p = base.
        """
        p = np.asarray(p, dtype=float)
        r = self.distance(base, p)
        v = self.log_map(p, base)  # points from p toward base
        scale = np.where(r > 0, s_delta(self.delta, r) / np.where(r > 0, r, 1.0), 0.0)
        return -np.asarray(scale)[..., None] * v

    def unit_radial(self, base, p):
        """Unit field grad(r) at p pointing away from ``base`` (zero at base)."""
        p = np.asarray(p, dtype=float)
        r = self.distance(base, p)
        v = self.log_map(p, base)
        scale = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
        return -np.asarray(scale)[..., None] * v

    def __repr__(self):
        return f"AmbientSpace(delta={self.delta}, dim={self.dim}, model={self.model!r})"
