"""Analytic densities e^(-f) and the Bakry-Emery curvature proxies.

Only analytic weight families are supported; the inequalities need exact
ambient gradients and Hessians, which sampled weights cannot provide.
"""

import math

import numpy as np

from .errors import DomainError, InvalidParams
from .report import CheckReport
from .spaceform import c_delta, s_delta

RADIAL_KINDS = ("constant", "gaussian", "polynomial")


class DensityField:
    """Weight f with value / gradient / Hessian evaluators at ambient points.

    Kinds
    -----
    constant(c)          f = c
    gaussian(a)          f = a * |x - center|^2
    linear(v)            f = <v, x>
    polynomial(coeffs)   f = sum_k coeffs[k] * (|x - center|^2)^k,
                         an even polynomial in the distance to ``center``

    The radial kinds additionally expose the 1D profile g(r) and its
    derivatives, which is how curved-ambient code evaluates them as
    functions of geodesic distance.
    """

    def __init__(self, kind, c=0.0, a=0.0, v=None, coeffs=None, center=None):
        if kind not in ("constant", "gaussian", "linear", "polynomial"):
            raise DomainError(f"unknown density kind {kind!r}")
        self.kind = kind
        self.c = float(c)
        self.a = float(a)
        self.v = None if v is None else np.asarray(v, dtype=float)
        self.coeffs = None if coeffs is None else np.asarray(coeffs, dtype=float)
        self.center = None if center is None else np.asarray(center, dtype=float)
        if kind == "linear" and self.v is None:
            raise DomainError("linear density needs a direction vector")
        if kind == "polynomial" and self.coeffs is None:
            raise DomainError("polynomial density needs coefficients")
        if kind == "linear" and center is not None:
            raise DomainError("linear density takes no center")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c=0.0):
        return cls("constant", c=c)

    @classmethod
    def gaussian(cls, a, center=None):
        return cls("gaussian", a=a, center=center)

    @classmethod
    def linear(cls, v):
        return cls("linear", v=v)

    @classmethod
    def polynomial(cls, coeffs, center=None):
        return cls("polynomial", coeffs=coeffs, center=center)

    @classmethod
    def from_spec(cls, spec):
        """Build from a config dict like {"kind": "gaussian", "a": 0.25}."""
        spec = dict(spec)
        kind = spec.pop("kind", None)
        center = spec.pop("center", None)
        if kind == "constant":
            field = cls.constant(spec.pop("c", 0.0))
        elif kind == "gaussian":
            field = cls.gaussian(spec.pop("a"), center=center)
        elif kind == "linear":
            field = cls.linear(spec.pop("v"))
        elif kind == "polynomial":
            field = cls.polynomial(spec.pop("coeffs"), center=center)
        else:
            raise DomainError(f"unknown density kind {kind!r}")
        if spec:
            raise DomainError(f"unknown density keys {sorted(spec)}")
        return field

    # -- predicates ---------------------------------------------------------

    @property
    def is_constant(self):
        if self.kind == "constant":
            return True
        if self.kind == "gaussian":
            return self.a == 0.0
        if self.kind == "linear":
            return not np.any(self.v)
        return not np.any(self.coeffs[1:]) if self.coeffs is not None else False

    @property
    def is_radial(self):
        return self.kind in RADIAL_KINDS

    def _shift(self, x, d):
        if self.center is None:
            return x
        if self.center.shape[-1] != d:
            raise DomainError("density center dimension mismatch")
        return x - self.center

    # -- ambient evaluators --------------------------------------------------

    def value(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        d = x.shape[-1]
        if self.kind == "constant":
            out = np.full(x.shape[0], self.c)
        elif self.kind == "gaussian":
            y = self._shift(x, d)
            out = self.a * (y * y).sum(axis=-1)
        elif self.kind == "linear":
            out = x @ self.v
        else:
            y = self._shift(x, d)
            s = (y * y).sum(axis=-1)
            out = np.polynomial.polynomial.polyval(s, self.coeffs)
        return float(out[0]) if single else out

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        d = x.shape[-1]
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "gaussian":
            out = 2.0 * self.a * self._shift(x, d)
        elif self.kind == "linear":
            out = np.broadcast_to(self.v, x.shape).copy()
        else:
            y = self._shift(x, d)
            s = (y * y).sum(axis=-1)
            dp = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(self.coeffs)) \
                if len(self.coeffs) > 1 else np.zeros_like(s)
            out = 2.0 * dp[:, None] * y
        return out[0] if single else out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        n, d = x.shape
        if self.kind == "constant" or self.kind == "linear":
            out = np.zeros((n, d, d))
        elif self.kind == "gaussian":
            out = np.broadcast_to(2.0 * self.a * np.eye(d), (n, d, d)).copy()
        else:
            y = self._shift(x, d)
            s = (y * y).sum(axis=-1)
            c1 = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else np.zeros(1)
            c2 = np.polynomial.polynomial.polyder(c1) if len(c1) > 1 else np.zeros(1)
            dp = np.polynomial.polynomial.polyval(s, c1)
            d2p = np.polynomial.polynomial.polyval(s, c2)
            out = 2.0 * dp[:, None, None] * np.eye(d) + \
                4.0 * d2p[:, None, None] * y[:, :, None] * y[:, None, :]
        return out[0] if single else out

    # -- radial profile -------------------------------------------------------

    def profile(self, r):
        """g(r) for radial kinds, with r geodesic distance to the center."""
        self._require_radial()
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.full_like(r, self.c)
        if self.kind == "gaussian":
            return self.a * r * r
        return np.polynomial.polynomial.polyval(r * r, self.coeffs)

    def profile_derivative(self, r):
        """g'(r)."""
        self._require_radial()
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(r)
        if self.kind == "gaussian":
            return 2.0 * self.a * r
        c1 = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else np.zeros(1)
        return 2.0 * r * np.polynomial.polynomial.polyval(r * r, c1)

    def profile_second_derivative(self, r):
        """g''(r)."""
        self._require_radial()
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(r)
        if self.kind == "gaussian":
            return np.full_like(r, 2.0 * self.a)
        c1 = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else np.zeros(1)
        c2 = np.polynomial.polynomial.polyder(c1) if len(c1) > 1 else np.zeros(1)
        s = r * r
        return 2.0 * np.polynomial.polynomial.polyval(s, c1) + \
            4.0 * s * np.polynomial.polynomial.polyval(s, c2)

    def _require_radial(self):
        if not self.is_radial:
            raise DomainError(f"{self.kind} density has no radial profile")

    def spec(self):
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["c"] = self.c
        elif self.kind == "gaussian":
            out["a"] = self.a
        elif self.kind == "linear":
            out["v"] = self.v.tolist()
        else:
            out["coeffs"] = self.coeffs.tolist()
        if self.center is not None:
            out["center"] = self.center.tolist()
        return out

    def __repr__(self):
        return f"DensityField({self.spec()})"


def weighted_element(field, x):
    """The weighted volume density e^(-f) at x; always positive."""
    return np.exp(-np.asarray(field.value(x)))


class BakryEmeryParams:
    """Dimension parameter m in [d, inf] of the m-Bakry-Emery tensor."""

    def __init__(self, m, d):
        self.d = int(d)
        self.m = float("inf") if m in ("inf", float("inf"), None) else float(m)
        if self.m < self.d:
            raise InvalidParams(f"m = {self.m} must be >= ambient dimension d = {self.d}")

    @property
    def is_infinite(self):
        return math.isinf(self.m)

    @property
    def volume_factor(self):
        """(m-1)/m, evaluated as 1 for m = inf (limit case)."""
        return 1.0 if self.is_infinite else (self.m - 1.0) / self.m

    def check_density(self, field):
        if self.m == self.d and not field.is_constant:
            raise InvalidParams("m = d requires a constant weight")

    def __repr__(self):
        return f"BakryEmeryParams(m={self.m}, d={self.d})"


def bakry_emery_m(space, field, params, x, v):
    """Evaluate the m-Bakry-Emery tensor on the unit direction v at x.

    Ric(v,v) + Hess f(v,v) - <grad f, v>^2 / (m - d); the last term is
    dropped for m = inf.  On a space form Ric(v,v) = delta * (d-1) for
    unit v.  Curved ambients are supported for radial densities, with x
    an embedded model point.
    """
    params.check_density(field)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d = space.dim
    ric = space.delta * (d - 1)
    if space.model == "euclidean":
        grad = field.gradient(x)
        hess_vv = float(v @ field.hessian(x) @ v)
        df_v = float(grad @ v)
    else:
        if not field.is_radial:
            raise DomainError("curved ambients support radial densities only")
        base = space.basepoint()
        r = float(space.distance(base, x))
        if r == 0.0:
            hess_vv = float(field.profile_second_derivative(0.0)) * float(space.metric(v, v))
            df_v = 0.0
        else:
            nr = space.unit_radial(base, x)
            g1 = float(field.profile_derivative(r))
            g2 = float(field.profile_second_derivative(r))
            rad = float(space.metric(nr, v))
            tang = float(space.metric(v, v)) - rad * rad
            cot = c_delta(space.delta, r) / s_delta(space.delta, r)
            hess_vv = g2 * rad * rad + g1 * cot * tang
            df_v = g1 * rad
    val = ric + hess_vv
    if not params.is_infinite and params.m > params.d:
        val -= df_v * df_v / (params.m - params.d)
    return val


def certify_nonneg_BE(space, field, params, sample_region, n_samples, seed=0x5EED):
    """Sample the m-Bakry-Emery tensor and report the minimum found.

    Not a proof: a quasi-random sweep over (point, unit direction) pairs
    inside ``sample_region`` = {"kind": "ball", "center": [...], "radius": R}.
    Passes when the sampled minimum is >= -1e-10.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    params.check_density(field)
    region = dict(sample_region)
    kind = region.pop("kind", "ball")
    if kind != "ball":
        raise DomainError(f"unsupported sample region {kind!r}")
    radius = float(region.pop("radius"))
    center = region.pop("center", None)
    if region:
        raise DomainError(f"unknown sample region keys {sorted(region)}")

    from scipy.stats import qmc, norm

    d = space.dim
    sob = qmc.Sobol(d=2 * d + 1, scramble=True, seed=seed)
    u = sob.random(int(n_samples))
    # point: direction from inverse-normal map, radius from the u^(1/d) law
    pdir = norm.ppf(np.clip(u[:, :d], 1e-12, 1 - 1e-12))
    pdir /= np.linalg.norm(pdir, axis=1, keepdims=True)
    rad = radius * u[:, d] ** (1.0 / d)
    vdir = norm.ppf(np.clip(u[:, d + 1:], 1e-12, 1 - 1e-12))

    worst = np.inf
    argmin = None
    for i in range(int(n_samples)):
        if space.model == "euclidean":
            c0 = np.zeros(d) if center is None else np.asarray(center, dtype=float)
            x = c0 + rad[i] * pdir[i]
            v = vdir[i] / np.linalg.norm(vdir[i])
        else:
            base = space.basepoint() if center is None else np.asarray(center, dtype=float)
            frame = space.tangent_basis(base)
            x = space.exp_map(base, rad[i] * (pdir[i] @ frame))
            w = vdir[i] @ space.tangent_basis(x)
            v = w / space.norm(w)
        val = bakry_emery_m(space, field, params, x, v)
        if val < worst:
            worst = val
            argmin = (x.tolist(), v.tolist())
    rep = CheckReport(
        check_id="bakry_emery_nonneg",
        kind="inequality",
        lhs=-worst,   # violation magnitude; <= 0 when the tensor is nonnegative
        rhs=0.0,
        tolerance=1e-10,
        details={
            "min_value": worst,
            "argmin": argmin,
            "n_samples": int(n_samples),
            "region": {"kind": "ball", "radius": radius, "center": center},
            "seed": seed,
        },
    )
    return rep.evaluate()
