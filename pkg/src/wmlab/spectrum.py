"""First nonzero eigenvalue of the drift Laplacian on closed meshes.

Block inverse iteration (block size 2 so the spectral gap is observable)
with conjugate-gradient inner solves and explicit deflation of constants.
Matrix-free and deterministic: the start block comes from a fixed seed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SolverStall, ZeroFunction

SEED = 0x5EED
NEAR_DEGENERATE_REL = 1e-6
MAX_OUTER = 10000


@dataclass
class EigenResult:
    lambda1: float
    eigenvector: np.ndarray
    residual: float
    iterations: int
    near_degenerate: bool
    lambda2: float

    def flags(self):
        return {"near_degenerate": self.near_degenerate}


def _project_constants(v, m1, vol):
    """Remove the M-weighted mean: v - (<v, M 1>/<1, M 1>) 1."""
    coef = (v @ m1) / vol
    return v - (coef[..., None] if np.ndim(coef) else coef)


def _cg(S, b, diag, tol, max_iter):
    """CG for S x = b with ker(S) = constants deflated (Euclidean mean).

    The right-hand side must be consistent (1^T b = 0, true for M v with v
    M-mean-free); Jacobi preconditioned.
    """

    def deflate(v):
        return v - v.mean()

    b = deflate(b)
    x = np.zeros_like(b)
    r = b.copy()
    z = deflate(r / diag)
    p = z.copy()
    rz = r @ z
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    for _ in range(max_iter):
        Sp = S @ p
        pSp = p @ Sp
        if pSp <= 0.0:
            break
        alpha = rz / pSp
        x += alpha * p
        r -= alpha * Sp
        if np.linalg.norm(r) <= tol * bnorm:
            break
        z = deflate(r / diag)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return deflate(x)


def lambda1_drift(pack, tol=1e-9, max_outer=MAX_OUTER, seed=SEED):
    """Smallest nonzero generalized eigenvalue of (S, M).

    Restricted to the M-orthogonal complement of constants; relative
    residual below ``tol``.  Raises SolverStall with the best residual
    when the iteration budget runs out.  The result carries a
    ``near_degenerate`` flag when the gap to the next eigenvalue is below
    1e-6 relative (symmetric geometries), in which case the eigenvector
    is not unique but the eigenvalue is still valid.
    """
    S, M = pack.stiffness, pack.mass
    n = S.shape[0]
    ones = np.ones(n)
    m1 = M @ ones
    vol = ones @ m1

    def project(v):
        return _project_constants(v, m1, vol)

    diag = S.diagonal().copy()
    diag[diag <= 0] = 1.0

    rng = np.random.default_rng(seed)
    V = project(rng.standard_normal((n, 2)).T).T  # columns M-mean-free
    lam = np.zeros(2)
    best_res = np.inf
    scale = None
    for it in range(1, max_outer + 1):
        # M-orthonormalize the block
        for j in range(2):
            v = V[:, j]
            for k in range(j):
                v = v - (V[:, k] @ (M @ v)) * V[:, k]
            nv = np.sqrt(v @ (M @ v))
            if nv == 0:
                raise SolverStall("start block collapsed", residual=best_res, iterations=it)
            V[:, j] = v / nv
        # inverse step: S W = M V, then explicit M-orthogonal deflation
        inner_tol = float(np.clip(0.05 * best_res, 1e-11, 1e-2))
        W = np.empty_like(V)
        for j in range(2):
            W[:, j] = project(_cg(S, M @ V[:, j], diag,
                                  tol=inner_tol, max_iter=40 * int(np.sqrt(n) + 50)))
        # Rayleigh-Ritz in span(W)
        MW = np.column_stack([M @ W[:, j] for j in range(2)])
        G = W.T @ MW
        A = W.T @ np.column_stack([S @ W[:, j] for j in range(2)])
        # symmetrize against roundoff
        G = 0.5 * (G + G.T)
        A = 0.5 * (A + A.T)
        try:
            evals, C = _sym_geig2(A, G)
        except np.linalg.LinAlgError:
            # block collapsed onto one direction: refresh the second column
            W[:, 1] = project(rng.standard_normal(n))
            V = W
            continue
        lam = evals
        V = W @ C
        v1 = V[:, 0]
        nv1 = np.sqrt(v1 @ (M @ v1))
        v1 = v1 / nv1
        res = np.linalg.norm(S @ v1 - lam[0] * (M @ v1)) / np.linalg.norm(M @ v1)
        scale = max(abs(lam[0]), 1e-300)
        best_res = min(best_res, res / scale)
        if res <= tol * scale:
            gap = abs(lam[1] - lam[0])
            return EigenResult(
                lambda1=float(lam[0]),
                eigenvector=v1,
                residual=float(res / scale),
                iterations=it,
                near_degenerate=bool(gap < NEAR_DEGENERATE_REL * abs(lam[0])),
                lambda2=float(lam[1]),
            )
    raise SolverStall("inverse iteration did not converge",
                      residual=best_res, iterations=max_outer)


def _sym_geig2(A, G):
    """Tiny symmetric generalized eigenproblem A c = theta G c."""
    L = np.linalg.cholesky(G)
    Li = np.linalg.inv(L)
    T = Li @ A @ Li.T
    evals, U = np.linalg.eigh(0.5 * (T + T.T))
    return evals, Li.T @ U


def rayleigh_quotient(pack, phi):
    """Weighted Rayleigh quotient of phi after projecting out constants."""
    phi = np.asarray(phi, dtype=float)
    S, M = pack.stiffness, pack.mass
    ones = np.ones(len(phi))
    m1 = M @ ones
    hat = phi - (phi @ m1) / (ones @ m1)
    denom = hat @ (M @ hat)
    total = phi @ (M @ phi)
    if denom <= 1e-28 * max(total, 1e-30):
        raise ZeroFunction("function is constant after projection")
    return float(hat @ (S @ hat) / denom)
