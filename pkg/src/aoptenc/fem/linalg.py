"""Direct factorizations, preconditioned CG and mass-inverse Gaussian sampling."""
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, pivot_index, msg=None):
        self.pivot_index = pivot_index
        super().__init__(msg or f"matrix is singular (zero pivot at elimination step {pivot_index})")


class NegativeCurvatureError(ArithmeticError):
    """CG met a direction with ``d^T A d <= 0``; ``x`` holds the iterate reached so far."""

    def __init__(self, iteration, curvature, x, aux=None):
        self.iteration = iteration
        self.curvature = curvature
        self.x = x
        self.aux = aux
        super().__init__(f"non-positive curvature {curvature:.3e} at CG iteration {iteration}")


class Factorization:
    """LU with partial pivoting of a square matrix, safe for symmetric indefinite systems."""

    PIVOT_RTOL = 1e-13

    def __init__(self, A):
        self.shape = A.shape
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        if sp.issparse(A):
            try:
                self._lu = spla.splu(sp.csc_matrix(A))
            except RuntimeError as exc:  # SuperLU: "Factor is exactly singular"
                raise SingularMatrixError(-1, f"matrix is singular ({exc})") from None
            diag = self._lu.U.diagonal()
            self._solve = self._lu.solve
        else:
            A = np.asarray(A, dtype=float)
            lu, piv = sla.lu_factor(A, check_finite=True)
            self._lu = (lu, piv)
            diag = np.diag(lu)
            self._solve = lambda b: sla.lu_solve((lu, piv), b)
        scale = np.max(np.abs(diag)) if diag.size else 0.0
        small = np.flatnonzero(np.abs(diag) <= self.PIVOT_RTOL * scale)
        if scale == 0.0 or small.size:
            raise SingularMatrixError(int(small[0]) if small.size else 0)

    def solve(self, b):
        return self._solve(np.asarray(b, dtype=float))


def factorize(A):
    return Factorization(A)


def solve(F, b):
    return F.solve(b)


class PCGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    converged: bool
    rel_residual: float
    aux: object = None


def pcg(apply_A, apply_prec, b, rel_tol=1e-8, max_iter=500, aux=False):
    """Preconditioned CG from ``x0 = 0``.

    Stops once the preconditioned residual norm ``sqrt(r^T P r)`` drops by ``rel_tol``.
    ``iterations`` equals the number of ``apply_A`` calls.  With ``aux=True``, ``apply_A``
    must return ``(A d, extra)`` and the same linear combination of the ``extra`` arrays that
    builds ``x`` is accumulated and returned as ``aux`` (used to keep incremental states).
    Non-positive curvature raises :class:`NegativeCurvatureError`.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    acc = None
    r = b.copy()
    z = apply_prec(r)
    rz = float(r @ z)
    if rz < 0:
        raise ValueError("preconditioner is not positive definite")
    norm0 = np.sqrt(rz)
    if norm0 == 0.0:
        return PCGResult(x, 0, True, 0.0, acc)
    d = z.copy()
    it = 0
    rel = 1.0
    while it < max_iter:
        out = apply_A(d)
        if aux:
            Ad, extra = out
        else:
            Ad = out
        it += 1
        dAd = float(d @ Ad)
        if dAd <= 0.0:
            raise NegativeCurvatureError(it, dAd, x, acc)
        alpha = rz / dAd
        x += alpha * d
        if aux:
            acc = alpha * extra if acc is None else acc + alpha * extra
        r -= alpha * Ad
        z = apply_prec(r)
        rz_new = float(r @ z)
        rel = np.sqrt(max(rz_new, 0.0)) / norm0
        if rel <= rel_tol:
            return PCGResult(x, it, True, rel, acc)
        d = z + (rz_new / rz) * d
        rz = rz_new
    return PCGResult(x, it, False, rel, acc)


class SteihaugResult(NamedTuple):
    x: np.ndarray
    iterations: int
    status: str  # "converged" | "boundary" | "negative_curvature" | "max_iter"
    rel_residual: float


def _to_boundary(xPx, xPd, dPd, radius):
    # positive root tau of ||x + tau d||_P = radius
    disc = xPd * xPd + dPd * (radius * radius - xPx)
    return (-xPd + np.sqrt(max(disc, 0.0))) / dPd


def steihaug_pcg(apply_A, apply_prec, b, radius=np.inf, rel_tol=1e-8, max_iter=500):
    """Truncated PCG for ``min 1/2 x^T A x - b^T x`` subject to ``||x||_P <= radius``.

    ``P`` is the inverse of the preconditioner; its norms are tracked by recurrences, so ``P``
    is never applied.  On non-positive curvature the step runs to the boundary along the
    current direction (or, with an infinite radius, stops at the current iterate).
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    r = b.copy()
    z = apply_prec(r)
    rz = float(r @ z)
    norm0 = np.sqrt(max(rz, 0.0))
    if norm0 == 0.0:
        return SteihaugResult(x, 0, "converged", 0.0)
    d = z.copy()
    xPx, xPd, dPd = 0.0, 0.0, rz
    it, rel = 0, 1.0
    while it < max_iter:
        Ad = apply_A(d)
        it += 1
        dAd = float(d @ Ad)
        if dAd <= 0.0:
            if np.isfinite(radius):
                x = x + _to_boundary(xPx, xPd, dPd, radius) * d
            elif it == 1:
                x = d.copy()
            return SteihaugResult(x, it, "negative_curvature", rel)
        alpha = rz / dAd
        xPx_new = xPx + 2 * alpha * xPd + alpha * alpha * dPd
        if xPx_new >= radius * radius:
            x = x + _to_boundary(xPx, xPd, dPd, radius) * d
            return SteihaugResult(x, it, "boundary", rel)
        x += alpha * d
        r -= alpha * Ad
        z = apply_prec(r)
        rz_new = float(r @ z)
        rel = np.sqrt(max(rz_new, 0.0)) / norm0
        if rel <= rel_tol:
            return SteihaugResult(x, it, "converged", rel)
        beta = rz_new / rz
        xPd = beta * (xPd + alpha * dPd)
        dPd = rz_new + beta * beta * dPd
        xPx = xPx_new
        d = z + beta * d
        rz = rz_new
    return SteihaugResult(x, it, "max_iter", rel)


class MassInverseSampler:
    """Draws ``z ~ N(0, M^{-1})`` as ``z = L^{-T} x`` with ``M = L L^T`` and ``x`` standard normal."""

    def __init__(self, M):
        Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        try:
            self.L = sla.cholesky(Md, lower=True)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"Cholesky failed, matrix not SPD: {exc}") from None
        self.dim = Md.shape[0]

    def draw(self, rng, size=None):
        """One draw (``size=None``) or an array of ``size`` draws stacked along axis 0."""
        if size is None:
            x = rng.standard_normal(self.dim)
            return sla.solve_triangular(self.L.T, x, lower=False)
        x = rng.standard_normal((size, self.dim))
        return sla.solve_triangular(self.L.T, x.T, lower=False).T


def sample_mass_inverse_gaussian(M, rng, size=None):
    return MassInverseSampler(M).draw(rng, size)
