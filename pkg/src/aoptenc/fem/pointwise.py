"""Point evaluation, discrete point sources and the mollifier bump."""
from functools import lru_cache
import math

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from .elements import basis_values


def _check_inside(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    bad = np.any((points < 0.0) | (points > 1.0), axis=1)
    if np.any(bad):
        raise ValueError(f"points outside the unit square: {points[bad].tolist()}")
    return points


def locate(mesh, points):
    """Triangle index and reference coordinates of each point (edges resolve to either side)."""
    points = _check_inside(points)
    n = mesh.n
    s = points * n
    ci = np.minimum(np.floor(s[:, 0]).astype(np.intp), n - 1)
    cj = np.minimum(np.floor(s[:, 1]).astype(np.intp), n - 1)
    xi = s[:, 0] - ci
    eta = s[:, 1] - cj
    upper = xi + eta > 1.0
    tri = 2 * (cj * n + ci) + upper
    # lower: P0=(0,0), edges (1,0),(0,1); upper: P0=(1,1), edges (-1,0),(0,-1)  (cell units)
    ref = np.where(upper[:, None], np.column_stack([1.0 - xi, 1.0 - eta]), np.column_stack([xi, eta]))
    return tri, ref


def evaluation_matrix(space, points):
    """Sparse ``(n_points, dim)`` matrix whose rows evaluate a field at ``points``."""
    tri, ref = locate(space.mesh, points)
    vals = basis_values(space.degree, ref)
    dofs = space.cell_dofs[tri]
    rows = np.repeat(np.arange(len(tri)), dofs.shape[1])
    return sp.csr_matrix((vals.ravel(), (rows, dofs.ravel())), shape=(len(tri), space.dim))


def point_source_vector(space, location):
    """Discrete Dirac load ``f_i = phi_i(location)``."""
    return evaluation_matrix(space, [location]).toarray().ravel()


def observe(u, space, receivers):
    return evaluation_matrix(space, receivers) @ np.asarray(u, dtype=float)


@lru_cache(maxsize=None)
def mollifier_constant():
    """``int_0^1 r exp(-1/(1-r^2)) dr``."""
    val, _ = quad(lambda r: r * math.exp(-1.0 / (1.0 - r * r)) if r < 1.0 else 0.0,
                  0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def mollifier_log_value(x, y, eps):
    """Natural log of the normalized bump centred at ``y``; ``-inf`` outside the open ball."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.sum((x - np.asarray(y, dtype=float)) ** 2, axis=1)
    e2 = eps * eps
    out = np.full(r2.shape, -np.inf)
    inside = r2 < e2
    # bump exp(-1 / (1 - |x - y|^2 / eps^2)) scaled to unit mass by 2 pi K eps^2
    out[inside] = (-math.log(2.0 * math.pi * mollifier_constant() * e2)
                   - e2 / (e2 - r2[inside]))
    return out


def mollifier_value(x, y, eps):
    vals = np.exp(mollifier_log_value(x, y, eps))
    return vals if np.ndim(x) > 1 else float(vals[0])


def mollified_source_vector(space, center, eps, n_radial=64, n_angular=64):
    """Load vector ``int phi_eps(x; center) psi_i(x) dx`` by polar Gauss quadrature on the ball.

    Quadrature nodes falling outside the unit square are dropped.
    """
    from scipy.special import roots_legendre

    t, wt = roots_legendre(n_radial)
    r = 0.5 * eps * (1.0 + t)
    wr = 0.5 * eps * wt
    theta = 2.0 * math.pi * np.arange(n_angular) / n_angular
    R, TH = np.meshgrid(r, theta, indexing="ij")
    W = (wr[:, None] * R) * (2.0 * math.pi / n_angular)
    pts = np.column_stack([center[0] + (R * np.cos(TH)).ravel(), center[1] + (R * np.sin(TH)).ravel()])
    W = W.ravel() * np.exp(mollifier_log_value(pts, center, eps))
    keep = np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
    E = evaluation_matrix(space, pts[keep])
    return E.T @ W[keep]
