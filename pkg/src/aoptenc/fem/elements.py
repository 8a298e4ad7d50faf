"""Reference-triangle quadrature and Lagrange basis functions.

The reference triangle is ``{(x, y): x, y >= 0, x + y <= 1}`` (area 1/2).
"""
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def triangle_rule(n_1d=4):
    """Collapsed (conical product) Gauss rule on the reference triangle.

    ``n_1d`` points per direction integrate polynomials of total degree ``2 n_1d - 1``
    exactly; the default (16 points) is exact to degree 7.
    """
    xi, wxi = roots_jacobi(n_1d, 1.0, 0.0)  # weight (1 - xi)
    eta, weta = roots_legendre(n_1d)
    u = 0.5 * (1.0 + xi)
    wu = 0.25 * wxi
    v = 0.5 * (1.0 + eta)
    wv = 0.5 * weta
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    points = np.column_stack([x, y])
    points.setflags(write=False)
    weights = W.ravel()
    weights.setflags(write=False)
    return points, weights


def barycentric(points):
    points = np.atleast_2d(points)
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([1.0 - x - y, x, y])


def basis_values(degree, points):
    """Basis values at reference ``points``, shape ``(n_points, n_local)``."""
    lam = barycentric(points)
    if degree == 1:
        return lam
    l0, l1, l2 = lam.T
    return np.column_stack([
        l0 * (2 * l0 - 1),
        l1 * (2 * l1 - 1),
        l2 * (2 * l2 - 1),
        4 * l1 * l2,
        4 * l2 * l0,
        4 * l0 * l1,
    ])


_DLAM = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def basis_gradients(degree, points):
    """Reference gradients, shape ``(n_points, n_local, 2)``."""
    points = np.atleast_2d(points)
    npts = points.shape[0]
    if degree == 1:
        return np.broadcast_to(_DLAM, (npts, 3, 2)).copy()
    lam = barycentric(points)
    g = np.empty((npts, 6, 2))
    for i in range(3):
        g[:, i, :] = (4 * lam[:, i] - 1)[:, None] * _DLAM[i]
    for k, (i, j) in enumerate([(1, 2), (2, 0), (0, 1)]):
        g[:, 3 + k, :] = 4 * (lam[:, i, None] * _DLAM[j] + lam[:, j, None] * _DLAM[i])
    return g


@lru_cache(maxsize=None)
def reference_mass(degree):
    pts, w = triangle_rule()
    phi = basis_values(degree, pts)
    return np.einsum("q,qa,qb->ab", w, phi, phi)


@lru_cache(maxsize=None)
def reference_trilinear():
    """``T[j, a, b] = int_ref phi_j psi_a psi_b`` with P1 ``phi`` and P2 ``psi`` (degree-5 integrand)."""
    pts, w = triangle_rule()
    phi = basis_values(1, pts)
    psi = basis_values(2, pts)
    T = np.einsum("q,qj,qa,qb->jab", w, phi, psi, psi)
    return np.ascontiguousarray(T)
