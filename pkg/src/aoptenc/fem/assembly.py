"""Finite-element assembly on the structured unit-square mesh."""
import numpy as np
import scipy.sparse as sp

from .. import kernels
from .elements import basis_gradients, reference_mass, reference_trilinear, triangle_rule


def element_geometry(mesh):
    """Affine maps ``x = P0 + Jac @ xhat``: returns ``(P0, Jac, |det Jac|)``."""
    P = mesh.vertices[mesh.triangles]
    P0 = P[:, 0, :]
    jac = np.stack([P[:, 1, :] - P0, P[:, 2, :] - P0], axis=2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    return P0, jac, np.abs(det)


def _scatter(space, local):
    dofs = space.cell_dofs
    nloc = dofs.shape[1]
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    n = space.dim
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble_mass(space):
    _, _, det = element_geometry(space.mesh)
    local = det[:, None, None] * reference_mass(space.degree)[None]
    return _scatter(space, local)


def assemble_stiffness(space):
    _, jac, det = element_geometry(space.mesh)
    pts, w = triangle_rule()
    ghat = basis_gradients(space.degree, pts)  # (q, a, 2)
    inv_t = np.linalg.inv(jac).transpose(0, 2, 1)
    g = np.einsum("eij,qaj->eqai", inv_t, ghat)
    local = np.einsum("q,eqai,eqbi->eab", w, g, g) * det[:, None, None]
    K = _scatter(space, local)
    return ((K + K.T) * 0.5).tocsr()


class Trilinear:
    """The form ``(c, u, v) -> int c u v`` with ``c`` in P1 and ``u, v`` in P2 on one mesh.

    ``apply(c, u)`` is the weighted-mass action ``W(c) u`` and ``project(u, v)`` the
    parameter-space functional ``j -> int u v phi_j``; both run through :mod:`aoptenc.kernels`.
    """

    def __init__(self, param_space, state_space):
        if not param_space.same_mesh(state_space):
            raise ValueError("parameter and state spaces live on different meshes")
        if param_space.degree != 1 or state_space.degree != 2:
            raise ValueError("expected a P1 parameter space and a P2 state space")
        self.param_space = param_space
        self.state_space = state_space
        self.T = reference_trilinear()
        _, _, det = element_geometry(param_space.mesh)
        self.scale = np.ascontiguousarray(det)
        self.sdofs = np.ascontiguousarray(state_space.cell_dofs, dtype=np.intp)
        self.pdofs = np.ascontiguousarray(param_space.cell_dofs, dtype=np.intp)
        self.n_state = state_space.dim
        self.n_param = param_space.dim

    def apply(self, c, u):
        return kernels.trilinear_apply(self.T, self.scale, self.sdofs, self.pdofs,
                                       np.ascontiguousarray(c, dtype=float),
                                       np.ascontiguousarray(u, dtype=float), self.n_state)

    def project(self, u, v):
        return kernels.trilinear_project(self.T, self.scale, self.sdofs, self.pdofs,
                                         np.ascontiguousarray(u, dtype=float),
                                         np.ascontiguousarray(v, dtype=float), self.n_param)

    def matrix(self, c):
        c = np.asarray(c, dtype=float)
        local = np.einsum("jab,ej->eab", self.T, c[self.pdofs]) * self.scale[:, None, None]
        return _scatter(self.state_space, local)

    def jacobian(self, u):
        """Sparse ``(n_state, n_param)`` matrix of ``c -> W(c) u``."""
        u = np.asarray(u, dtype=float)
        local = np.einsum("jab,eb->eaj", self.T, u[self.sdofs]) * self.scale[:, None, None]
        rows = np.repeat(self.sdofs, self.pdofs.shape[1], axis=1).ravel()
        cols = np.tile(self.pdofs, (1, self.sdofs.shape[1])).ravel()
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(self.n_state, self.n_param))


def assemble_weighted_mass(state_space, m, param_space):
    """Matrix of ``(u, v) -> int m u v`` on the state space for a P1 coefficient ``m``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (param_space.dim,):
        raise ValueError(f"coefficient has shape {m.shape}, expected ({param_space.dim},)")
    return Trilinear(param_space, state_space).matrix(m)


def product_project(u, v, state_space, param_space):
    if not state_space.same_mesh(param_space):
        raise ValueError("spaces live on different meshes")
    return Trilinear(param_space, state_space).project(u, v)
