"""Gaussian prior with precision ``Y + eta Y^2``, ``Y = -gamma Laplacian + beta I`` (Neumann)."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .fem import MassInverseSampler, assemble_mass, assemble_stiffness


@dataclass(frozen=True)
class PriorSpec:
    gamma: float = 1e-3
    beta: float = 1e-4
    eta: float = 1e-2
    mean: object = 1.0  # constant or coefficient vector

    def validate(self):
        # gamma = eta = 0 still gives an SPD precision (beta * M); negative values never do
        if self.gamma < 0 or self.eta < 0 or self.beta <= 0:
            raise ValueError(f"need gamma >= 0, eta >= 0, beta > 0; got {self}")


class Prior:
    """Discrete prior on a P1 space.

    ``A_Y = gamma K + beta M`` is the weak form of ``Y`` and the Cameron-Martin matrix is
    ``R = A_Y + eta A_Y M^{-1} A_Y``, formed densely and Cholesky-factorized once.
    """

    def __init__(self, spec, space):
        spec.validate()
        self.spec = spec
        self.space = space
        self.M_sparse = assemble_mass(space)
        self.K_sparse = assemble_stiffness(space)
        self.M = self.M_sparse.toarray()
        A_Y = spec.gamma * self.K_sparse.toarray() + spec.beta * self.M
        M_chol = sla.cho_factor(self.M)
        R = A_Y + spec.eta * A_Y @ sla.cho_solve(M_chol, A_Y)
        self.A_Y = A_Y
        self.R = 0.5 * (R + R.T)
        self._M_chol = M_chol
        self._R_chol = sla.cho_factor(self.R)
        self.R_cholesky_lower = np.linalg.cholesky(self.R)
        if np.ndim(spec.mean) == 0:
            self.m0 = np.full(space.dim, float(spec.mean))
        else:
            self.m0 = np.asarray(spec.mean, dtype=float).copy()
            if self.m0.shape != (space.dim,):
                raise ValueError(f"prior mean has shape {self.m0.shape}, expected ({space.dim},)")
        self._sampler = None

    @property
    def dim(self):
        return self.space.dim

    def cm_inner(self, x, y):
        return float(np.asarray(x) @ self.R @ np.asarray(y))

    def reg_cost_grad_hess(self, m):
        dm = np.asarray(m, dtype=float) - self.m0
        g = self.R @ dm
        return 0.5 * float(dm @ g), g, self.apply_R

    def apply_R(self, x):
        return self.R @ x

    def apply_C0(self, b):
        return sla.cho_solve(self._R_chol, b)

    def apply_Minv(self, b):
        return sla.cho_solve(self._M_chol, b)

    def sample_trace_vectors(self, n_tr, rng):
        """``n_tr`` draws of ``N(0, M^{-1})`` as rows of an array."""
        if n_tr < 0:
            raise ValueError(f"need a nonnegative number of trace vectors, got {n_tr}")
        if n_tr == 0:
            return np.zeros((0, self.dim))
        if self._sampler is None:
            self._sampler = MassInverseSampler(self.M)
        return self._sampler.draw(rng, int(n_tr))


def build_prior(spec, space):
    return Prior(spec, space)


cm_inner = Prior.cm_inner
reg_cost_grad_hess = Prior.reg_cost_grad_hess
apply_C0 = Prior.apply_C0
