"""Pure-numpy versions of the trilinear-form kernels (same signatures as the Cython module)."""
import numpy as np


def trilinear_apply(T, scale, sdofs, pdofs, c, u, n_state):
    local = np.einsum("jab,ej,eb->ea", T, c[pdofs], u[sdofs]) * scale[:, None]
    return np.bincount(sdofs.ravel(), weights=local.ravel(), minlength=n_state)


def trilinear_project(T, scale, sdofs, pdofs, u, v, n_param):
    local = np.einsum("jab,ea,eb->ej", T, u[sdofs], v[sdofs]) * scale[:, None]
    return np.bincount(pdofs.ravel(), weights=local.ravel(), minlength=n_param)
