# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trilinear-form kernels.

Both kernels contract the reference tensor ``T[j, a, b] = int phi_j psi_a psi_b``
(P1 index ``j``, P2 indices ``a, b``) element by element.  Signatures match
:mod:`aoptenc._kernels_py`.
"""
import numpy as np


def trilinear_apply(const double[:, :, ::1] T, const double[::1] scale,
                    const Py_ssize_t[:, ::1] sdofs, const Py_ssize_t[:, ::1] pdofs,
                    const double[::1] c, const double[::1] u, Py_ssize_t n_state):
    """out_a = sum_e scale_e sum_{j,b} T[j,a,b] c_j u_b  (the action W(c) u)."""
    cdef Py_ssize_t ne = sdofs.shape[0], nj = T.shape[0], na = T.shape[1]
    cdef Py_ssize_t e, j, a, b
    cdef double cl[8]
    cdef double ul[16]
    cdef double acc, s
    out_arr = np.zeros(n_state)
    cdef double[::1] out = out_arr
    with nogil:
        for e in range(ne):
            for j in range(nj):
                cl[j] = c[pdofs[e, j]]
            for b in range(na):
                ul[b] = u[sdofs[e, b]]
            s = scale[e]
            for a in range(na):
                acc = 0.0
                for j in range(nj):
                    for b in range(na):
                        acc += T[j, a, b] * cl[j] * ul[b]
                out[sdofs[e, a]] += s * acc
    return out_arr


def trilinear_project(const double[:, :, ::1] T, const double[::1] scale,
                      const Py_ssize_t[:, ::1] sdofs, const Py_ssize_t[:, ::1] pdofs,
                      const double[::1] u, const double[::1] v, Py_ssize_t n_param):
    """out_j = sum_e scale_e sum_{a,b} T[j,a,b] u_a v_b  (the functional int u v phi_j)."""
    cdef Py_ssize_t ne = sdofs.shape[0], nj = T.shape[0], na = T.shape[1]
    cdef Py_ssize_t e, j, a, b
    cdef double ul[16]
    cdef double vl[16]
    cdef double acc, inner
    out_arr = np.zeros(n_param)
    cdef double[::1] out = out_arr
    with nogil:
        for e in range(ne):
            for a in range(na):
                ul[a] = u[sdofs[e, a]]
                vl[a] = v[sdofs[e, a]]
            for j in range(nj):
                acc = 0.0
                for a in range(na):
                    inner = 0.0
                    for b in range(na):
                        inner += T[j, a, b] * vl[b]
                    acc += ul[a] * inner
                out[pdofs[e, j]] += scale[e] * acc
    return out_arr
