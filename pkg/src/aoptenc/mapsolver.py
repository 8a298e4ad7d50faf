"""Inner Bayesian inverse problem: MAP point, adjoint gradient, Hessian actions and posterior traces.

Weights ``w`` are arrays of shape ``(N_w, N_s)``; each row is one encoding block.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg as sla

from .counters import SolveCounter
from .fem import NegativeCurvatureError, SingularMatrixError, pcg, steihaug_pcg

log = logging.getLogger(__name__)

FULL = "full"
GAUSS_NEWTON = "gn"


@dataclass
class InverseProblem:
    """Forward model, per-source data and prior bundled together."""

    model: object
    data: object
    prior: object

    @property
    def sigma2(self):
        return self.data.sigma ** 2

    @property
    def n_sources(self):
        return self.model.n_sources


@dataclass
class InnerState:
    w: np.ndarray
    m: np.ndarray
    solver: object
    u: np.ndarray
    p: np.ndarray
    resid: np.ndarray
    misfit: float
    reg: float

    @property
    def J(self):
        return self.misfit + self.reg

    @property
    def n_w(self):
        return self.w.shape[0]


def as_weights(w, n_sources=None):
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if n_sources is not None and w.shape[1] != n_sources:
        raise ValueError(f"weights have {w.shape[1]} columns, expected {n_sources}")
    return w


def compute_state(problem, w, m, counter=None, adjoint=True, use_data=True):
    """Factorize ``A(m)``, solve the encoded states and (optionally) the adjoints.

    With ``use_data=False`` the residual is taken as ``B u`` against zero data; used together
    with ``adjoint=False`` for Gauss-Newton quantities at a fixed reference medium.
    """
    model = problem.model
    w = as_weights(w, model.n_sources)
    m = np.asarray(m, dtype=float)
    solver = model.factorize(m, counter)
    u = solver.solve(w @ model.F.T)
    obs = (model.B @ u.T).T
    resid = obs - w @ problem.data.D if use_data else obs
    n_w = w.shape[0]
    misfit = 0.5 * float(np.sum(resid ** 2)) / (n_w * problem.sigma2)
    reg, _, _ = problem.prior.reg_cost_grad_hess(m)
    st = InnerState(w, m, solver, u, np.zeros_like(u), resid, misfit, reg)
    if adjoint:
        add_adjoint(problem, st)
    return st


def add_adjoint(problem, st):
    """``A(m) p_i = -B^T (B u_i - d(w^i)) / sigma^2`` for every block."""
    rhs = -(problem.model.B.T @ st.resid.T).T / problem.sigma2
    st.p = st.solver.solve(rhs)
    return st


def eval_J(problem, w, m, counter=None):
    return compute_state(problem, w, m, counter, adjoint=False).J


def grad_J(problem, st):
    """``R (m - m0) - (kappa^2 / N_w) sum_i int u_i p_i phi_j``."""
    model = problem.model
    g = problem.prior.R @ (st.m - problem.prior.m0)
    acc = np.zeros_like(g)
    for i in range(st.n_w):
        acc += model.tri.project(st.u[i], st.p[i])
    return g - (model.kappa ** 2 / st.n_w) * acc


def apply_hessian(problem, st, yhat, kind=FULL, aux=False):
    """Hessian action at ``st.m`` in direction ``yhat`` (2 N_w solves).

    Incremental states ``v_i`` solve ``A v_i = kappa^2 W(yhat) u_i`` and incremental adjoints
    ``q_i`` solve ``A q_i = kappa^2 W(yhat) p_i - B^T B v_i / sigma^2``; Gauss-Newton drops the
    terms pairing ``p_i`` with increments.  With ``aux=True`` also returns ``stack([V, Q])``.
    """
    model = problem.model
    tri = model.tri
    k2 = model.kappa ** 2
    n_w = st.n_w
    yhat = np.asarray(yhat, dtype=float)
    full = kind == FULL
    rhs_v = np.empty_like(st.u)
    for i in range(n_w):
        rhs_v[i] = k2 * tri.apply(yhat, st.u[i])
    V = st.solver.solve(rhs_v)
    rhs_q = -(model.BtB @ V.T).T / problem.sigma2
    if full:
        for i in range(n_w):
            rhs_q[i] += k2 * tri.apply(yhat, st.p[i])
    Q = st.solver.solve(rhs_q)
    acc = np.zeros(model.n_param)
    for i in range(n_w):
        acc += tri.project(st.u[i], Q[i])
        if full:
            acc += tri.project(V[i], st.p[i])
    out = problem.prior.R @ yhat - (k2 / n_w) * acc
    if aux:
        return out, np.stack([V, Q])
    return out


def data_jacobian(problem, st):
    """Stacked, noise-scaled data Jacobian ``J`` (``N_w q x l``) with ``H_GN = R + J^T J``."""
    model = problem.model
    k2 = model.kappa ** 2
    AinvBt = st.solver.solve(model.B.toarray())  # rows: A^{-1} b_j (A symmetric)
    scale = k2 / np.sqrt(st.n_w * problem.sigma2)
    return np.vstack([scale * np.asarray((model.tri.jacobian(u).T @ AinvBt.T).T) for u in st.u])


def second_order_matrix(problem, st):
    """Dense ``H_full - H_GN``: the terms pairing the adjoints ``p_i`` with increments."""
    model = problem.model
    k2 = model.kappa ** 2
    n_w = st.n_w
    S = np.zeros((model.n_param, model.n_param))
    for i in range(n_w):
        if not np.any(st.p[i]):
            continue
        Wu = model.tri.jacobian(st.u[i])
        Wp = model.tri.jacobian(st.p[i])
        AinvWu = st.solver.solve(Wu.toarray().T)  # (l, t)
        C = np.asarray(Wp.T @ AinvWu.T)  # (l, l) = Wp^T A^{-1} Wu
        S -= (k2 * k2 / n_w) * (C + C.T)
    return 0.5 * (S + S.T)


def hessian_matrix(problem, st, kind=FULL):
    """Dense Hessian assembled from explicit Jacobians (independent of :func:`apply_hessian`)."""
    J = data_jacobian(problem, st)
    H = problem.prior.R + J.T @ J
    if kind == FULL:
        H += second_order_matrix(problem, st)
    return 0.5 * (H + H.T)


@dataclass
class MapSolveResult:
    state: InnerState
    converged: bool
    n_newton: int
    cg_iterations: list
    grad_norm: float
    grad_norm0: float
    grad_scale: float
    J_history: list
    n_state_evals: int
    n_adjoint_evals: int
    message: str = ""
    hessian_kinds: list = field(default_factory=list)
    stationary: bool = False  # J stopped resolving progress before the gradient test passed

    @property
    def m(self):
        return self.state.m

    @property
    def rel_grad(self):
        return self.grad_norm / self.grad_scale if self.grad_scale > 0 else 0.0


def _precond_norm(problem, g):
    return float(np.sqrt(max(g @ problem.prior.apply_C0(g), 0.0)))


def solve_map(problem, w, m_init=None, tol=1e-8, max_iter=100, counter=None, grad_scale=None,
              abs_tol=1e-13, gn_switch=1e-2, cg_max_iter=400, armijo_c=1e-4, backtrack=0.5,
              max_backtracks=30, max_forcing=0.5):
    """Inexact Newton-CG with Armijo backtracking, preconditioned by the prior covariance.

    Gauss-Newton steps are used until the ``C0``-norm of the gradient falls below ``gn_switch``
    times its reference value, full-Hessian steps afterwards.  The CG step is truncated
    (Steihaug) at a radius in the prior norm that adapts to the line-search outcome, so
    negative curvature of the full Hessian yields a bounded descent step instead of a breakdown.
    Convergence: gradient norm ``<= tol * grad_scale`` (``grad_scale`` defaults to the initial
    gradient norm) or ``<= abs_tol``.  When every fallback step fails the line search right after
    a relative decrease of J below about ``1e-12``, the result is flagged ``stationary`` (not
    ``converged``): the gradient test is then out of reach of double precision.
    """
    counter = counter if counter is not None else SolveCounter()
    prior = problem.prior
    w = as_weights(w, problem.n_sources)
    m = (prior.m0 if m_init is None else np.asarray(m_init, dtype=float)).copy()
    with counter.phase("map_state"):
        st = compute_state(problem, w, m, counter)
    n_state, n_adj = 1, 1
    g = grad_J(problem, st)
    gnorm = gnorm0 = _precond_norm(problem, g)
    scale = gnorm0 if grad_scale is None else float(grad_scale)
    J_hist = [st.J]
    cg_its, kinds = [], []
    converged, stationary, msg = False, False, ""
    radius = np.inf
    it = 0
    while True:
        if gnorm <= max(tol * scale, abs_tol):
            converged = True
            break
        if it >= max_iter:
            msg = f"no convergence after {max_iter} Newton iterations"
            break
        kind = GAUSS_NEWTON if gnorm > gn_switch * scale else FULL
        forcing = min(max_forcing, np.sqrt(gnorm / scale)) if scale > 0 else max_forcing
        accepted = None
        n_cg = 0
        # fallbacks: Gauss-Newton, then a tightly solved Gauss-Newton step (a stiff mode can
        # dominate the CG residual and end the loose solve before the other modes are resolved)
        attempts = [(kind, forcing)] + ([(GAUSS_NEWTON, forcing)] if kind == FULL else [])
        attempts.append((GAUSS_NEWTON, min(forcing, 1e-6)))
        for kind, eta in attempts:
            with counter.phase("map_hessian"):
                res = steihaug_pcg(lambda d: apply_hessian(problem, st, d, kind), prior.apply_C0, -g,
                                   radius=radius, rel_tol=eta, max_iter=cg_max_iter)
            n_cg += res.iterations
            step = res.x
            slope = float(g @ step)
            if slope >= 0:
                step = -prior.apply_C0(g)
                slope = float(g @ step)
            accepted, alpha, n_eval = _armijo(problem, w, st, step, slope, counter, armijo_c, backtrack,
                                              max_backtracks)
            n_state += n_eval
            if accepted is not None:
                break
        cg_its.append(n_cg)
        kinds.append(kind)
        it += 1
        if accepted is None:
            tiny = 1e2 * np.finfo(float).eps * max(abs(st.J), 1.0)
            stalled = len(J_hist) > 1 and J_hist[-2] - J_hist[-1] <= 1e4 * tiny
            if abs(slope) <= tiny or stalled:
                # J no longer resolves the remaining decrease (stiff near-resonant modes)
                stationary, msg = True, "stationary to working precision"
            else:
                msg = f"line search failed after {max_backtracks} backtracks"
            break
        step_norm = alpha * _precond_norm_primal(problem, step)
        if alpha < 1.0:
            # one sharp backtrack must not freeze the iteration
            radius = max(step_norm, 0.1 * radius) if np.isfinite(radius) else step_norm
        elif res.status in ("boundary", "negative_curvature"):
            radius = 2.0 * max(step_norm, radius if np.isfinite(radius) else 0.0)
        with counter.phase("map_state"):
            add_adjoint(problem, accepted)
        n_adj += 1
        st = accepted
        J_hist.append(st.J)
        g = grad_J(problem, st)
        gnorm = _precond_norm(problem, g)
    if not converged and not stationary:
        log.warning("MAP solve not converged: %s (|g| = %.3e)", msg, gnorm)
    return MapSolveResult(st, converged, it, cg_its, gnorm, gnorm0, scale, J_hist, n_state, n_adj, msg, kinds,
                          stationary)


def _armijo(problem, w, st, step, slope, counter, c, backtrack, max_backtracks):
    alpha, n_eval = 1.0, 0
    for _ in range(max_backtracks):
        try:
            with counter.phase("map_state"):
                trial = compute_state(problem, w, st.m + alpha * step, counter, adjoint=False)
            n_eval += 1
        except SingularMatrixError:
            alpha *= backtrack
            continue
        if trial.J < st.J and trial.J <= st.J + c * alpha * slope:
            return trial, alpha, n_eval
        alpha *= backtrack
    return None, alpha, n_eval


def _precond_norm_primal(problem, x):
    return float(np.sqrt(max(x @ problem.prior.R @ x, 0.0)))


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def posterior_trace_exact(problem, st, kind=FULL, method="dense", max_dim=2000, cg_tol=1e-10,
                          counter=None, allow_indefinite=False):
    """``tr(H^{-1} M)`` from the assembled Hessian (``dense``) or by ``l`` CG solves (``cg``).

    The dense path diagonalizes the prior-whitened Hessian ``L^{-1} H L^{-T}`` (``R = L L^T``),
    which stays accurate when data eigenvalues exceed the prior ones by 1e16 and more, where a
    Cholesky of ``H`` itself breaks down.  An indefinite Hessian raises
    :class:`NotPositiveDefiniteError` unless ``allow_indefinite`` is set, in which case the
    trace of the inverse is still returned.
    """
    prior = problem.prior
    n = prior.dim
    if n > max_dim:
        raise ValueError(f"parameter dimension {n} exceeds the exact-trace guard {max_dim}")
    if method == "dense":
        return whitened_hessian(problem, st, kind).trace(allow_indefinite)
    if method != "cg":
        raise ValueError(f"unknown method {method!r}")
    total = 0.0
    for j in range(n):
        try:
            res = pcg(lambda d: apply_hessian(problem, st, d, kind), prior.apply_C0, prior.M[:, j],
                      rel_tol=cg_tol, max_iter=10 * n)
        except NegativeCurvatureError as exc:
            raise NotPositiveDefiniteError(f"{kind} Hessian is not positive definite: {exc}") from None
        total += res.x[j]
    return float(total)


class WhitenedHessian:
    """Factorization ``L^{-1} H L^{-T} = V^{-T} diag(eigenvalues) V^{-1}`` with ``R = L L^T``.

    Gives ``tr(H^{-1} M)`` and ``H^{-1} b`` that stay accurate when data eigenvalues exceed the
    prior ones by 1e16 and more, where a Cholesky of ``H`` itself breaks down.  For Gauss-Newton
    Hessians :meth:`from_jacobian` never forms ``J^T J``: the eigenvalues are ``1 + s^2`` from the
    singular values ``s`` of the whitened Jacobian, so they stay ``>= 1`` at any magnitude.
    """

    def __init__(self, prior, H=None, eigenvalues=None, V=None):
        self.prior = prior
        self.L = prior.R_cholesky_lower
        if H is not None:
            Ht = sla.solve_triangular(self.L, sla.solve_triangular(self.L, H, lower=True).T, lower=True)
            eigenvalues, V = np.linalg.eigh(0.5 * (Ht + Ht.T))
        self.eigenvalues, self.V = eigenvalues, V

    @classmethod
    def from_jacobian(cls, prior, J, S=None):
        """Whitened ``R + J^T J + S``.

        With ``Jt = U s V^T`` and ``D = sqrt(1 + s^2)`` the whitened Hessian is ``V D B D V^T`` with
        ``B = I + D^{-1} V^T St V D^{-1}``; only the well-scaled ``B`` is diagonalized.  Its
        eigenvalues then replace those of the Hessian: same inertia, different magnitudes.
        """
        L = prior.R_cholesky_lower
        Jt = sla.solve_triangular(L, np.asarray(J).T, lower=True).T
        _, s, Vh = np.linalg.svd(Jt, full_matrices=True)
        lam = np.ones(Vh.shape[0])
        lam[:s.size] += s * s
        if S is None:
            return cls(prior, eigenvalues=lam, V=Vh.T)
        St = sla.solve_triangular(L, sla.solve_triangular(L, S, lower=True).T, lower=True)
        d = np.sqrt(lam)
        B = Vh @ St @ Vh.T / np.outer(d, d)
        mu, Q = np.linalg.eigh(np.eye(d.size) + 0.5 * (B + B.T))
        return cls(prior, eigenvalues=mu, V=Vh.T @ (Q / d[:, None]))

    @property
    def min_eigenvalue(self):
        return float(self.eigenvalues[0])

    @property
    def positive_definite(self):
        return self.min_eigenvalue > 0

    def _check(self, allow_indefinite):
        if np.any(self.eigenvalues == 0):
            raise NotPositiveDefiniteError("Hessian is singular")
        if not allow_indefinite and not self.positive_definite:
            raise NotPositiveDefiniteError(
                f"Hessian is not positive definite (whitened eigenvalue {self.min_eigenvalue:.3g})")

    def trace(self, allow_indefinite=False):
        """``tr(H^{-1} M)``."""
        self._check(allow_indefinite)
        L = self.L
        Mt = sla.solve_triangular(L, sla.solve_triangular(L, self.prior.M, lower=True).T, lower=True)
        return float(np.sum(np.einsum("ik,ij,jk->k", self.V, Mt, self.V) / self.eigenvalues))

    def solve(self, b, allow_indefinite=False):
        """``H^{-1} b`` for a vector or for the rows of a 2-D array."""
        self._check(allow_indefinite)
        b = np.asarray(b, dtype=float)
        x = sla.solve_triangular(self.L, b.T, lower=True)
        x = self.V @ ((self.V.T @ x) / (self.eigenvalues if x.ndim == 1 else self.eigenvalues[:, None]))
        return sla.solve_triangular(self.L.T, x, lower=False).T


def whitened_hessian(problem, st, kind=FULL):
    if kind == GAUSS_NEWTON:
        return WhitenedHessian.from_jacobian(problem.prior, data_jacobian(problem, st))
    return WhitenedHessian.from_jacobian(problem.prior, data_jacobian(problem, st), second_order_matrix(problem, st))


@dataclass
class TraceEstimate:
    value: float
    terms: np.ndarray
    Y: np.ndarray  # (n_tr, l): H y_k = M z_k
    V: np.ndarray  # (n_tr, N_w, t) incremental states of y_k
    Q: np.ndarray  # (n_tr, N_w, t) incremental adjoints of y_k
    cg_iterations: list
    converged: bool


def posterior_trace_estimated(problem, st, kind, Z, cg_tol=1e-8, cg_max_iter=500):
    """``(1/n_tr) sum_k y_k^T M z_k`` with ``H y_k = M z_k`` by prior-preconditioned CG.

    The incremental fields of each ``y_k`` are accumulated alongside CG, so no extra solves
    are spent on them.
    """
    prior = problem.prior
    Z = np.asarray(Z, dtype=float).reshape(-1, prior.dim)
    n_tr = Z.shape[0]
    n_w, t = st.u.shape
    Y = np.zeros((n_tr, prior.dim))
    V = np.zeros((n_tr, n_w, t))
    Q = np.zeros((n_tr, n_w, t))
    its, ok = [], True
    terms = np.zeros(n_tr)
    for k in range(n_tr):
        b = prior.M @ Z[k]
        res = pcg(lambda d: apply_hessian(problem, st, d, kind, aux=True), prior.apply_C0, b,
                  rel_tol=cg_tol, max_iter=cg_max_iter, aux=True)
        Y[k] = res.x
        if res.aux is not None:
            V[k], Q[k] = res.aux
        its.append(res.iterations)
        ok &= res.converged
        terms[k] = float(res.x @ b)
    # an empty probe set estimates nothing; report 0 rather than nan
    value = float(terms.mean()) if n_tr else 0.0
    return TraceEstimate(value, terms, Y, V, Q, its, ok)
