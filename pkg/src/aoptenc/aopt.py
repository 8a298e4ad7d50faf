"""Outer problem: trace-estimated A-optimal criteria over encoding weights and their gradients."""
from dataclasses import dataclass, field
import logging

import numpy as np

from .counters import SolveCounter
from .fem import NegativeCurvatureError, pcg
from .mapsolver import (
    FULL,
    GAUSS_NEWTON,
    apply_hessian,
    as_weights,
    compute_state,
    posterior_trace_estimated,
    solve_map,
)

log = logging.getLogger(__name__)

GN_MAP = "gn_map"
LAPLACE_MAP = "laplace_map"
GN_REF = "gn_ref"
KINDS = (GN_MAP, LAPLACE_MAP, GN_REF)
HESSIAN_KIND = {GN_MAP: GAUSS_NEWTON, LAPLACE_MAP: FULL, GN_REF: GAUSS_NEWTON}
ALIASES = {
    "gn": GN_MAP, "gaussnewtonatmap": GN_MAP, "gn_map": GN_MAP,
    "laplace": LAPLACE_MAP, "laplaceatmap": LAPLACE_MAP, "laplace_map": LAPLACE_MAP,
    "gn0": GN_REF, "ref": GN_REF, "gaussnewtonatref": GN_REF, "gn_ref": GN_REF,
}

# MAP accuracy beyond which the outer gradient is no longer trusted
GRADIENT_MAP_TOL = 1e-6


def phi_kind(name):
    try:
        return ALIASES[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown criterion {name!r}; expected one of {KINDS}") from None


def penalty(w, lam):
    w = np.atleast_2d(w)
    s = np.sum(w * w, axis=1) - 1.0
    return 0.5 * lam / w.shape[0] * float(s @ s)


def penalty_gradient(w, lam):
    w = np.atleast_2d(w)
    s = np.sum(w * w, axis=1) - 1.0
    return 2.0 * lam / w.shape[0] * s[:, None] * w


@dataclass
class PhiEvaluation:
    kind: str
    w: np.ndarray
    trace_part: float
    penalty_part: float
    lam: float
    state: object
    trace: object
    Z: np.ndarray
    counter: SolveCounter
    map_result: object = None
    map_tol: float = None
    gradient_info: dict = field(default_factory=dict)

    @property
    def value(self):
        return self.trace_part + self.penalty_part

    @property
    def converged(self):
        ok = self.trace.converged
        if self.map_result is not None:
            ok = ok and self.map_result.converged
        return ok

    @property
    def m(self):
        return self.state.m


def eval_phi(problem, kind, w, Z, lam=1e3, m_init=None, map_opts=None, cg_tol=1e-8,
             cg_max_iter=500, counter=None, map_result=None):
    """Trace estimate of the posterior covariance for encoding ``w`` plus the sphere penalty.

    ``gn_map`` and ``laplace_map`` first solve for the MAP point (warm-started from ``m_init``);
    ``gn_ref`` uses the encoded states at the prior mean and no adjoints.  A MAP result computed
    elsewhere for the same ``w`` may be passed as ``map_result``.
    """
    kind = phi_kind(kind)
    counter = counter if counter is not None else SolveCounter()
    w = as_weights(w, problem.n_sources)
    map_opts = dict(map_opts or {})
    if kind == GN_REF:
        map_result = None
        with counter.phase("state"):
            st = compute_state(problem, w, problem.prior.m0, counter, adjoint=False, use_data=False)
    else:
        if map_result is None:
            map_result = solve_map(problem, w, m_init=m_init, counter=counter, **map_opts)
        elif not np.array_equal(map_result.state.w, w):
            raise ValueError("supplied MAP result belongs to different weights")
        st = map_result.state
    with counter.phase("trace"):
        tr = posterior_trace_estimated(problem, st, HESSIAN_KIND[kind], Z, cg_tol=cg_tol,
                                       cg_max_iter=cg_max_iter)
    counter.cg_iterations["trace"] += sum(tr.cg_iterations)
    if map_result is not None:
        counter.cg_iterations["map_hessian"] += sum(map_result.cg_iterations)
    Z = np.asarray(Z, dtype=float).reshape(tr.Y.shape)
    return PhiEvaluation(kind, w, tr.value, penalty(w, lam), lam, st, tr, Z, counter, map_result,
                         map_opts.get("tol", 1e-8))


def phi_gradient(problem, ev, cg_tol=1e-10, cg_max_iter=1000):
    """Adjoint gradient of ``ev.value`` with respect to the weights, shape ``(N_w, N_s)``.

    The Lagrangian adjoints of ``y_k, v_ik, q_ik`` are the negated forward quantities, so the
    extra work is the ``m*`` Hessian solve (MAP kinds) and one or two solves per block.
    """
    model = problem.model
    tri = model.tri
    st = ev.state
    counter = ev.counter
    k2 = model.kappa ** 2
    s2 = problem.sigma2
    n_w = st.n_w
    tr = ev.trace
    n_tr = tr.Y.shape[0]
    info = ev.gradient_info
    if ev.map_result is not None and (not ev.map_result.converged or (ev.map_tol or 0) > GRADIENT_MAP_TOL):
        info["valid"] = False
        log.warning("outer gradient from an inaccurate MAP point is unreliable")
    else:
        info["valid"] = True
    if n_tr == 0:
        # the estimated trace is identically zero, only the penalty depends on w
        info["mstar_cg"] = 0
        return penalty_gradient(ev.w, ev.lam)

    def weighted_sum(F):
        # S_i = (2 kappa^2 / n_tr) sum_k W(y_k) F_ki
        S = np.zeros_like(st.u)
        for i in range(n_w):
            for k in range(n_tr):
                S[i] += tri.apply(tr.Y[k], F[k, i])
        return (2.0 * k2 / n_tr) * S

    Sq = weighted_sum(tr.Q)
    solver = st.solver
    if ev.kind == GN_REF:
        with counter.phase("adjoint"):
            u_star = solver.solve(-Sq)
        p_star = np.zeros_like(u_star)
        info["mstar_cg"] = 0
    else:
        full = ev.kind == LAPLACE_MAP
        with counter.phase("adjoint_rhs"):
            if full:
                a = solver.solve(-weighted_sum(tr.V))
                c = solver.solve(-(model.BtB @ a.T).T / s2 - Sq)
            else:
                a = np.zeros_like(st.u)
                c = solver.solve(-Sq)
        rhs = np.zeros(model.n_param)
        for k in range(n_tr):
            for i in range(n_w):
                rhs += tri.project(tr.V[k, i], tr.Q[k, i])
        rhs *= -2.0 * k2 / (n_tr * n_w)
        acc = np.zeros(model.n_param)
        for i in range(n_w):
            acc += tri.project(st.u[i], c[i])
            if full:
                acc += tri.project(st.p[i], a[i])
        rhs += (k2 / n_w) * acc
        # the MAP point moves with w through the full Hessian, whichever criterion is used
        with counter.phase("mstar"):
            try:
                res = pcg(lambda d: apply_hessian(problem, st, d, FULL, aux=True), problem.prior.apply_C0,
                          rhs, rel_tol=cg_tol, max_iter=cg_max_iter, aux=True)
            except NegativeCurvatureError as exc:
                counter.cg_iterations["mstar"] += exc.iteration
                raise
        counter.cg_iterations["mstar"] += res.iterations
        info["mstar_cg"] = res.iterations
        info["mstar_converged"] = res.converged
        if res.aux is None:
            Vm = Qm = np.zeros_like(st.u)
        else:
            Vm, Qm = res.aux
        p_star = Vm + a
        u_star = Qm + c
    obs = (model.B @ p_star.T).T
    grad = -(u_star @ model.F + obs @ problem.data.D.T / s2) / n_w
    return grad + penalty_gradient(ev.w, ev.lam)


def sample_weights(distribution, n_w, n_s, rng):
    """Encoding weights with unit-norm blocks: ``uniform`` sphere or normalized ``rademacher``."""
    rng = np.random.default_rng(rng)
    if distribution in ("uniform", "uniform_sphere", "sphere"):
        w = rng.standard_normal((n_w, n_s))
        return w / np.linalg.norm(w, axis=1, keepdims=True)
    if distribution in ("rademacher", "rademacher_normalized"):
        return rng.choice([-1.0, 1.0], size=(n_w, n_s)) / np.sqrt(n_s)
    raise ValueError(f"unknown weight distribution {distribution!r}")


def renormalize(w):
    w = np.atleast_2d(np.asarray(w, dtype=float))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


@dataclass
class OptimizationResult:
    w: np.ndarray
    phi: float
    evaluation: PhiEvaluation
    trajectory: list
    converged: bool
    message: str
    n_evals: int

    @property
    def w_normalized(self):
        return renormalize(self.w)


def optimize_weights(problem, kind, w_init, Z, lam=1e3, max_iters=200, tol=1e-6, memory=10,
                     map_opts=None, cg_tol=1e-8, grad_cg_tol=1e-10, armijo_c=1e-4, backtrack=0.5,
                     max_backtracks=20, first_step=0.1, callback=None, counter=None):
    """L-BFGS with Armijo backtracking over the ambient weight space.

    Stops when ``||grad|| <= tol * max(||grad_0||, 1)``.  MAP solves are warm-started from
    the last accepted iterate; every evaluation charges ``counter`` when given.  A failed line search on a quasi-Newton direction is retried
    once along steepest descent; a second failure returns the best iterate, flagged.
    """
    kind = phi_kind(kind)
    w = as_weights(w_init, problem.n_sources).copy()
    shape = w.shape
    n_evals = 0

    def evaluate(x, m_init):
        nonlocal n_evals
        n_evals += 1
        return eval_phi(problem, kind, x.reshape(shape), Z, lam=lam, m_init=m_init, map_opts=map_opts,
                        cg_tol=cg_tol, counter=counter)

    ev = evaluate(w.ravel(), None)
    g = phi_gradient(problem, ev, cg_tol=grad_cg_tol).ravel()
    x, f = w.ravel().copy(), ev.value
    gnorm0 = float(np.linalg.norm(g))
    stop = tol * max(gnorm0, 1.0)
    S, Yh = [], []
    traj = [_record(0, ev, g, n_evals, 1.0)]
    converged, msg = gnorm0 <= stop, ""
    it = 0
    steepest = False
    while not converged and it < max_iters:
        if steepest or not S:
            d = -g * (first_step / max(np.abs(g).max(), 1e-300)) if not S else -g * _gamma(S, Yh)
        else:
            d = -_two_loop(g, S, Yh)
        slope = float(g @ d)
        if slope >= 0:
            S, Yh = [], []
            d = -g * (first_step / max(np.abs(g).max(), 1e-300))
            slope = float(g @ d)
        alpha, trial = 1.0, None
        for _ in range(max_backtracks):
            x_try = x + alpha * d
            try:
                cand = evaluate(x_try, ev.m)
            except (np.linalg.LinAlgError, NegativeCurvatureError) as exc:
                log.debug("objective failed at trial step %.3g: %s", alpha, exc)
                alpha *= backtrack
                continue
            if np.isfinite(cand.value) and cand.value <= f + armijo_c * alpha * slope:
                trial = cand
                break
            alpha *= backtrack
        if trial is None:
            if not steepest:
                steepest = True
                S, Yh = [], []
                continue
            msg = "line search failed"
            break
        steepest = False
        g_new = phi_gradient(problem, trial, cg_tol=grad_cg_tol).ravel()
        s, y = x_try - x, g_new - g
        if s @ y > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Yh.append(y)
            if len(S) > memory:
                S.pop(0)
                Yh.pop(0)
        x, g, f, ev = x_try, g_new, trial.value, trial
        it += 1
        traj.append(_record(it, ev, g, n_evals, alpha))
        if callback is not None:
            callback(traj[-1])
        converged = float(np.linalg.norm(g)) <= stop
    if not converged and not msg:
        msg = f"stopped after {max_iters} iterations"
    if msg and msg != f"stopped after {max_iters} iterations":
        log.warning("weight optimization: %s", msg)
    return OptimizationResult(x.reshape(shape), f, ev, traj, converged, msg, n_evals)


def _gamma(S, Yh):
    s, y = S[-1], Yh[-1]
    return float(s @ y) / float(y @ y)


def _two_loop(g, S, Yh):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Yh)):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        q -= a * y
        alphas.append((rho, a))
    q *= _gamma(S, Yh)
    for (s, y), (rho, a) in zip(zip(S, Yh), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q


def _record(it, ev, g, n_evals, step):
    return {
        "iter": it,
        "phi": ev.value,
        "trace": ev.trace_part,
        "penalty": ev.penalty_part,
        "grad_norm": float(np.linalg.norm(g)),
        "n_evals": n_evals,
        "step": step,
        "w": ev.w.copy(),
    }


@dataclass
class AuditRow:
    phase: str
    table_formula: str
    expected: int
    measured: int

    @property
    def passed(self):
        return self.expected == self.measured


def audit_counters(ev):
    """Per-phase solve counts of an evaluation (with gradient) against the cost table.

    Convention: ``n_cg`` products are read as recorded CG-iteration totals, and one Hessian
    application costs ``2 N_w`` solves.  MAP-point rows add the state and adjoint solves of
    each line-search trial, which the leading-order table entries leave out.  With no trace
    probes the gradient needs no solves at all.  The last row compares the sum of the formulas
    with the counter total.
    """
    n_w = ev.w.shape[0]
    c = ev.counter.counts
    cg = ev.counter.cg_iterations
    has_grad = bool(ev.gradient_info)
    probes = ev.Z.shape[0] > 0
    rows = []
    if ev.kind == GN_REF:
        rows.append(AuditRow("state at m0", "N_w", n_w, c["state"]))
        rows.append(AuditRow("trace", "2 N_w n_cg n_tr", 2 * n_w * cg["trace"], c["trace"]))
        if has_grad:
            rows.append(AuditRow("u*, p*", "N_w", n_w if probes else 0, c["adjoint"]))
    else:
        mr = ev.map_result
        rows.append(AuditRow("MAP Hessian", "2 N_w n_cg n_newt", 2 * n_w * sum(mr.cg_iterations), c["map_hessian"]))
        rows.append(AuditRow("MAP state/adjoint", "N_w (n_J + n_grad)",
                             n_w * (mr.n_state_evals + mr.n_adjoint_evals), c["map_state"]))
        rows.append(AuditRow("trace", "2 N_w n_cg n_tr", 2 * n_w * cg["trace"], c["trace"]))
        if has_grad:
            rows.append(AuditRow("m*", "2 N_w n_cg", 2 * n_w * cg["mstar"], c["mstar"]))
            per_block = 2 if ev.kind == LAPLACE_MAP else 1
            rows.append(AuditRow("u*, p* (rhs)", f"{per_block} N_w", per_block * n_w if probes else 0,
                                 c["adjoint_rhs"]))
    rows.append(AuditRow("total", "sum of rows", sum(r.expected for r in rows), ev.counter.total))
    return rows


def format_audit(rows):
    lines = [f"{'phase':<20} {'formula':<22} {'expected':>10} {'measured':>10}  status"]
    for r in rows:
        lines.append(f"{r.phase:<20} {r.table_formula:<22} {r.expected:>10} {r.measured:>10}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
