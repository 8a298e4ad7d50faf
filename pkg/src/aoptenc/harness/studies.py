"""The reproduction studies, gradient checks and counter audit, each writing CSV tables."""
import logging
import os
import time

import numpy as np

from ..aopt import (
    GN_MAP,
    GN_REF,
    LAPLACE_MAP,
    audit_counters,
    eval_phi,
    optimize_weights,
    phi_gradient,
    phi_kind,
    renormalize,
    sample_weights,
)
from ..counters import SolveCounter
from ..fem import NegativeCurvatureError
from ..mapsolver import (
    FULL,
    GAUSS_NEWTON,
    apply_hessian,
    compute_state,
    eval_J,
    grad_J,
    solve_map,
    whitened_hessian,
)
from .config import ConfigError
from .experiment import build_experiment, build_model, build_prior_from, map_options, save_data
from .output import StudyOutput, base_meta
from .seeds import rng_for, seed_summary, task_seed

log = logging.getLogger(__name__)

SOLVER_ERRORS = (np.linalg.LinAlgError, NegativeCurvatureError)


def sweep_grid(n_points):
    if n_points < 2:
        raise ConfigError("study.grid_size must be at least 2")
    w1 = np.linspace(-1.0, 1.0, n_points)
    w2 = np.sqrt(np.clip(1.0 - w1 * w1, 0.0, None))
    return w1, np.stack([w1, w2], axis=1)[:, None, :]


def relative_misfit(prior, m, m_ref):
    """Relative L2 error ``||m - m_ref|| / ||m_ref||`` in the mass-matrix norm."""
    d = m - m_ref
    return float(np.sqrt(d @ prior.M @ d) / np.sqrt(m_ref @ prior.M @ m_ref))


def exact_trace(problem, st, kind, counter):
    """Dense ``tr(H^{-1} M)`` and whether ``H`` was positive definite; indefinite Hessians still
    give a finite value, which the caller flags."""
    with counter.phase("exact_trace"):
        wh = whitened_hessian(problem, st, kind)
    return wh.trace(allow_indefinite=True), wh.positive_definite, wh


def best_map(problem, w, m_warm, opts, counter):
    """MAP from a cold start at ``m0`` and, when given, a warm start at ``m_warm``; the lower ``J``
    wins.  Both runs share the cold run's gradient reference, so they stop on the same test."""
    cold = solve_map(problem, w, counter=counter, **opts)
    if m_warm is None:
        return cold
    try:
        warm = solve_map(problem, w, m_init=m_warm, counter=counter, grad_scale=cold.grad_scale, **opts)
    except SOLVER_ERRORS as exc:
        log.info("warm start failed: %s", exc)
        return cold
    return warm if warm.state.J < cold.state.J else cold


def sweep_maps(problem, weights, opts, counter):
    """MAP points along the sweep, each warm-started from its left neighbour as well as cold."""
    out, m_prev = [], None
    for w in weights:
        res = best_map(problem, w, m_prev, opts, counter)
        out.append(res)
        m_prev = res.m
    return out


def _start(config, out_dir, command):
    os.makedirs(out_dir, exist_ok=True)
    out = StudyOutput(out_dir)
    out.meta = base_meta(config, seed_summary(config), command)
    return out, SolveCounter(), time.perf_counter()


def _two_source_model(config):
    model = build_model(config, "two_source")
    if model.n_sources != 2:
        raise ConfigError(f"this study needs exactly 2 sources, the geometry has {model.n_sources}")
    return model


def _medium_list(config):
    media = config["study.media"]
    bad = [m for m in media if m not in ("medium1", "medium2", "medium10src")]
    if bad or not media:
        raise ConfigError(f"study.media must list known media, got {media}")
    return media


def _sweep_table(config, exp, w1, weights, counter, gnlin):
    problem = exp.problem
    maps = sweep_maps(problem, weights, map_options(config), counter)
    rows, unconverged, indefinite = [], [], []
    for j, res in enumerate(maps):
        full, pd_full, _ = exact_trace(problem, res.state, FULL, counter)
        gn, _, _ = exact_trace(problem, res.state, GAUSS_NEWTON, counter)
        rows.append([w1[j], full, gn, gnlin[j]])
        if not res.converged:
            unconverged.append(j)
        if not pd_full:
            indefinite.append(j)
    return maps, rows, unconverged, indefinite


def _gn_fixed(problem, weights, m, counter):
    """Gauss-Newton traces at a fixed medium ``m`` for every weight on the grid."""
    out = []
    for w in weights:
        with counter.phase("state"):
            st = compute_state(problem, w, m, counter, adjoint=False, use_data=False)
        out.append(exact_trace(problem, st, GAUSS_NEWTON, counter)[0])
    return out


def run_sweep1d(config, out_dir):
    """Full, Gauss-Newton and fixed-linearization traces along a one-parameter weight path."""
    out, counter, t0 = _start(config, out_dir, "sweep1d")
    model = _two_source_model(config)
    prior = build_prior_from(config, model)
    w1, weights = sweep_grid(config["study.grid_size"])
    gnlin = None
    for name in _medium_list(config):
        exp = build_experiment(config, name, model=model, prior=prior, counter=counter)
        save_data(exp, out_dir)
        if gnlin is None:
            gnlin = _gn_fixed(exp.problem, weights, prior.m0, counter)
        _, rows, unconverged, indefinite = _sweep_table(config, exp, w1, weights, counter, gnlin)
        flagged = sorted(set(unconverged) | set(indefinite))
        out.add_table(f"sweep1d_{name}.csv", ["w1", "phi_full", "phi_gn", "phi_gnlin"], rows, flagged,
                      {"medium": name, "unconverged_rows": unconverged, "indefinite_full_rows": indefinite})
    return out.finalize(counter, time.perf_counter() - t0)


def run_gn_robustness(config, out_dir):
    """Fixed-point Gauss-Newton traces along the sweep, linearized between m0 and a reference MAP."""
    out, counter, t0 = _start(config, out_dir, "gn-robustness")
    model = _two_source_model(config)
    prior = build_prior_from(config, model)
    w1, weights = sweep_grid(config["study.grid_size"])
    for name in _medium_list(config):
        exp = build_experiment(config, name, model=model, prior=prior, counter=counter)
        save_data(exp, out_dir)
        with counter.phase("reference"):
            ref = solve_map(exp.problem, np.eye(model.n_sources), counter=counter, **map_options(config))
        rows, flagged = [], []
        for s in config["study.s_values"]:
            m_s = (1.0 - s) * prior.m0 + s * ref.m
            try:
                vals = _gn_fixed(exp.problem, weights, m_s, counter)
            except SOLVER_ERRORS as exc:
                log.warning("GN sweep at s = %g failed: %s", s, exc)
                vals = [np.nan] * len(w1)
            for j, v in enumerate(vals):
                if not np.isfinite(v):
                    flagged.append(len(rows))
                rows.append([s, w1[j], v])
        out.add_table(f"gn_robustness_{name}.csv", ["s", "w1", "phi_gn_fixed"], rows, flagged,
                      {"medium": name, "reference_converged": ref.converged,
                       "reference_newton_iterations": ref.n_newton})
    return out.finalize(counter, time.perf_counter() - t0)


def run_trace_effect(config, out_dir):
    """Exact Laplace trace along the sweep against estimates with one fixed probe set per ``n_tr``.

    The estimator is evaluated with exact Hessian solves, so its columns isolate the sampling
    error from CG error.
    """
    out, counter, t0 = _start(config, out_dir, "trace-effect")
    model = _two_source_model(config)
    prior = build_prior_from(config, model)
    w1, weights = sweep_grid(config["study.grid_size"])
    n_tr_list = config["study.n_tr_list"]
    if any(k < 1 for k in n_tr_list):
        raise ConfigError("study.n_tr_list entries must be positive")
    probes = {k: prior.sample_trace_vectors(k, rng_for(config, "trace", k)) for k in n_tr_list}
    header = ["w1", "exact"] + [f"est_{k}" for k in n_tr_list]
    for name in _medium_list(config):
        exp = build_experiment(config, name, model=model, prior=prior, counter=counter)
        save_data(exp, out_dir)
        maps = sweep_maps(exp.problem, weights, map_options(config), counter)
        rows, flagged = [], []
        for j, res in enumerate(maps):
            exact, pd, wh = exact_trace(exp.problem, res.state, FULL, counter)
            row = [w1[j], exact]
            for k in n_tr_list:
                b = probes[k] @ prior.M
                y = wh.solve(b, allow_indefinite=True)
                row.append(float(np.mean(np.sum(y * b, axis=1))))
            rows.append(row)
            if not (res.converged and pd):
                flagged.append(j)
        out.add_table(f"trace_effect_{name}.csv", header, rows, flagged,
                      {"medium": name, **{f"seed.trace_n{k}": task_seed(config, "trace", k) for k in n_tr_list}})
    return out.finalize(counter, time.perf_counter() - t0)


def _ten_source_setup(config, counter):
    exp = build_experiment(config, preset="ten_source", counter=counter)
    with counter.phase("reference"):
        ref = solve_map(exp.problem, np.eye(exp.model.n_sources), counter=counter, **map_options(config))
    if not ref.converged:
        log.warning("reference reconstruction did not converge: %s", ref.message)
    return exp, ref


def _optimizer_options(config):
    return {
        "lam": config["aopt.lambda"],
        "max_iters": config["aopt.max_iters"],
        "tol": config["aopt.tol"],
        "memory": config["aopt.memory"],
        "map_opts": map_options(config),
        "cg_tol": config["trace.cg_tol"],
        "grad_cg_tol": config["aopt.grad_cg_tol"],
    }


def _laplace_at(config, problem, w, Z, ref, counter):
    """``(phi_L, rel_misfit, converged)`` at weights ``w`` with a fixed probe set."""
    ev = eval_phi(problem, LAPLACE_MAP, w, Z, lam=config["aopt.lambda"], map_opts=map_options(config),
                  cg_tol=config["trace.cg_tol"], counter=counter)
    return ev.trace_part, relative_misfit(problem.prior, ev.m, ref.m), ev.converged


def run_random_vs_optimal(config, out_dir):
    """Random spherical weights against optimizer restarts: Phi_L and reconstruction misfit."""
    out, counter, t0 = _start(config, out_dir, "random-vs-optimal")
    exp, ref = _ten_source_setup(config, counter)
    problem, prior = exp.problem, exp.prior
    save_data(exp, out_dir)
    n_s = exp.model.n_sources
    Z = prior.sample_trace_vectors(config["aopt.n_tr"], rng_for(config, "trace", 0))
    opts = _optimizer_options(config)
    kinds = [phi_kind(k) for k in config["study.kinds"]]
    if any(k == GN_REF for k in kinds):
        raise ConfigError("study.kinds takes gn_map and laplace_map")
    label = {GN_MAP: "aopt_gn", LAPLACE_MAP: "aopt_laplace"}
    rows, flagged, excluded = [], [], 0
    for n_w in config["study.n_w_list"]:
        for j in range(config["study.sample_count"]):
            seed = task_seed(config, "weights", n_w, j)
            w = sample_weights(config["aopt.distribution"], n_w, n_s, seed)
            try:
                phi, mis, ok = _laplace_at(config, problem, w, Z, ref, counter)
            except SOLVER_ERRORS as exc:
                log.warning("random sample %d (N_w = %d) failed: %s", j, n_w, exc)
                excluded += 1
                continue
            if not ok:
                flagged.append(len(rows))
            rows.append(["random", n_w, phi, mis, seed])
        for kind in kinds:
            for r in range(config["study.n_restarts"]):
                seed = task_seed(config, "init", n_w, r)
                w0 = sample_weights(config["aopt.distribution"], n_w, n_s, seed)
                try:
                    res = optimize_weights(problem, kind, w0, Z, counter=counter, **opts)
                    w = renormalize(res.w) if config["aopt.renormalize"] else res.w
                    phi, mis, ok = _laplace_at(config, problem, w, Z, ref, counter)
                except SOLVER_ERRORS as exc:
                    log.warning("%s restart %d (N_w = %d) failed: %s", kind, r, n_w, exc)
                    excluded += 1
                    continue
                if not (ok and res.converged):
                    flagged.append(len(rows))
                rows.append([label[kind], n_w, phi, mis, seed])
    out.add_table("random_vs_optimal.csv", ["method", "N_w", "phi_L", "rel_misfit", "seed"], rows, flagged,
                  {"medium": exp.medium_name, "excluded_rows": excluded, "n_tr": config["aopt.n_tr"],
                   "seed.trace_probes": task_seed(config, "trace", 0),
                   "reference_converged": ref.converged})
    return out.finalize(counter, time.perf_counter() - t0)


def run_variability(config, out_dir):
    """Optimized weights for independent probe sets and initial guesses, per ``n_tr``.

    ``phi_L_final`` is the exact Laplace trace at the (renormalized) optimized weights, so the
    spread reflects the optimization outcome, not the noise of the final estimate.
    """
    out, counter, t0 = _start(config, out_dir, "variability")
    exp, ref = _ten_source_setup(config, counter)
    problem, prior = exp.problem, exp.prior
    save_data(exp, out_dir)
    n_s, n_w = exp.model.n_sources, config["aopt.n_w"]
    kind = phi_kind(config["aopt.kind"])
    opts = _optimizer_options(config)
    rows, flagged, excluded = [], [], 0
    for n_tr in config["study.variability_n_tr"]:
        if n_tr < 1:
            raise ConfigError("study.variability_n_tr entries must be positive")
        for rep in range(config["study.repeats"]):
            trace_seed = task_seed(config, "trace", n_tr, rep)
            init_seed = task_seed(config, "init", n_tr, rep)
            Z = prior.sample_trace_vectors(n_tr, np.random.default_rng(trace_seed))
            w0 = sample_weights(config["aopt.distribution"], n_w, n_s, init_seed)
            try:
                res = optimize_weights(problem, kind, w0, Z, counter=counter, **opts)
                w = renormalize(res.w) if config["aopt.renormalize"] else res.w
                mres = solve_map(problem, w, counter=counter, **map_options(config))
                phi, pd, _ = exact_trace(problem, mres.state, FULL, counter)
            except SOLVER_ERRORS as exc:
                log.warning("repeat %d at n_tr = %d failed: %s", rep, n_tr, exc)
                excluded += 1
                continue
            if not (res.converged and mres.converged and pd):
                flagged.append(len(rows))
            rows.append([n_tr, rep, phi, relative_misfit(prior, mres.m, ref.m), trace_seed, init_seed])
    out.add_table("variability.csv", ["n_tr", "repeat_index", "phi_L_final", "rel_misfit", "trace_seed",
                                      "init_seed"], rows, flagged,
                  {"medium": exp.medium_name, "kind": kind, "excluded_rows": excluded,
                   "reference_converged": ref.converged})
    return out.finalize(counter, time.perf_counter() - t0)


# ---------------------------------------------------------------------------------------------
# checks

H_SCAN = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


def _check_experiment(config, counter=None):
    """The small, well-conditioned setup of the gradient checks and the counter audit."""
    n = config["check.mesh_n"]
    if n > 8:
        raise ConfigError(f"check.mesh_n must be at most 8, got {n}")
    cfg = config.with_overrides(**{"mesh.n": n, "helmholtz.kappa": config["check.kappa"],
                                   "geometry.source_subset": config["check.source_subset"],
                                   "geometry.sources": None, "data.path": None})
    return cfg, build_experiment(cfg, preset="ten_source", counter=counter)


def _rel(fd, an):
    scale = max(abs(an), abs(fd))
    return abs(fd - an) / scale if scale > 0 else 0.0


def _scan(f, an):
    """FD error for every ``h`` of the scan and the best one."""
    errs = [(h, (f(h) - f(-h)) / (2 * h)) for h in H_SCAN]
    scan = [(h, fd, _rel(fd, an)) for h, fd in errs]
    return scan, min(scan, key=lambda t: t[2])


def _tangent(w, d):
    return d - np.sum(d * w, axis=1, keepdims=True) * w / np.sum(w * w, axis=1, keepdims=True)


def run_gradcheck(config, out_dir):
    """Inner and outer gradients against central differences over a step-size scan."""
    out, counter, t0 = _start(config, out_dir, "gradcheck")
    cfg, exp = _check_experiment(config)
    problem, prior = exp.problem, exp.prior
    n_s = exp.model.n_sources
    n_w = config["check.n_w"]
    corrupt = 1.01 if config["check.corrupt"] else 1.0
    rng = rng_for(config, "check", 0)
    rows, lines, failed = [], [], False
    header = ["check", "kind", "point", "direction", "h", "analytic", "fd", "rel_error", "best"]

    def record(check, kind, p, k, an, scan, best, tol):
        nonlocal failed
        for h, fd, err in scan:
            rows.append([check, kind, p, k, h, an, fd, err, int(h == best[0])])
        ok = best[2] <= tol
        failed |= not ok
        lines.append(f"{check:<10} {kind:<12} pt {p} dir {k}  best h {best[0]:.0e}  rel err {best[2]:.2e}  "
                     f"{'PASS' if ok else 'FAIL'}")

    # inner gradient at random (w, m)
    for p in range(config["check.n_points"]):
        w = sample_weights("uniform", n_w, n_s, rng)
        m = exp.m_true + 0.05 * rng.standard_normal(prior.dim)
        st = compute_state(problem, w, m, counter)
        g = corrupt * grad_J(problem, st)
        for k in range(config["check.n_directions"]):
            d = rng.standard_normal(prior.dim)
            an = float(g @ d)
            scan, best = _scan(lambda h: eval_J(problem, w, m + h * d, counter), an)
            record("inner", "J", p, k, an, scan, best, config["check.inner_tol"])

    # Hessian symmetry at random (w, m)
    for p in range(config["check.n_points"]):
        w = sample_weights("uniform", n_w, n_s, rng)
        m = exp.m_true + 0.05 * rng.standard_normal(prior.dim)
        st = compute_state(problem, w, m, counter)
        for kind in (FULL, GAUSS_NEWTON):
            for k in range(config["check.n_directions"]):
                x, y = rng.standard_normal((2, prior.dim))
                xhy = float(x @ apply_hessian(problem, st, y, kind))
                yhx = float(y @ apply_hessian(problem, st, x, kind)) * corrupt
                err = _rel(xhy, yhx)
                ok = err <= config["check.sym_tol"]
                failed |= not ok
                rows.append(["symmetry", kind, p, k, 0.0, xhy, yhx, err, 1])
                lines.append(f"{'symmetry':<10} {kind:<12} pt {p} dir {k}  rel defect {err:.2e}  "
                             f"{'PASS' if ok else 'FAIL'}")

    # outer gradient on tangent directions
    Z = prior.sample_trace_vectors(config["check.n_tr"], rng)
    w = sample_weights("uniform", n_w, n_s, rng)
    tight = dict(map_options(cfg), tol=1e-12, max_iter=max(cfg["map.max_iter"], 3000))
    base = solve_map(problem, w, counter=counter, **tight)
    lam = config["aopt.lambda"]

    def phi(kind, x):
        mr = None
        if kind != GN_REF:
            mr = solve_map(problem, x, m_init=base.m, counter=counter, **tight)
        return eval_phi(problem, kind, x, Z, lam=lam, map_result=mr, cg_tol=1e-12, counter=counter)

    for kind in [phi_kind(k) for k in config["check.kinds"]]:
        ev = phi(kind, w)
        g = corrupt * phi_gradient(problem, ev, cg_tol=1e-12)
        for k in range(config["check.n_directions"]):
            d = _tangent(w, rng.standard_normal(w.shape))
            an = float(np.sum(g * d))
            scan, best = _scan(lambda h: phi(kind, w + h * d).value, an)
            record("outer", kind, 0, k, an, scan, best, config["check.outer_tol"])

    out.add_table("gradcheck.csv", header, rows, [], {
        "kappa": cfg["helmholtz.kappa"], "mesh_n": cfg["mesh.n"], "n_w": n_w, "n_tr": config["check.n_tr"],
        "corrupted": config["check.corrupt"], "passed": not failed})
    out.failed = failed
    out.report = "\n".join(lines + [f"gradcheck: {'FAIL' if failed else 'PASS'}"])
    return out.finalize(counter, time.perf_counter() - t0)


def run_counter_audit(config, out_dir):
    """Measured forward solves of one evaluation plus gradient against the cost formulas.

    Runs once per criterion, plus a probe-free ``gn_ref`` run for the degenerate case.
    """
    out, counter, t0 = _start(config, out_dir, "counter-audit")
    cfg, exp = _check_experiment(config)
    problem, prior = exp.problem, exp.prior
    rng = rng_for(config, "check", 1)
    w = sample_weights("uniform", config["check.n_w"], exp.model.n_sources, rng)
    n_tr = config["check.n_tr"]
    Z = prior.sample_trace_vectors(n_tr, rng)
    runs = [(kind, Z) for kind in (GN_REF, GN_MAP, LAPLACE_MAP)] + [(GN_REF, Z[:0]), (LAPLACE_MAP, Z[:0])]
    rows, lines, failed = [], [], False
    for kind, probes in runs:
        c = SolveCounter()
        ev = eval_phi(problem, kind, w, probes, lam=config["aopt.lambda"], map_opts=map_options(cfg),
                      cg_tol=cfg["trace.cg_tol"], counter=c)
        phi_gradient(problem, ev, cg_tol=cfg["aopt.grad_cg_tol"])
        counter.merge(c)
        for r in audit_counters(ev):
            failed |= not r.passed
            rows.append([kind, probes.shape[0], r.phase, r.table_formula, r.expected, r.measured,
                         "PASS" if r.passed else "FAIL"])
            lines.append(f"{kind:<12} n_tr={probes.shape[0]:<3} {r.phase:<20} {r.table_formula:<22} "
                         f"{r.expected:>8} {r.measured:>8}  {'PASS' if r.passed else 'FAIL'}")
    out.add_table("counter_audit.csv", ["kind", "n_tr", "phase", "formula", "expected", "measured", "status"],
                  rows, [i for i, r in enumerate(rows) if r[-1] == "FAIL"], {"passed": not failed})
    out.failed = failed
    out.report = "\n".join(lines + [f"counter-audit: {'FAIL' if failed else 'PASS'}"])
    return out.finalize(counter, time.perf_counter() - t0)


# ---------------------------------------------------------------------------------------------
# single runs

def run_forward(config, out_dir):
    """Synthetic observations of every source at the target medium."""
    out, counter, t0 = _start(config, out_dir, "forward")
    exp = build_experiment(config, counter=counter)
    data = exp.problem.data
    save_data(exp, out_dir, "data.csv")
    rec = exp.model.geometry.receivers
    clean = data.noiseless if data.noiseless is not None else np.full_like(data.D, np.nan)
    rows = [[i, j, rec[j, 0], rec[j, 1], clean[i, j], data.D[i, j]]
            for i in range(data.D.shape[0]) for j in range(data.D.shape[1])]
    out.add_table("observations.csv", ["source", "receiver", "x", "y", "noiseless", "observed"], rows, [],
                  {"medium": exp.medium_name})
    return out.finalize(counter, time.perf_counter() - t0)


def run_map(config, out_dir):
    """MAP reconstruction for identity weights (every source on its own) or random encodings."""
    out, counter, t0 = _start(config, out_dir, "map")
    exp = build_experiment(config, counter=counter)
    n_s = exp.model.n_sources
    if config["map.weights"] == "identity":
        w = np.eye(n_s)
    else:
        w = sample_weights(config["aopt.distribution"], config["aopt.n_w"], n_s,
                           rng_for(config, "weights", 0))
    res = solve_map(exp.problem, w, counter=counter, **map_options(config))
    x = exp.model.param_space.dof_coords
    rows = [[x[i, 0], x[i, 1], res.m[i], exp.m_true[i], exp.prior.m0[i]] for i in range(exp.prior.dim)]
    out.add_table("map.csv", ["x", "y", "m_map", "m_true", "m0"], rows, [], {
        "medium": exp.medium_name, "converged": res.converged, "stationary": res.stationary,
        "newton_iterations": res.n_newton, "J": res.state.J, "grad_norm": res.grad_norm,
        "rel_grad": res.rel_grad, "message": res.message or "converged",
        "rel_misfit_true": relative_misfit(exp.prior, res.m, exp.m_true),
        "weights": list(np.asarray(w).ravel())})
    save_data(exp, out_dir, "data.csv")
    out.failed = not res.converged
    out.report = (f"MAP {'converged' if res.converged else 'not converged'} after {res.n_newton} Newton "
                  f"iterations, J = {res.state.J:.6g}, relative gradient {res.rel_grad:.2e}")
    return out.finalize(counter, time.perf_counter() - t0)


STUDIES = {
    "sweep1d": run_sweep1d,
    "gn-robustness": run_gn_robustness,
    "trace-effect": run_trace_effect,
    "random-vs-optimal": run_random_vs_optimal,
    "variability": run_variability,
    "gradcheck": run_gradcheck,
    "counter-audit": run_counter_audit,
    "forward": run_forward,
    "map": run_map,
}
