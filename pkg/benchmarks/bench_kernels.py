"""Compiled vs numpy trilinear kernels, plus one Hessian action on each backend.

    python benchmarks/bench_kernels.py [--sizes 8 16 32] [--repeat 20]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from aoptenc import _kernels_py
from aoptenc.fem import Trilinear, build_mesh, function_space

try:
    from aoptenc import _kernels as _compiled
except ImportError:
    _compiled = None

HESSIAN_SNIPPET = """
import sys, timeit, numpy as np
from aoptenc import KERNEL_BACKEND
from aoptenc.helmholtz import Geometry, HelmholtzModel, default_receivers, ten_source_positions, medium, generate_synthetic_data
from aoptenc.mapsolver import InverseProblem, compute_state, apply_hessian
from aoptenc.prior import PriorSpec, build_prior
n, rep = int(sys.argv[1]), int(sys.argv[2])
model = HelmholtzModel(n, 5.5, Geometry(ten_source_positions(), default_receivers()))
prior = build_prior(PriorSpec(), model.param_space)
data = generate_synthetic_data(model, medium(model, "medium2"), 0.02, 0)
problem = InverseProblem(model, data, prior)
w = np.random.default_rng(0).standard_normal((3, 10))
st = compute_state(problem, w, prior.m0 + 0.01)
d = np.random.default_rng(1).standard_normal(prior.dim)
t = min(timeit.repeat(lambda: apply_hessian(problem, st, d), number=1, repeat=rep))
print(KERNEL_BACKEND, t)
"""


def _time(f, repeat):
    return min(timeit.repeat(f, number=1, repeat=repeat))


def kernel_rows(sizes, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        mesh = build_mesh(n)
        tri = Trilinear(function_space(mesh, 1), function_space(mesh, 2))
        c, u, v = rng.standard_normal(tri.n_param), rng.standard_normal(tri.n_state), rng.standard_normal(tri.n_state)
        a_args = (tri.T, tri.scale, tri.sdofs, tri.pdofs, c, u, tri.n_state)
        p_args = (tri.T, tri.scale, tri.sdofs, tri.pdofs, u, v, tri.n_param)
        for name, a, fn in (("apply", a_args, "trilinear_apply"), ("project", p_args, "trilinear_project")):
            t_py = _time(lambda: getattr(_kernels_py, fn)(*a), repeat)
            t_cy = _time(lambda: getattr(_compiled, fn)(*a), repeat) if _compiled else float("nan")
            if _compiled:
                err = np.abs(getattr(_compiled, fn)(*a) - getattr(_kernels_py, fn)(*a)).max()
            else:
                err = float("nan")
            rows.append((n, name, t_py, t_cy, err))
    return rows


def hessian_time(n, repeat, pure):
    env = dict(os.environ)
    env["AOPTENC_PURE_PYTHON"] = "1" if pure else "0"
    out = subprocess.run([sys.executable, "-c", HESSIAN_SNIPPET, str(n), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    backend, t = out.stdout.split()
    return backend, float(t)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{'n':>4} {'kernel':<8} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for n, name, t_py, t_cy, err in kernel_rows(args.sizes, args.repeat):
        print(f"{n:>4} {name:<8} {1e3 * t_py:>11.3f} {1e3 * t_cy:>12.3f} {t_py / t_cy:>8.1f} {err:>10.1e}")
    print("\nHessian action (N_s = 10, N_w = 3), including 6 Helmholtz solves")
    for n in args.sizes:
        times = {}
        for pure in (True, False):
            backend, t = hessian_time(n, max(3, args.repeat // 4), pure)
            times[backend] = t
        line = "  ".join(f"{b} {1e3 * t:.2f} ms" for b, t in sorted(times.items()))
        print(f"{n:>4}  {line}")


if __name__ == "__main__":
    main()
