"""Encoded Helmholtz forward model: ``-Laplace u - kappa^2 m u = f`` with homogeneous Neumann BCs."""
from dataclasses import dataclass, field
import csv
import math

import numpy as np
import scipy.sparse as sp

from .counters import SolveCounter
from .fem import (
    Factorization,
    SingularMatrixError,
    Trilinear,
    assemble_mass,
    assemble_stiffness,
    build_mesh,
    evaluation_matrix,
    function_space,
    mollified_source_vector,
)


def default_receivers(q=20):
    # 20 receivers evenly spread along the top, as in the two-source and ten-source setups
    return np.column_stack([0.15 + 0.03895 * np.arange(q), np.full(q, 0.95)])


def two_source_positions():
    return np.array([[0.08, 0.20], [0.37, 0.06]])


def ten_source_positions():
    left = np.column_stack([np.full(6, 0.08), 0.50 - 0.072 * np.arange(6)])
    bottom = np.column_stack([0.15 + 0.077 * np.arange(4), np.full(4, 0.06)])
    return np.vstack([left, bottom])


@dataclass
class Geometry:
    sources: np.ndarray
    receivers: np.ndarray
    eps_source: float = 1e-6
    source_model: str = "point"  # or "mollifier"

    def __post_init__(self):
        self.sources = np.atleast_2d(np.asarray(self.sources, dtype=float))
        self.receivers = np.atleast_2d(np.asarray(self.receivers, dtype=float))
        for name, pts in (("sources", self.sources), ("receivers", self.receivers)):
            if pts.shape[0] < 1 or pts.shape[1] != 2:
                raise ValueError(f"{name} must be a non-empty (k, 2) array, got {pts.shape}")
            if np.any((pts < 0) | (pts > 1)):
                raise ValueError(f"{name} must lie in the unit square")
        if self.source_model not in ("point", "mollifier"):
            raise ValueError(f"unknown source model {self.source_model!r}")

    @property
    def n_sources(self):
        return self.sources.shape[0]

    @property
    def n_receivers(self):
        return self.receivers.shape[0]


class HelmholtzModel:
    """Spaces, operators, per-source loads ``F`` (columns) and the observation matrix ``B``."""

    def __init__(self, n, kappa, geometry):
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        self.kappa = float(kappa)
        self.geometry = geometry
        self.mesh = build_mesh(n)
        self.param_space = function_space(self.mesh, 1)
        self.state_space = function_space(self.mesh, 2)
        self.K = assemble_stiffness(self.state_space).tocsr()
        self.M_state = assemble_mass(self.state_space).tocsr()
        self.tri = Trilinear(self.param_space, self.state_space)
        if geometry.source_model == "point":
            F = evaluation_matrix(self.state_space, geometry.sources).toarray().T
        else:
            F = np.column_stack([mollified_source_vector(self.state_space, s, geometry.eps_source)
                                 for s in geometry.sources])
        self.F = np.ascontiguousarray(F)
        self.B = evaluation_matrix(self.state_space, geometry.receivers).tocsr()
        self.BtB = (self.B.T @ self.B).tocsr()

    @property
    def n_sources(self):
        return self.geometry.n_sources

    @property
    def n_state(self):
        return self.state_space.dim

    @property
    def n_param(self):
        return self.param_space.dim

    def operator(self, m):
        """``A(m) = K - kappa^2 W(m)``; symmetric, indefinite for large kappa."""
        return (self.K - self.kappa ** 2 * self.tri.matrix(m)).tocsc()

    def factorize(self, m, counter=None):
        return HelmholtzSolver(self.operator(m), counter)

    def encode_rhs(self, w_block):
        w_block = np.asarray(w_block, dtype=float)
        if w_block.shape[-1] != self.n_sources:
            raise ValueError(f"weight block length {w_block.shape[-1]} != number of sources {self.n_sources}")
        return w_block @ self.F.T

    def forward_solve(self, m, rhs, counter=None):
        return self.factorize(m, counter).solve(rhs)

    def observe(self, u):
        return self.B @ u

    def interpolate(self, func):
        x = self.param_space.dof_coords
        return np.asarray(func(x[:, 0], x[:, 1]), dtype=float)


class HelmholtzSolver:
    """Factorized ``A(m)``; every right-hand side solved is charged to ``counter``."""

    def __init__(self, A, counter=None):
        try:
            self._fact = Factorization(A)
        except SingularMatrixError as exc:
            raise SingularMatrixError(exc.pivot_index,
                                      f"Helmholtz operator is singular at this medium: {exc}") from None
        self.A = A
        self.counter = counter if counter is not None else SolveCounter()

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.ndim == 1:
            self.counter.add(1)
            return self._fact.solve(rhs)
        # rows are independent right-hand sides
        self.counter.add(rhs.shape[0])
        return np.ascontiguousarray(self._fact.solve(rhs.T).T)


@dataclass
class ObservationData:
    """Per-source observations ``D[i, j]`` (source ``i``, receiver ``j``); noise covariance ``sigma^2 I``."""

    D: np.ndarray
    sigma: float = 1.0
    noise_pct: float = 0.0
    seed: object = None
    noiseless: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if not np.all(np.isfinite(self.D)):
            raise ValueError("observation data contain non-finite entries")

    @property
    def n_sources(self):
        return self.D.shape[0]

    def encode(self, w_block):
        return encode_data(self, w_block)

    def to_csv(self, path, receivers):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"{x:.17g}:{y:.17g}" for x, y in np.asarray(receivers, dtype=float)])
            for row in self.D:
                writer.writerow([f"{v:.17g}" for v in row])
        with open(str(path) + ".meta", "w") as fh:
            seed = None if self.seed is None else int(self.seed)
            fh.write(f"sigma = {float(self.sigma)!r}\nnoise_pct = {float(self.noise_pct)!r}\nseed = {seed!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        receivers = np.array([[float(t) for t in h.split(":")] for h in rows[0]])
        D = np.array([[float(v) for v in r] for r in rows[1:]])
        meta = {}
        try:
            with open(str(path) + ".meta") as fh:
                for line in fh:
                    if "=" in line:
                        k, v = line.split("=", 1)
                        meta[k.strip()] = v.strip()
        except FileNotFoundError:
            pass
        seed = meta.get("seed", "None")
        return cls(D, sigma=float(meta.get("sigma", 1.0)), noise_pct=float(meta.get("noise_pct", 0.0)),
                   seed=None if seed == "None" else int(seed)), receivers


def encode_rhs(model, w_block):
    return model.encode_rhs(w_block)


def encode_data(data, w_block):
    w_block = np.asarray(w_block, dtype=float)
    if w_block.shape[-1] != data.n_sources:
        raise ValueError(f"weight block length {w_block.shape[-1]} != number of sources {data.n_sources}")
    return w_block @ data.D


def forward_solve(model, m, rhs, counter=None):
    return model.forward_solve(m, rhs, counter)


def generate_synthetic_data(model, m_true, noise_pct, seed, sigma=1.0, counter=None):
    """Observations of every single source at ``m_true`` plus Gaussian noise.

    The noise standard deviation of source ``i`` is ``noise_pct * max_j |(B u_i)_j|``.
    """
    if noise_pct < 0:
        raise ValueError("noise_pct must be nonnegative")
    solver = model.factorize(m_true, counter)
    U = solver.solve(model.F.T)
    clean = np.asarray((model.B @ U.T).T)
    rng = np.random.default_rng(seed)
    scale = noise_pct * np.max(np.abs(clean), axis=1, keepdims=True)
    D = clean + scale * rng.standard_normal(clean.shape)
    return ObservationData(D, sigma=sigma, noise_pct=noise_pct, seed=seed, noiseless=clean)


def bump(x, y, center, radius, amplitude):
    """Smooth compactly supported bump with peak ``amplitude`` at ``center``."""
    r2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2) / radius ** 2
    out = np.zeros_like(np.asarray(x, dtype=float))
    inside = r2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


MEDIA = {
    "medium1": [((0.55, 0.55), 0.2, 0.3)],
    "medium2": [((0.35, 0.60), 0.2, 0.3), ((0.70, 0.40), 0.2, -0.3)],
}
MEDIA["medium10src"] = MEDIA["medium2"]


def medium(model, name="medium1", background=1.0, bumps=None):
    """P1 coefficients of a constant background plus smooth bumps ``(center, radius, amplitude)``."""
    spec = MEDIA[name] if bumps is None else bumps

    def f(x, y):
        out = np.full_like(x, background, dtype=float)
        for center, radius, amp in spec:
            out += bump(x, y, center, radius, amp)
        return out

    return model.interpolate(f)


TWO_PI = 2.0 * math.pi
