"""Structured triangulation of the unit square and nodal Lagrange spaces on it."""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Mesh:
    """Unit square split into ``n x n`` cells, each cut into a lower-left and an upper-right triangle.

    Vertices are numbered row-major, ``index = j * (n + 1) + i`` for the point ``(i/n, j/n)``.
    Triangles are listed cell by cell (row-major), lower-left first, all counter-clockwise.
    """

    n_cells_per_side: int
    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def n(self):
        return self.n_cells_per_side

    @property
    def h(self):
        return 1.0 / self.n_cells_per_side

    def signed_areas(self):
        p0, p1, p2 = (self.vertices[self.triangles[:, k]] for k in range(3))
        d1, d2 = p1 - p0, p2 - p0
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_mesh(n):
    n = int(n)
    if n < 1:
        raise ValueError(f"need at least one cell per side, got n={n}")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)  # row-major in y
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v01])
    upper = np.column_stack([v11, v01, v10])
    triangles = np.empty((2 * n * n, 3), dtype=np.intp)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return Mesh(n, vertices, triangles)


@dataclass(frozen=True, eq=False)
class FemSpace:
    """Continuous P1 or P2 Lagrange space.

    P2 nodes of the structured mesh are exactly the points of the ``(2n+1)^2`` half-step grid,
    numbered row-major on that grid.  Local P2 ordering is the three vertices followed by the
    midpoints of the edges opposite vertex 0, 1, 2.
    """

    mesh: Mesh
    degree: int
    dof_coords: np.ndarray
    cell_dofs: np.ndarray
    tag: str = field(default="")

    @property
    def dim(self):
        return self.dof_coords.shape[0]

    def same_mesh(self, other):
        return self.mesh is other.mesh


def function_space(mesh, degree):
    n = mesh.n
    if degree == 1:
        return FemSpace(mesh, 1, mesh.vertices.copy(), mesh.triangles.copy(), "P1")
    if degree != 2:
        raise ValueError(f"only degree 1 or 2 supported, got {degree}")
    m = 2 * n + 1
    xs = np.linspace(0.0, 1.0, m)
    X, Y = np.meshgrid(xs, xs)
    coords = np.column_stack([X.ravel(), Y.ravel()])
    # vertex (i, j) sits at half-grid point (2i, 2j)
    vi = mesh.triangles % (n + 1)
    vj = mesh.triangles // (n + 1)
    I, J = 2 * vi, 2 * vj
    mid_I = np.column_stack([(I[:, 1] + I[:, 2]) // 2, (I[:, 2] + I[:, 0]) // 2, (I[:, 0] + I[:, 1]) // 2])
    mid_J = np.column_stack([(J[:, 1] + J[:, 2]) // 2, (J[:, 2] + J[:, 0]) // 2, (J[:, 0] + J[:, 1]) // 2])
    dofs = np.hstack([J * m + I, mid_J * m + mid_I]).astype(np.intp)
    return FemSpace(mesh, 2, coords, np.ascontiguousarray(dofs), "P2")
