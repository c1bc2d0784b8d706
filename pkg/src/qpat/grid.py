"""Uniform node grid on the square [0, 2] x [0, 2] and its triangulation.

Nodal fields are plain (n, n) float arrays indexed [iy, ix], so that
``field[iy, ix]`` sits at ``(x, y) = (ix * h, iy * h)``.  Flat node ids are
``iy * n + ix``; the triangle mesh shares these ids node-for-node.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class UniformGrid:
    """Regular grid with an odd number of nodes per side.

    Attributes
    ----------
    n : int
        Nodes per side, odd and >= 9 (a node sits at the center (1, 1)).
    h : float
        Node spacing, 2 / (n - 1).
    xs : ndarray, shape (n,)
        Node coordinates along one axis; endpoints are exactly 0 and 2.
    boundary_indices : ndarray, shape (4 * (n - 1),)
        Flat ids of the boundary nodes, counterclockwise from (0, 0).
    interior_mask : ndarray, shape (n, n), bool
        True at strictly interior nodes.
    """

    n: int
    h: float
    xs: np.ndarray
    boundary_indices: np.ndarray
    interior_mask: np.ndarray

    @property
    def n_boundary(self):
        return 4 * (self.n - 1)

    def coords(self):
        """Return (x, y) coordinate arrays of shape (n, n)."""
        return np.meshgrid(self.xs, self.xs, indexing="xy")

    @cached_property
    def extraction(self):
        """Sparse outward-normal-derivative operator, built once per grid.

        Every consumer of boundary flux data applies this one matrix, so
        transposing it gives the exact adjoint of the extraction step.
        """
        return normal_derivative_matrix(self)

    @cached_property
    def extraction_transpose(self):
        return self.extraction.T.tocsr()


def build_grid(n_per_side: int) -> UniformGrid:
    """Build the uniform grid with ``n_per_side`` nodes per side.

    Parameters
    ----------
    n_per_side : int
        Odd number of nodes per side, at least 9.
    """
    n = int(n_per_side)
    if n < 9 or n % 2 == 0:
        raise ValueError(f"n_per_side must be odd and >= 9, got {n_per_side}")
    h = 2.0 / (n - 1)
    xs = np.linspace(0.0, 2.0, n)

    # counterclockwise boundary walk starting at (0, 0); each side owns its
    # starting corner, so every boundary node appears exactly once
    k = np.arange(n - 1)
    bottom = 0 * n + k            # (ix = 0..n-2, iy = 0)
    right = k * n + (n - 1)       # (ix = n-1, iy = 0..n-2)
    top = (n - 1) * n + (n - 1 - k)   # (ix = n-1..1, iy = n-1)
    left = (n - 1 - k) * n + 0    # (ix = 0, iy = n-1..1)
    boundary = np.concatenate([bottom, right, top, left])

    mask = np.zeros((n, n), dtype=bool)
    mask[1:-1, 1:-1] = True

    xs.setflags(write=False)
    boundary.setflags(write=False)
    mask.setflags(write=False)
    return UniformGrid(n=n, h=h, xs=xs, boundary_indices=boundary,
                       interior_mask=mask)


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangulation of the grid: every cell split along its lower-left to
    upper-right diagonal.  Node ids coincide with flat grid ids."""

    nodes: np.ndarray      # (N, 2) coordinates
    triangles: np.ndarray  # (M, 3) node ids, counterclockwise


def build_trimesh(grid: UniformGrid) -> TriMesh:
    """Triangulate ``grid`` into 2 * (n - 1)^2 congruent right triangles."""
    n = grid.n
    x, y = grid.coords()
    nodes = np.column_stack([x.ravel(), y.ravel()])

    ix, iy = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="xy")
    a = (iy * n + ix).ravel()     # lower left
    b = a + 1                     # lower right
    c = a + n + 1                 # upper right
    d = a + n                     # upper left
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    tris = np.empty((2 * len(a), 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper

    nodes.setflags(write=False)
    tris.setflags(write=False)
    return TriMesh(nodes=nodes, triangles=tris)


def triangle_areas(mesh: TriMesh) -> np.ndarray:
    """Signed areas; positive for counterclockwise orientation."""
    p = mesh.nodes[mesh.triangles]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def lumped_mass(grid: UniformGrid) -> np.ndarray:
    """Diagonal (lumped) mass of the P1 triangulation as an (n, n) array.

    Node weight = sum of adjacent triangle areas / 3.  Used for every
    discrete L2 inner product between nodal fields.
    """
    mesh = build_trimesh(grid)
    areas = triangle_areas(mesh)
    m = np.zeros(grid.n * grid.n)
    np.add.at(m, mesh.triangles.ravel(), np.repeat(areas / 3.0, 3))
    m = m.reshape(grid.n, grid.n)
    m.setflags(write=False)
    return m


def field_dot(a, b, mass) -> float:
    """Lumped-mass L2 inner product of nodal fields (any matching shape)."""
    return float(np.sum(mass * a * b))


def field_norm(a, mass) -> float:
    return float(np.sqrt(np.sum(mass * a * a)))


def boundary_values(field: np.ndarray, grid: UniformGrid) -> np.ndarray:
    """Extract field values on the boundary in counterclockwise order."""
    return field.ravel()[grid.boundary_indices]


def set_boundary(field: np.ndarray, grid: UniformGrid, values) -> None:
    """Write a counterclockwise boundary vector onto the field, in place."""
    field.ravel()[grid.boundary_indices] = values


def zero_boundary(field: np.ndarray) -> np.ndarray:
    """Return a copy of ``field`` with all boundary nodes set to zero."""
    out = field.copy()
    out[0, :] = 0.0
    out[-1, :] = 0.0
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


def normal_derivative_matrix(grid: UniformGrid):
    """Assemble the sparse outward-normal-derivative operator.

    Each row holds the one-sided 3-point stencil along the inward grid line
    at one boundary node (second order, exact for fields quadratic along the
    normal); corner rows average the stencils of their two sides.  Rows
    follow the counterclockwise boundary ordering.
    """
    n, h = grid.n, grid.h
    m = n - 1
    # derivative along the inward direction, negated to point outward
    stencil = np.array([3.0, -4.0, 1.0]) / (2.0 * h)

    inward = {
        "bottom": lambda idx: [(0, idx), (1, idx), (2, idx)],
        "top": lambda idx: [(n - 1, idx), (n - 2, idx), (n - 3, idx)],
        "left": lambda idx: [(idx, 0), (idx, 1), (idx, 2)],
        "right": lambda idx: [(idx, n - 1), (idx, n - 2), (idx, n - 3)],
    }

    rows, cols, vals = [], [], []

    def add(row, side, idx, weight):
        for (iy, ix), v in zip(inward[side](idx), stencil * weight):
            rows.append(row)
            cols.append(iy * n + ix)
            vals.append(v)

    for k in range(1, m):
        add(k, "bottom", k, 1.0)            # ix = k, iy = 0
        add(m + k, "right", k, 1.0)         # iy = k
        add(2 * m + k, "top", n - 1 - k, 1.0)
        add(3 * m + k, "left", n - 1 - k, 1.0)
    add(0, "bottom", 0, 0.5)
    add(0, "left", 0, 0.5)
    add(m, "bottom", n - 1, 0.5)
    add(m, "right", 0, 0.5)
    add(2 * m, "right", n - 1, 0.5)
    add(2 * m, "top", n - 1, 0.5)
    add(3 * m, "top", 0, 0.5)
    add(3 * m, "left", n - 1, 0.5)

    mat = sp.csr_matrix((vals, (rows, cols)), shape=(4 * m, n * n))
    mat.sum_duplicates()
    return mat


def normal_derivative(p: np.ndarray, grid: UniformGrid) -> np.ndarray:
    """Outward normal derivative of a nodal field on the boundary.

    Applies the grid's cached extraction operator; see
    ``normal_derivative_matrix`` for the stencil.

    Returns
    -------
    ndarray, shape (4 * (n - 1),)
        Values in the counterclockwise boundary ordering.
    """
    return grid.extraction @ p.ravel()
