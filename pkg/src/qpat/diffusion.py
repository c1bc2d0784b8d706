"""P1 finite elements for the diffusion equation

    -div(D grad u) + sigma u = f   in (0,2)^2,     u = g on the boundary,

on the shared triangulation of the uniform grid.  The stiffness term is
integrated exactly (gradients are constant per triangle, D sampled at the
barycenter as the vertex average).  The absorption term and all body loads
use the diagonal (lumped) mass, which makes the discrete solution an exactly
rational function of sigma: the sigma-derivative and adjoint solves below are
then the exact derivatives of this discrete forward map, and the solve is
exactly self-adjoint in the lumped inner product.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import (UniformGrid, TriMesh, build_trimesh, triangle_areas,
                   lumped_mass, boundary_values)


def _validate_coefficients(diffusion, absorption):
    if not np.all(np.isfinite(diffusion)) or np.any(diffusion <= 0.0):
        raise ValueError("diffusion coefficient must be finite and positive")
    if not np.all(np.isfinite(absorption)) or np.any(absorption < 0.0):
        raise ValueError("absorption coefficient must be finite and >= 0")


def assemble_system(grid: UniformGrid, mesh: TriMesh, diffusion, absorption):
    """Assemble the symmetric sparse operator for given coefficients.

    Returns the full (N, N) CSR matrix including boundary rows.  Transposed
    entries are bitwise equal: local blocks are symmetric by construction and
    duplicates are accumulated in the same (stable) order on both sides of
    the diagonal.
    """
    tris = mesh.triangles
    pts = mesh.nodes[tris]                      # (M, 3, 2)
    area = triangle_areas(mesh)
    x = pts[:, :, 0]
    y = pts[:, :, 1]
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], 1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], 1)
    grads = np.stack([gx, gy], axis=2) / (2.0 * area)[:, None, None]

    d_bar = np.asarray(diffusion).ravel()[tris].mean(axis=1)
    local = (d_bar * area)[:, None, None] * np.einsum(
        "mik,mjk->mij", grads, grads)

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    vals = local.ravel()

    # deterministic duplicate summation: stable sort by (row, col), then
    # left-to-right segment sums, so A[i, j] and A[j, i] add the same
    # numbers in the same order
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    first = np.ones(len(rows), dtype=bool)
    first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    starts = np.flatnonzero(first)
    summed = np.add.reduceat(vals, starts)

    num = grid.n * grid.n
    a = sp.csr_matrix((summed, (rows[starts], cols[starts])), shape=(num, num))

    mass = lumped_mass(grid).ravel() * np.asarray(absorption).ravel()
    return a + sp.diags(mass)


class FemSystem:
    """Assembled and factorized diffusion system for one coefficient pair.

    The sparse direct factorization is computed once and reused for every
    boundary datum, body source and adjoint solve at these coefficients.
    """

    def __init__(self, grid: UniformGrid, diffusion, absorption,
                 mesh: TriMesh = None):
        diffusion = np.broadcast_to(np.asarray(diffusion, float),
                                    (grid.n, grid.n))
        absorption = np.broadcast_to(np.asarray(absorption, float),
                                     (grid.n, grid.n))
        _validate_coefficients(diffusion, absorption)
        if mesh is None:
            mesh = build_trimesh(grid)
        self.grid = grid
        self.mesh = mesh
        self.diffusion = diffusion
        self.absorption = absorption
        self.mass = lumped_mass(grid)

        matrix = assemble_system(grid, mesh, diffusion, absorption)
        interior = np.flatnonzero(grid.interior_mask.ravel())
        self.interior = interior
        self.matrix = matrix
        csr = matrix.tocsr()
        self._coupling = csr[interior][:, grid.boundary_indices]
        self._lu = spla.splu(csr[interior][:, interior].tocsc())

    def solve(self, source=None, boundary=None) -> np.ndarray:
        """Solve for nodal u given a body source and/or boundary values.

        Parameters
        ----------
        source : (n, n) array or None
            Body source f; enters through the lumped load m * f.
        boundary : (4*(n-1),) array or None
            Dirichlet values in counterclockwise boundary order (None = 0).

        Returns
        -------
        (n, n) array with the boundary values written back in.
        """
        g = self.grid
        rhs = np.zeros(len(self.interior))
        if source is not None:
            load = (self.mass * source).ravel()
            rhs += load[self.interior]
        if boundary is not None:
            boundary = np.asarray(boundary, float)
            rhs -= self._coupling @ boundary
        u_int = self._lu.solve(rhs)
        if not np.all(np.isfinite(u_int)):
            raise RuntimeError("diffusion solve produced non-finite values")
        out = np.zeros(g.n * g.n)
        out[self.interior] = u_int
        if boundary is not None:
            out[g.boundary_indices] = boundary
        return out.reshape(g.n, g.n)

    def solve_raw(self, load) -> np.ndarray:
        """Solve with ``load`` taken directly as the interior right-hand
        side vector (no mass weighting) and zero boundary values.

        This is the plain matrix inverse applied to a nodal vector; adjoint
        computations need it because transposing the lumped load m * f
        leaves the mass on the other side of the pairing.
        """
        rhs = np.asarray(load, float).ravel()[self.interior]
        u_int = self._lu.solve(rhs)
        if not np.all(np.isfinite(u_int)):
            raise RuntimeError("diffusion solve produced non-finite values")
        g = self.grid
        out = np.zeros(g.n * g.n)
        out[self.interior] = u_int
        return out.reshape(g.n, g.n)


def solve_diffusion(diffusion, absorption, boundary, grid: UniformGrid,
                    mesh: TriMesh = None) -> np.ndarray:
    """One-shot solve of the homogeneous-source Dirichlet problem."""
    return FemSystem(grid, diffusion, absorption, mesh).solve(
        boundary=boundary)


def solve_diffusion_sourced(diffusion, absorption, source, boundary,
                            grid: UniformGrid, mesh: TriMesh = None):
    """One-shot solve with a body source and Dirichlet values."""
    return FemSystem(grid, diffusion, absorption, mesh).solve(
        source=source, boundary=boundary)


def solve_perturbation(system: FemSystem, absorption_pert,
                       photon_density) -> np.ndarray:
    """Derivative of the photon density with respect to the absorption.

    Solves the same system with zero boundary values and source
    ``-absorption_pert * photon_density``; this is the exact derivative of
    the discrete map sigma -> u at the system's coefficients.
    """
    return system.solve(source=-(absorption_pert * photon_density))
