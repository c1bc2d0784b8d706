"""Shared oracle helpers for the test suite.

The random fields are low-mode Fourier sums keyed by an explicit seed, so
they represent the same continuum function on every grid; refinement
studies rely on that.  The taper makes fields vanish identically near the
boundary where schemes apply projections.
"""

import numpy as np


def smooth_ramp(t):
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def interior_taper(grid, margin=0.35):
    x, y = grid.coords()
    d = np.minimum(np.minimum(x, 2 - x), np.minimum(y, 2 - y))
    return smooth_ramp(d / margin)


def fourier_field(grid, seed, n_modes=3, amplitude=1.0):
    """Smooth random field, identical as a function on any grid."""
    rng = np.random.Generator(np.random.Philox(seed))
    x, y = grid.coords()
    f = np.zeros_like(x)
    for kx in range(1, n_modes + 1):
        for ky in range(1, n_modes + 1):
            a, b, c, d = rng.standard_normal(4)
            f += (a * np.sin(np.pi * kx * x / 2) * np.sin(np.pi * ky * y / 2)
                  + b * np.sin(np.pi * kx * x / 2) * np.cos(np.pi * ky * y / 2)
                  + c * np.cos(np.pi * kx * x / 2) * np.sin(np.pi * ky * y / 2)
                  + d * np.cos(np.pi * kx * x / 2) * np.cos(np.pi * ky * y / 2))
    return amplitude * f / (n_modes * n_modes)


def fourier_series_time_boundary(grid, tg, seed, n_modes=3, amplitude=1.0):
    """Smooth random boundary time series y(t, s); same function on any
    grid, parameterized by arclength along the counterclockwise walk."""
    rng = np.random.Generator(np.random.Philox(seed))
    t = tg.times()[:, None]
    m = grid.n - 1
    s = np.concatenate([np.arange(m) * grid.h + side * 2.0
                        for side in range(4)])[None, :]
    y = np.zeros((tg.n_steps + 1, 4 * m))
    for kt in range(1, n_modes + 1):
        for ks in range(1, n_modes + 1):
            a, b, c, d = rng.standard_normal(4)
            wt = np.pi * kt / tg.final_time
            ws = 2 * np.pi * ks / 8.0
            y += (a * np.sin(wt * t) * np.sin(ws * s)
                  + b * np.sin(wt * t) * np.cos(ws * s)
                  + c * np.cos(wt * t) * np.sin(ws * s)
                  + d * np.cos(wt * t) * np.cos(ws * s))
    return amplitude * y / (n_modes * n_modes)


def boundary_normal_series_oracle(history, grid):
    """Hand-written one-sided normal derivative of a wave history.

    Independent of the sparse extraction operator: walks the four sides
    explicitly with the 3-point inward stencil (3, -4, 1) / (2h) and
    averages the two one-sided values at each corner.
    """
    h = grid.h
    n = grid.n
    m = n - 1
    levels = history.shape[0]
    out = np.zeros((levels, 4 * m))
    for level in range(levels):
        p = history[level]
        bottom = (3.0 * p[0, :] - 4.0 * p[1, :] + p[2, :]) / (2.0 * h)
        top = (3.0 * p[-1, :] - 4.0 * p[-2, :] + p[-3, :]) / (2.0 * h)
        left = (3.0 * p[:, 0] - 4.0 * p[:, 1] + p[:, 2]) / (2.0 * h)
        right = (3.0 * p[:, -1] - 4.0 * p[:, -2] + p[:, -3]) / (2.0 * h)
        out[level, 1:m] = bottom[1:m]
        out[level, m + 1:2 * m] = right[1:m]
        out[level, 2 * m + 1:3 * m] = top[m - 1:0:-1]
        out[level, 3 * m + 1:4 * m] = left[m - 1:0:-1]
        out[level, 0] = 0.5 * (bottom[0] + left[0])
        out[level, m] = 0.5 * (bottom[m] + right[0])
        out[level, 2 * m] = 0.5 * (right[m] + top[m])
        out[level, 3 * m] = 0.5 * (top[0] + left[m])
    return out


def dense_fem_matrix(grid, diffusion, absorption):
    """Dense loop-assembled P1 system: exact stiffness with the diffusion
    coefficient averaged over each triangle's vertices, plus the lumped
    absorption mass.  Deliberately written triangle by triangle with the
    classic (b, c) edge-coefficient formula, independent of the vectorized
    assembly under test."""
    n = grid.n
    num = n * n
    diffusion = np.broadcast_to(np.asarray(diffusion, float), (n, n)).ravel()
    absorption = np.broadcast_to(np.asarray(absorption, float),
                                 (n, n)).ravel()
    xs = grid.xs
    out = np.zeros((num, num))

    def node(iy, ix):
        return iy * n + ix

    for iy in range(n - 1):
        for ix in range(n - 1):
            a = node(iy, ix)
            b = node(iy, ix + 1)
            c = node(iy + 1, ix + 1)
            d = node(iy + 1, ix)
            for tri in ((a, b, c), (a, c, d)):
                px = [xs[t % n] for t in tri]
                py = [xs[t // n] for t in tri]
                area = 0.5 * abs((px[1] - px[0]) * (py[2] - py[0])
                                 - (px[2] - px[0]) * (py[1] - py[0]))
                bb = [py[1] - py[2], py[2] - py[0], py[0] - py[1]]
                cc = [px[2] - px[1], px[0] - px[2], px[1] - px[0]]
                dbar = sum(diffusion[t] for t in tri) / 3.0
                for i in range(3):
                    for j in range(3):
                        out[tri[i], tri[j]] += dbar * (
                            bb[i] * bb[j] + cc[i] * cc[j]) / (4.0 * area)
                for i in range(3):
                    out[tri[i], tri[i]] += absorption[tri[i]] * area / 3.0
    return out


def dense_dirichlet_solve(grid, matrix, source_load, boundary):
    """Dense Dirichlet solve with explicit elimination; ``source_load`` is
    the already mass-weighted interior load vector (length n*n)."""
    n = grid.n
    interior = np.flatnonzero(grid.interior_mask.ravel())
    full = np.zeros(n * n)
    if boundary is not None:
        full[grid.boundary_indices] = boundary
    rhs = source_load[interior] - matrix[np.ix_(
        interior, np.arange(n * n))] @ full
    u_int = np.linalg.solve(matrix[np.ix_(interior, interior)], rhs)
    full[interior] = u_int
    return full.reshape(n, n)


def scalar_leapfrog(c, grid, tg, initial, source=None, boundary=None):
    """Plain-python leapfrog reimplementation, one node at a time.

    Follows the documented scheme: half-weighted first step, interior
    update p_tt = c^2 (lap p + f), edges held at the previous level when no
    boundary callable is given, otherwise rewritten from the callable each
    level.  Returns the full history (nt+1, n, n).
    """
    n, h, dt = grid.n, grid.h, tg.dt
    c = np.broadcast_to(np.asarray(c, float), (n, n))
    hist = np.zeros((tg.n_steps + 1, n, n))
    hist[0] = initial

    def rhs(p, level):
        out = np.zeros((n, n))
        for iy in range(1, n - 1):
            for ix in range(1, n - 1):
                lap = (p[iy - 1, ix] + p[iy + 1, ix] + p[iy, ix - 1]
                       + p[iy, ix + 1] - 4.0 * p[iy, ix]) / (h * h)
                if source is not None:
                    lap += source(level)[iy, ix]
                out[iy, ix] = c[iy, ix] ** 2 * lap
        return out

    def put_boundary(p, level):
        if boundary is None:
            return
        m = n - 1
        v = boundary(level)
        for k in range(m):
            p[0, k] = v[k]
            p[k, n - 1] = v[m + k]
            p[n - 1, n - 1 - k] = v[2 * m + k]
            p[n - 1 - k, 0] = v[3 * m + k]

    hist[1] = hist[0] + 0.5 * dt * dt * rhs(hist[0], 0)
    for iy in range(n):                     # startup keeps level-0 edges
        hist[1][iy, 0] = hist[0][iy, 0]
        hist[1][iy, -1] = hist[0][iy, -1]
    hist[1][0, :] = hist[0][0, :]
    hist[1][-1, :] = hist[0][-1, :]
    put_boundary(hist[1], 1)
    for level in range(1, tg.n_steps):
        nxt = (2.0 * hist[level] - hist[level - 1]
               + dt * dt * rhs(hist[level], level))
        nxt[0, :] = hist[level][0, :]
        nxt[-1, :] = hist[level][-1, :]
        nxt[:, 0] = hist[level][:, 0]
        nxt[:, -1] = hist[level][:, -1]
        if boundary is not None:
            nxt[0, :] = 0.0
            nxt[-1, :] = 0.0
            nxt[:, 0] = 0.0
            nxt[:, -1] = 0.0
            put_boundary(nxt, level + 1)
        hist[level + 1] = nxt
    return hist
