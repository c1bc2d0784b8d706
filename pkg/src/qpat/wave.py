"""Leapfrog finite differences for the wave equation

    (1/c^2) p_tt - Lap p = f   on (0, T) x (0,2)^2

with Dirichlet boundary values, a 5-point Laplacian and the
exact-for-quadratics startup step

    p^1 = p^0 + (dt^2 / 2) c^2 (Lap p^0 + f^0).

Histories are kept in memory as (nt+1, n, n) arrays; a configurable budget
guards against configurations that would not fit.
"""

from dataclasses import dataclass

import numpy as np

from .grid import UniformGrid, normal_derivative

CFL_NUMBER = 0.5
HISTORY_BUDGET_BYTES = 2 * 1024 ** 3


class UnstableSolveError(RuntimeError):
    """Raised when a wave solve produces non-finite values."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time levels 0..n_steps on [0, final_time]."""

    final_time: float
    n_steps: int

    def __post_init__(self):
        if not (self.final_time > 0.0 and np.isfinite(self.final_time)):
            raise ValueError("final_time must be positive and finite")
        if self.n_steps < 2:
            raise ValueError("need at least 2 time steps")

    @property
    def dt(self):
        return self.final_time / self.n_steps

    def times(self):
        return np.linspace(0.0, self.final_time, self.n_steps + 1)


def build_time_grid(final_time, h, max_speed, cfl=CFL_NUMBER) -> TimeGrid:
    """Smallest step count whose uniform dt satisfies dt <= cfl * h / max_speed."""
    if max_speed <= 0.0:
        raise ValueError("max_speed must be positive")
    n_steps = int(np.ceil(final_time * max_speed / (cfl * h) - 1e-12))
    return TimeGrid(final_time=final_time, n_steps=max(n_steps, 2))


def check_cfl(tg: TimeGrid, h, max_speed, cfl=CFL_NUMBER):
    limit = cfl * h / max_speed
    if tg.dt > limit * (1.0 + 1e-12):
        raise ValueError(
            f"time step {tg.dt:.3e} violates the stability bound "
            f"{limit:.3e} (cfl {cfl}, h {h:.3e}, max speed {max_speed:.3g})")


def _check_speed(c, grid):
    c = np.broadcast_to(np.asarray(c, float), (grid.n, grid.n))
    if not np.all(np.isfinite(c)) or np.any(c <= 0.0):
        raise ValueError("sound speed must be finite and positive")
    return c


def _guard_history(grid, tg, budget):
    need = (tg.n_steps + 1) * grid.n * grid.n * 8
    if need > budget:
        raise MemoryError(
            f"wave history needs {need / 1e9:.2f} GB, over the "
            f"{budget / 1e9:.2f} GB budget; reduce T or the grid")


def apply_boundary(field: np.ndarray, grid: UniformGrid, values) -> None:
    """Write a counterclockwise boundary vector onto the four edges."""
    n = grid.n
    m = n - 1
    field[0, 0:m] = values[0:m]
    field[0:m, n - 1] = values[m:2 * m]
    field[n - 1, n - 1:0:-1] = values[2 * m:3 * m]
    field[n - 1:0:-1, 0] = values[3 * m:4 * m]


def leapfrog(c, grid: UniformGrid, tg: TimeGrid, initial,
             source=None, boundary=None, store_history=True,
             record_boundary=True, history_budget=None):
    """Run the leapfrog scheme; the engine behind every wave solve here.

    Parameters
    ----------
    c : scalar or (n, n) array
        Sound speed; dt must satisfy the stability bound for max(c).
    initial : (n, n) array
        Pressure at time 0, used as given (including its boundary values).
    source : None, (nt+1, n, n) array, or callable level -> (n, n)
        Right-hand side f in the (1/c^2) p_tt - Lap p = f convention.
    boundary : None or callable level -> (4*(n-1),)
        Dirichlet values per time level (None keeps the edges fixed at the
        initial field's edge values; forward solves pass a zeroed initial).

    Returns
    -------
    history : (nt+1, n, n) array or None
    series : (nt+1, 4*(n-1)) array or None
        Outward normal derivative per stored level, if requested.
    """
    c = _check_speed(c, grid)
    check_cfl(tg, grid.h, float(c.max()))
    n, h, dt = grid.n, grid.h, tg.dt
    nt = tg.n_steps
    if store_history:
        _guard_history(grid, tg, history_budget or HISTORY_BUDGET_BYTES)

    if callable(source):
        get_source = source
    elif source is not None:
        src_arr = source
        get_source = lambda level: src_arr[level]
    else:
        get_source = None

    c2 = (c * c)[1:-1, 1:-1]
    scale = dt * dt
    inv_h2 = 1.0 / (h * h)

    prev = np.array(initial, dtype=float)
    history = None
    if store_history:
        history = np.empty((nt + 1, n, n))
        history[0] = prev
    series = None
    if record_boundary:
        series = np.empty((nt + 1, 4 * (n - 1)))
        series[0] = normal_derivative(prev, grid)

    def interior_rhs(p, level):
        lap = (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
               - 4.0 * p[1:-1, 1:-1]) * inv_h2
        if get_source is not None:
            lap = lap + get_source(level)[1:-1, 1:-1]
        return c2 * lap

    def next_buffer(level):
        if store_history:
            return history[level]
        return np.empty_like(prev)

    cur = next_buffer(1)
    cur[:] = prev
    cur[1:-1, 1:-1] += 0.5 * scale * interior_rhs(prev, 0)
    if boundary is not None:
        apply_boundary(cur, grid, boundary(1))
    if record_boundary:
        series[1] = normal_derivative(cur, grid)

    spare = None if store_history else np.empty_like(prev)
    for level in range(1, nt):
        nxt = history[level + 1] if store_history else spare
        nxt[1:-1, 1:-1] = (2.0 * cur[1:-1, 1:-1] - prev[1:-1, 1:-1]
                           + scale * interior_rhs(cur, level))
        if boundary is not None:
            nxt[0, :] = 0.0
            nxt[-1, :] = 0.0
            nxt[:, 0] = 0.0
            nxt[:, -1] = 0.0
            apply_boundary(nxt, grid, boundary(level + 1))
        else:
            nxt[0, :] = cur[0, :]
            nxt[-1, :] = cur[-1, :]
            nxt[:, 0] = cur[:, 0]
            nxt[:, -1] = cur[:, -1]
        if not store_history:
            spare = prev
        prev, cur = cur, nxt
        if record_boundary:
            series[level + 1] = normal_derivative(cur, grid)

    if not (np.all(np.isfinite(cur)) and np.all(np.isfinite(prev))):
        raise UnstableSolveError(
            "wave solve produced non-finite values; check the stability "
            "bound and the source amplitude")
    return history, series


def solve_wave(c, initial_pressure, grid: UniformGrid, tg: TimeGrid,
               store_history=True, record_boundary=True):
    """Forward solve from an initial pressure, zero initial rate, p = 0 on
    the boundary.  The initial field's boundary nodes are zeroed to match
    the boundary condition."""
    p0 = initial_pressure.copy()
    p0[0, :] = 0.0
    p0[-1, :] = 0.0
    p0[:, 0] = 0.0
    p0[:, -1] = 0.0
    return leapfrog(c, grid, tg, p0, store_history=store_history,
                    record_boundary=record_boundary)


def solve_wave_sourced(c, source, initial_pressure, grid: UniformGrid,
                       tg: TimeGrid, store_history=True,
                       record_boundary=True):
    """Forward solve with a body source; otherwise as ``solve_wave``."""
    p0 = initial_pressure.copy()
    p0[0, :] = 0.0
    p0[-1, :] = 0.0
    p0[:, 0] = 0.0
    p0[:, -1] = 0.0
    return leapfrog(c, grid, tg, p0, source=source,
                    store_history=store_history,
                    record_boundary=record_boundary)


def interior_laplacian(field: np.ndarray, h: float) -> np.ndarray:
    """5-point Laplacian at interior nodes; boundary entries come out zero."""
    out = np.zeros_like(field)
    out[1:-1, 1:-1] = (field[:-2, 1:-1] + field[2:, 1:-1] + field[1:-1, :-2]
                       + field[1:-1, 2:] - 4.0 * field[1:-1, 1:-1]) / (h * h)
    return out


def second_time_derivative(history: np.ndarray, tg: TimeGrid) -> np.ndarray:
    """Second time derivative of a stored history, level by level.

    Central differences inside, one-sided second-order stencils at the two
    end levels; exact for histories quadratic in time.
    """
    dt2 = tg.dt * tg.dt
    nt = history.shape[0] - 1
    out = np.empty_like(history)
    out[1:-1] = (history[2:] - 2.0 * history[1:-1] + history[:-2]) / dt2
    if nt >= 3:
        out[0] = (2.0 * history[0] - 5.0 * history[1] + 4.0 * history[2]
                  - history[3]) / dt2
        out[-1] = (2.0 * history[-1] - 5.0 * history[-2] + 4.0 * history[-3]
                   - history[-4]) / dt2
    else:
        out[0] = out[1]
        out[-1] = out[1]
    return out
