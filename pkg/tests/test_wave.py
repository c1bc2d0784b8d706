"""Leapfrog wave solver tests.

The standing-mode test uses the scheme's own dispersion relation: for a
Laplacian eigenmode the discrete solution is exactly cos(m*theta) times the
initial field, with cos(theta) = 1 - (c dt)^2 lambda_h / 2, so the solver
can be checked to roundoff, not just to discretization order.
"""

import numpy as np
import pytest

from qpat.grid import build_grid, lumped_mass, field_norm
from qpat.wave import (CFL_NUMBER, TimeGrid, UnstableSolveError,
                       apply_boundary, build_time_grid, check_cfl,
                       interior_laplacian, leapfrog, second_time_derivative,
                       solve_wave, solve_wave_sourced)

from helpers import scalar_leapfrog, fourier_field, interior_taper


def standing_mode(grid):
    x, y = grid.coords()
    return np.sin(0.5 * np.pi * x) * np.sin(0.5 * np.pi * y)


def mode_eigenvalue(h):
    # 5-point Laplacian eigenvalue of the (1,1) sine mode
    return 8.0 / (h * h) * np.sin(np.pi * h / 4.0) ** 2


def test_time_grid_obeys_cfl_minimally():
    tg = build_time_grid(4.0, 2.0 / 128.0, 1.3)
    limit = CFL_NUMBER * (2.0 / 128.0) / 1.3
    assert tg.dt <= limit * (1 + 1e-12)
    coarser = TimeGrid(4.0, tg.n_steps - 1)
    assert coarser.dt > limit


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1)
    with pytest.raises(ValueError):
        build_time_grid(1.0, 0.1, 0.0)
    with pytest.raises(ValueError):
        check_cfl(TimeGrid(1.0, 4), 0.1, 1.0)   # dt = 0.25 > 0.05


def test_speed_validation():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    with pytest.raises(ValueError):
        solve_wave(-1.0, standing_mode(grid), grid, tg)
    with pytest.raises(ValueError):
        solve_wave(np.nan, standing_mode(grid), grid, tg)


def test_apply_boundary_full_ring():
    grid = build_grid(9)
    field = np.full((9, 9), -1.0)
    apply_boundary(field, grid, np.arange(grid.n_boundary, dtype=float))
    ring = np.concatenate([field[0, :], field[-1, :], field[:, 0],
                           field[:, -1]])
    assert (ring >= 0).all()          # every ring node written
    assert (field[1:-1, 1:-1] == -1.0).all()


def test_matches_scalar_reimplementation():
    grid = build_grid(9)
    tg = TimeGrid(0.5, 8)
    rng = np.random.Generator(np.random.Philox(17))
    c = 0.9 + 0.2 * rng.random((9, 9))
    check_cfl(tg, grid.h, float(c.max()))
    initial = fourier_field(grid, seed=5)
    src = rng.standard_normal((tg.n_steps + 1, 9, 9))
    bnd = rng.standard_normal((tg.n_steps + 1, grid.n_boundary))

    hist, _ = leapfrog(c, grid, tg, initial,
                       source=lambda level: src[level],
                       boundary=lambda level: bnd[level])
    want = scalar_leapfrog(c, grid, tg, initial,
                           source=lambda level: src[level],
                           boundary=lambda level: bnd[level])
    assert np.max(np.abs(hist - want)) < 1e-12

    # and without any boundary callable (edges held)
    hist2, _ = leapfrog(c, grid, tg, initial,
                        source=lambda level: src[level])
    want2 = scalar_leapfrog(c, grid, tg, initial,
                            source=lambda level: src[level])
    assert np.max(np.abs(hist2 - want2)) < 1e-12


def test_standing_mode_exact_discrete_law():
    grid = build_grid(33)
    tg = build_time_grid(4.0, grid.h, 1.0)
    p0 = standing_mode(grid)
    hist, _ = solve_wave(1.0, p0, grid, tg)
    theta = np.arccos(1.0 - 0.5 * tg.dt ** 2 * mode_eigenvalue(grid.h))
    levels = np.arange(tg.n_steps + 1)
    want = np.cos(levels * theta)[:, None, None] * p0[None]
    assert np.max(np.abs(hist - want)) < 1e-9


def test_standing_mode_convergence_order():
    errors = []
    for n in (17, 33, 65):
        grid = build_grid(n)
        tg = build_time_grid(1.0, grid.h, 1.0)
        p0 = standing_mode(grid)
        hist, _ = solve_wave(1.0, p0, grid, tg)
        omega = np.pi / np.sqrt(2.0)
        exact = (np.cos(omega * tg.times())[:, None, None] * p0[None])
        mass = lumped_mass(grid)
        level_sq = [field_norm(hist[m] - exact[m], mass) ** 2
                    for m in range(tg.n_steps + 1)]
        errors.append(np.sqrt(tg.dt * np.sum(level_sq)))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert (orders > 1.8).all(), (errors, orders)


def leapfrog_energy(hist, c, grid, tg):
    """The quadratic invariant the scheme conserves exactly."""
    h2 = grid.h * grid.h
    c2 = np.broadcast_to(np.asarray(c, float) ** 2, hist[0].shape)
    out = []
    for m in range(hist.shape[0] - 1):
        rate = (hist[m + 1] - hist[m]) / tg.dt
        kinetic = 0.5 * np.sum(rate * rate / c2) * h2
        lap = interior_laplacian(hist[m], grid.h)
        potential = -0.5 * np.sum(hist[m + 1] * lap) * h2
        out.append(kinetic + potential)
    return np.array(out)


def test_energy_conserved_to_roundoff():
    grid = build_grid(33)
    tg = build_time_grid(4.0, grid.h, 1.0)
    p0 = fourier_field(grid, seed=2) * interior_taper(grid)
    hist, _ = solve_wave(1.0, p0, grid, tg)
    energy = leapfrog_energy(hist, 1.0, grid, tg)
    drift = np.max(np.abs(energy - energy[0])) / abs(energy[0])
    assert drift < 1e-10


def test_linearity():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.1)
    c = 1.0 + 0.1 * standing_mode(grid)
    a = fourier_field(grid, seed=1)
    b = fourier_field(grid, seed=2)
    ha, sa = solve_wave(c, a, grid, tg)
    hb, sb = solve_wave(c, b, grid, tg)
    hab, sab = solve_wave(c, 2.0 * a - 3.0 * b, grid, tg)
    assert np.max(np.abs(hab - 2 * ha + 3 * hb)) < 1e-12
    assert np.max(np.abs(sab - 2 * sa + 3 * sb)) < 1e-11


def test_backward_recurrence_recovers_history():
    grid = build_grid(17)
    tg = build_time_grid(1.0, grid.h, 1.0)
    p0 = fourier_field(grid, seed=3) * interior_taper(grid)
    hist, _ = solve_wave(1.0, p0, grid, tg)
    nt = tg.n_steps
    after, cur = hist[nt].copy(), hist[nt - 1].copy()
    for level in range(nt - 2, 0, -1):
        prev = np.zeros_like(cur)
        prev[1:-1, 1:-1] = (2.0 * cur[1:-1, 1:-1] - after[1:-1, 1:-1]
                            + tg.dt ** 2
                            * interior_laplacian(cur, grid.h)[1:-1, 1:-1])
        assert np.max(np.abs(prev - hist[level])) < 1e-8 * max(
            1.0, np.abs(hist[level]).max())
        after, cur = cur, prev


def test_startup_step_formula():
    grid = build_grid(17)
    tg = build_time_grid(1.0, grid.h, 1.0)
    c = 0.9 + 0.1 * standing_mode(grid)
    p0 = fourier_field(grid, seed=4) * interior_taper(grid)
    p0[0] = p0[-1] = p0[:, 0] = p0[:, -1] = 0.0
    hist, _ = leapfrog(c, grid, tg, p0)
    want = p0 + 0.5 * tg.dt ** 2 * c ** 2 * interior_laplacian(p0, grid.h)
    assert np.max(np.abs(hist[1] - want)) < 1e-14


def test_second_time_derivative_exact_for_quadratics():
    grid = build_grid(9)
    tg = TimeGrid(1.0, 8)
    a = fourier_field(grid, seed=6)
    b = fourier_field(grid, seed=7)
    cc = fourier_field(grid, seed=8)
    t = tg.times()[:, None, None]
    hist = a[None] + b[None] * t + cc[None] * t * t
    out = second_time_derivative(hist, tg)
    assert np.max(np.abs(out - 2.0 * cc[None])) < 1e-10


def test_history_budget_guard():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    with pytest.raises(MemoryError):
        leapfrog(1.0, grid, tg, standing_mode(grid), history_budget=100)


def test_nonfinite_detection():
    grid = build_grid(9)
    tg = TimeGrid(0.25, 2)
    bad = np.full((9, 9), np.nan)
    with pytest.raises(UnstableSolveError):
        leapfrog(1.0, grid, tg, bad)


def test_solve_wave_zeroes_initial_ring():
    grid = build_grid(9)
    tg = build_time_grid(0.25, grid.h, 1.0)
    p0 = np.ones((9, 9))
    hist, _ = solve_wave(1.0, p0, grid, tg)
    assert (hist[0][0, :] == 0).all() and (hist[0][:, 0] == 0).all()
    assert hist[0][4, 4] == 1.0
    # sourced variant shares the projection
    hist2, _ = solve_wave_sourced(1.0, None, p0, grid, tg)
    assert (hist2[0][0, :] == 0).all()
