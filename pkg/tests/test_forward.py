"""Forward chain tests: elliptic stage -> initial pressure -> wave ->
boundary flux, against an independently composed dense pipeline."""

import numpy as np
import pytest

from qpat.diffusion import FemSystem
from qpat.forward import (DIFFUSION_CONSTANT, GRUENEISEN_CONSTANT,
                          ILLUMINATION_COUNT, data_dot, data_norm,
                          default_illuminations, forward_datum,
                          initial_pressure, stacked_forward,
                          trapezoid_weights)
from qpat.grid import build_grid, lumped_mass
from qpat.wave import build_time_grid

from helpers import (boundary_normal_series_oracle, dense_fem_matrix,
                     dense_dirichlet_solve, fourier_field, scalar_leapfrog)


def test_default_illuminations_structure():
    grid = build_grid(9)
    profiles = default_illuminations(grid)
    assert profiles.shape == (8, grid.n_boundary)
    m = grid.n - 1
    for side in range(4):
        sl = slice(side * m, (side + 1) * m)
        for j in (2 * side, 2 * side + 1):
            row = profiles[j]
            assert (row[sl] >= 0.5).all() and (row[sl] <= 1.5).all()
            off = np.delete(row, np.arange(side * m, (side + 1) * m))
            assert (off == 0.0).all()
    # sine profile starts at 1, cosine at 1.5, at each side's first node
    assert profiles[0, 0] == 1.0
    assert profiles[1, 0] == 1.5

    assert default_illuminations(grid, 3).shape == (3, grid.n_boundary)
    with pytest.raises(ValueError):
        default_illuminations(grid, 0)
    with pytest.raises(ValueError):
        default_illuminations(grid, ILLUMINATION_COUNT + 1)


def test_initial_pressure_formula():
    assert initial_pressure(2.0, 3.0, 4.0) == 24.0


def test_datum_matches_dense_pipeline():
    grid = build_grid(9)
    n = grid.n
    x, y = grid.coords()
    sigma = 0.1 + 0.05 * np.exp(-((x - 1) ** 2 + (y - 1) ** 2))
    c = 1.0 + 0.1 * np.sin(0.5 * np.pi * x) * np.sin(0.5 * np.pi * y)
    tg = build_time_grid(1.0, grid.h, 1.1)
    g = default_illuminations(grid)[2]

    got = forward_datum(c, sigma, g, grid, tg)

    dense = dense_fem_matrix(grid, DIFFUSION_CONSTANT, sigma)
    u = dense_dirichlet_solve(grid, dense, np.zeros(n * n), g)
    h0 = GRUENEISEN_CONSTANT * sigma * u
    h0[0, :] = 0.0
    h0[-1, :] = 0.0
    h0[:, 0] = 0.0
    h0[:, -1] = 0.0
    hist = scalar_leapfrog(c, grid, tg, h0)
    want = boundary_normal_series_oracle(hist, grid)

    scale = np.abs(want).max()
    assert np.max(np.abs(got - want)) < 1e-10 * scale


def test_zero_absorption_gives_zero_datum():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    datum = forward_datum(1.0, np.zeros((9, 9)), np.ones(grid.n_boundary),
                          grid, tg)
    assert np.max(np.abs(datum)) == 0.0


def test_stacked_forward_consistency():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    illum = default_illuminations(grid, 4)
    stack = stacked_forward(1.0, 0.1, illum, grid, tg)
    assert stack.shape == (4, tg.n_steps + 1, grid.n_boundary)
    for j in range(4):
        single = forward_datum(1.0, 0.1, illum[j], grid, tg)
        assert np.array_equal(stack[j], single)

    perm = [2, 0, 3, 1]
    stack_perm = stacked_forward(1.0, 0.1, illum[perm], grid, tg)
    assert np.array_equal(stack_perm, stack[perm])


def test_grueneisen_homogeneity():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    g = default_illuminations(grid)[0]
    one = forward_datum(1.0, 0.1, g, grid, tg, grueneisen=1.0)
    two = forward_datum(1.0, 0.1, g, grid, tg, grueneisen=2.0)
    assert np.max(np.abs(two - 2.0 * one)) < 1e-12 * np.abs(one).max()


def test_trapezoid_weights():
    tg = build_time_grid(1.0, 0.25, 1.0)
    w = trapezoid_weights(tg)
    assert w[0] == 0.5 and w[-1] == 0.5
    assert (w[1:-1] == 1.0).all()
    assert w.sum() == tg.n_steps


def test_data_dot_matches_manual_sum():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    rng = np.random.Generator(np.random.Philox(3))
    a = rng.standard_normal((tg.n_steps + 1, grid.n_boundary))
    b = rng.standard_normal((tg.n_steps + 1, grid.n_boundary))

    manual = 0.0
    for level in range(tg.n_steps + 1):
        weight = 0.5 if level in (0, tg.n_steps) else 1.0
        manual += weight * tg.dt * grid.h * float(a[level] @ b[level])
    assert data_dot(a, b, tg, grid.h) == pytest.approx(manual, rel=1e-13)

    # stacked arrays sum plain over the leading axis
    sa = np.stack([a, b])
    sb = np.stack([b, a])
    assert data_dot(sa, sb, tg, grid.h) == pytest.approx(
        2.0 * data_dot(a, b, tg, grid.h), rel=1e-13)


def test_data_norm_of_ones():
    grid = build_grid(9)
    tg = build_time_grid(0.5, grid.h, 1.0)
    ones = np.ones((tg.n_steps + 1, grid.n_boundary))
    want = np.sqrt(grid.h * tg.dt * tg.n_steps * grid.n_boundary)
    assert data_norm(ones, tg, grid.h) == pytest.approx(want, rel=1e-13)
