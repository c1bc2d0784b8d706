"""Linearization of the forward map around a fixed background, its adjoint,
and Landweber iteration on the linearized problem.

Perturbation pairs (speed, absorption) are stored as one (2, n, n) array:
index 0 is the speed direction, index 1 the absorption direction.  The
coefficient space carries the lumped-mass L2 inner product on both blocks;
the data space the trapezoid-in-time times h-per-boundary-node product.

The Jacobian is the exact derivative of the discrete forward map and
applies with one wave solve per illumination: the absorption direction
enters through the initial value Gamma*(dsigma*u0 + sigma0*du) (du from one
elliptic solve on the cached background factorization), the speed direction
through the body source (2/c0^3) * p0_tt * dc of the same wave solve, where
p0_tt is recovered from the background history by the same recurrence that
produced it.

The adjoint is the exact transpose of the Jacobian with respect to these
two inner products: per illumination it runs the leapfrog recurrence
backward, driven by boundary-stencil loads built from the weighted data
(the transpose of the flux extraction), accumulates the speed block against
the cached p0_tt level by level, and reads the absorption block off the
final multiplier level with one elliptic solve.  Up to roundoff,
<J delta, y>_data equals <delta, J* y>_coeff for every delta and y, so
gradient checks against finite differences of the data misfit are limited
only by the finite-difference truncation itself.  The backward sweep is the
discrete counterpart of solving the wave equation from the final time with
the residual fed in at the boundary and transporting the result back
through the acoustic and optical stages.
"""

from dataclasses import dataclass

import numpy as np

from .grid import (UniformGrid, TriMesh, build_trimesh, lumped_mass,
                   zero_boundary)
from .wave import (TimeGrid, solve_wave, solve_wave_sourced,
                   second_time_derivative, interior_laplacian)
from .diffusion import FemSystem, solve_perturbation
from .forward import (DIFFUSION_CONSTANT, GRUENEISEN_CONSTANT,
                      trapezoid_weights, data_norm)


class DivergenceError(RuntimeError):
    """Raised when an iteration diverges; the message says what to adjust."""


def pair_dot(a, b, mass) -> float:
    """Lumped L2 inner product over both blocks of (2, n, n) pairs."""
    return float(np.sum(mass * (a[0] * b[0] + a[1] * b[1])))


def pair_norm(a, mass) -> float:
    return float(np.sqrt(max(pair_dot(a, a, mass), 0.0)))


@dataclass
class Background:
    """Frozen linearization point with every reusable ingredient cached.

    ``pressure_ddot[j]`` holds the second time derivative of the background
    pressure history for illumination j: central differences at interior
    levels (which the recurrence makes identical to c^2 times the discrete
    Laplacian of the history, so the linearized source is the exact
    derivative of each time step), and at level 0 the scheme's implied
    initial acceleration c^2 * Lap p(0), which is what differentiating the
    startup step requires.  The histories themselves are only kept when
    ``keep_histories`` was requested (tests use them).
    """

    grid: UniformGrid
    mesh: TriMesh
    tg: TimeGrid
    sound_speed: np.ndarray
    absorption: np.ndarray
    grueneisen: np.ndarray
    illuminations: np.ndarray
    fem: FemSystem
    photon_density: np.ndarray      # (J, n, n)
    pressure_ddot: np.ndarray       # (J, nt+1, n, n)
    datum: np.ndarray               # (J, nt+1, nb)
    mass: np.ndarray
    source_factor: np.ndarray       # 2 / c0^3
    inv_c2: np.ndarray              # 1 / c0^2
    pressure: np.ndarray = None     # (J, nt+1, n, n) when kept

    @property
    def n_illuminations(self):
        return len(self.illuminations)


def build_background(sound_speed, absorption, illuminations,
                     grid: UniformGrid, tg: TimeGrid,
                     diffusion=DIFFUSION_CONSTANT,
                     grueneisen=GRUENEISEN_CONSTANT, mesh: TriMesh = None,
                     keep_histories=False) -> Background:
    """Solve the background problems once and cache what the linearized
    operators need: photon densities, pressure second time derivatives,
    background datum, and the elliptic factorization."""
    if mesh is None:
        mesh = build_trimesh(grid)
    sound_speed = np.broadcast_to(
        np.asarray(sound_speed, float), (grid.n, grid.n)).copy()
    grue = np.broadcast_to(
        np.asarray(grueneisen, float), (grid.n, grid.n)).copy()
    fem = FemSystem(grid, diffusion, absorption, mesh)

    count = len(illuminations)
    nb = grid.n_boundary
    u0 = np.empty((count, grid.n, grid.n))
    pdd = np.empty((count, tg.n_steps + 1, grid.n, grid.n))
    datum = np.empty((count, tg.n_steps + 1, nb))
    keep = np.empty_like(pdd) if keep_histories else None
    c_squared = sound_speed * sound_speed
    for j, g in enumerate(illuminations):
        u0[j] = fem.solve(boundary=g)
        h0 = grue * fem.absorption * u0[j]
        hist, series = solve_wave(sound_speed, h0, grid, tg)
        datum[j] = series
        pdd[j] = second_time_derivative(hist, tg)
        # level 0 must match what the startup step differentiates to
        pdd[j][0] = c_squared * interior_laplacian(hist[0], grid.h)
        if keep_histories:
            keep[j] = hist
        del hist

    return Background(
        grid=grid, mesh=mesh, tg=tg, sound_speed=sound_speed,
        absorption=fem.absorption, grueneisen=grue,
        illuminations=np.asarray(illuminations, float), fem=fem,
        photon_density=u0, pressure_ddot=pdd, datum=datum,
        mass=lumped_mass(grid), source_factor=2.0 / sound_speed ** 3,
        inv_c2=1.0 / sound_speed ** 2, pressure=keep)


def apply_jacobian(bg: Background, delta) -> np.ndarray:
    """Apply the linearized forward map to a (2, n, n) perturbation pair.

    Returns stacked data (J, nt+1, nb).  One wave solve per illumination
    carries both directions at once.
    """
    speed_dir = np.asarray(delta[0], float)
    absorb_dir = np.asarray(delta[1], float)
    use_speed = np.any(speed_dir)
    use_absorb = np.any(absorb_dir)

    out = np.empty_like(bg.datum)
    factor = bg.source_factor * speed_dir if use_speed else None
    for j in range(bg.n_illuminations):
        if use_absorb:
            du = solve_perturbation(bg.fem, absorb_dir, bg.photon_density[j])
            h0 = bg.grueneisen * (absorb_dir * bg.photon_density[j]
                                  + bg.absorption * du)
        else:
            h0 = np.zeros((bg.grid.n, bg.grid.n))
        if use_speed:
            pdd = bg.pressure_ddot[j]
            source = lambda level: factor * pdd[level]
        else:
            source = None
        _, series = solve_wave_sourced(bg.sound_speed, source, h0, bg.grid,
                                       bg.tg, store_history=False)
        out[j] = series
    return out


def apply_adjoint(bg: Background, data) -> np.ndarray:
    """Apply the exact transpose of ``apply_jacobian`` to stacked data.

    Per illumination the leapfrog recurrence runs backward from the final
    level, driven by the transposed extraction stencil applied to the
    quadrature-weighted data.  With z denoting c0^2 times the multiplier of
    each recurrence constraint, the sweep is

        z[nt]   = c0^2 g[nt]
        z[nt-1] = 2 z[nt] + dt^2 c0^2 Lap z[nt] + c0^2 g[nt-1]
        z[l]    = 2 z[l+1] - z[l+2] + dt^2 c0^2 Lap z[l+1] + c0^2 g[l]
        z[0]    = z[1] - z[2] + (dt^2/2) c0^2 Lap z[1] + c0^2 g[0]

    where g[l] collects the boundary loads of level l.  The speed block
    pairs each source level with the multiplier one level later (the level-0
    source carries the startup's factor 1/2); the absorption block pairs the
    initial value with z[0]/c0^2 and undoes the elliptic stage with one
    factorized solve.  Dividing by the lumped mass turns the resulting
    coefficient-space functionals into gradient fields.  Boundary nodes of
    both blocks come out zero, matching the projection applied to initial
    values on the forward side.

    Returns a (2, n, n) pair; contributions are summed over illuminations
    in a fixed order.
    """
    data = np.asarray(data, float)
    grid, tg = bg.grid, bg.tg
    n, h = grid.n, grid.h
    nt = tg.n_steps
    dt2 = tg.dt * tg.dt
    c2 = bg.sound_speed * bg.sound_speed
    quad = trapezoid_weights(tg) * (tg.dt * h)
    extraction_t = grid.extraction_transpose

    def load(y, level):
        f = (extraction_t @ (quad[level] * y[level])).reshape(n, n)
        f[0, :] = 0.0
        f[-1, :] = 0.0
        f[:, 0] = 0.0
        f[:, -1] = 0.0
        return f

    accum_speed = np.zeros((n, n))
    grad_absorb = np.zeros((n, n))
    for j in range(bg.n_illuminations):
        y = data[j]
        pdd = bg.pressure_ddot[j]

        z_after = c2 * load(y, nt)
        accum_speed += pdd[nt - 1] * z_after
        z_cur = (2.0 * z_after + dt2 * c2 * interior_laplacian(z_after, h)
                 + c2 * load(y, nt - 1))
        accum_speed += (0.5 if nt == 2 else 1.0) * pdd[nt - 2] * z_cur
        for level in range(nt - 2, 0, -1):
            z_new = (2.0 * z_cur - z_after
                     + dt2 * c2 * interior_laplacian(z_cur, h)
                     + c2 * load(y, level))
            z_after, z_cur = z_cur, z_new
            accum_speed += (0.5 if level == 1 else 1.0) * pdd[level - 1] * z_cur
        z0 = (z_cur - z_after + 0.5 * dt2 * c2 * interior_laplacian(z_cur, h)
              + c2 * load(y, 0))
        q0 = z0 / c2

        flux = bg.fem.solve_raw(bg.grueneisen * bg.absorption * q0)
        grad_absorb += bg.photon_density[j] * (bg.grueneisen * q0
                                               - bg.mass * flux)

    out = np.stack([bg.source_factor * dt2 * accum_speed, grad_absorb])
    out /= bg.mass
    out[0] = zero_boundary(out[0])
    out[1] = zero_boundary(out[1])
    return out


def estimate_operator_norm(bg: Background, n_iters=30, seed=0):
    """Largest singular value of the linearized map by power iteration.

    Rayleigh quotients ||J v|| / ||v|| are accumulated as a running maximum,
    so the returned estimate never decreases with more iterations.

    Returns
    -------
    estimate : float
    history : list of float
        Estimate after each iteration (nondecreasing).
    """
    if n_iters < 5:
        raise ValueError("need at least 5 power iterations")
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal((2, bg.grid.n, bg.grid.n))
    v /= pair_norm(v, bg.mass)
    best = 0.0
    history = []
    for _ in range(n_iters):
        jv = apply_jacobian(bg, v)
        best = max(best, data_norm(jv, bg.tg, bg.grid.h))
        history.append(best)
        w = apply_adjoint(bg, jv)
        norm = pair_norm(w, bg.mass)
        if norm == 0.0:
            break
        v = w / norm
    return best, history


def landweber_solve(bg: Background, data, step_size, max_iters,
                    target_relative_residual=None, stagnation_tol=0.0):
    """Landweber iteration for the linearized problem J delta = data.

    Starts from zero and iterates delta <- delta - step_size * J*(J delta -
    data); the constant term J* data is computed once.  The residual norm is
    logged every iteration; three consecutive increases abort.

    Returns
    -------
    delta : (2, n, n) array
    info : dict with 'residuals' (per-iterate data-space norms, starting at
        the zero iterate), 'relative_residuals', and 'stop' reason.
    """
    if step_size <= 0.0:
        raise ValueError("step_size must be positive")
    tg, h = bg.tg, bg.grid.h
    adjoint_data = apply_adjoint(bg, data)
    data_scale = data_norm(data, tg, h)
    if data_scale == 0.0:
        return np.zeros((2, bg.grid.n, bg.grid.n)), {
            "residuals": [0.0], "relative_residuals": [0.0],
            "stop": "zero data"}

    delta = np.zeros((2, bg.grid.n, bg.grid.n))
    predicted = np.zeros_like(data)
    residuals = [data_scale]
    increases = 0
    stop = "max iterations"
    for k in range(max_iters):
        if target_relative_residual is not None and \
                residuals[-1] / data_scale <= target_relative_residual:
            stop = "reached target residual"
            break
        if k == 0:
            correction = -adjoint_data
        else:
            correction = apply_adjoint(bg, predicted) - adjoint_data
        delta = delta - step_size * correction
        predicted = apply_jacobian(bg, delta)
        rnorm = data_norm(predicted - data, tg, h)
        last = residuals[-1]
        residuals.append(rnorm)
        if rnorm > last:
            increases += 1
            if increases >= 3:
                raise DivergenceError(
                    "Landweber residual increased three times in a row; "
                    "reduce the step size below 2 / (largest singular "
                    "value)^2")
        else:
            increases = 0
        if stagnation_tol > 0.0 and abs(last - rnorm) < stagnation_tol * last:
            stop = "stagnated"
            break
    else:
        if target_relative_residual is not None and \
                residuals[-1] / data_scale <= target_relative_residual:
            stop = "reached target residual"

    info = {"residuals": residuals,
            "relative_residuals": [r / data_scale for r in residuals],
            "stop": stop}
    return delta, info
