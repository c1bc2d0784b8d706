"""Forward map from coefficients to boundary wave data.

For each boundary illumination g the chain is: solve the diffusion equation
for the photon density u, form the initial pressure Gamma * sigma * u, run
the wave solve, and record the outward normal derivative of the pressure on
the boundary through time.  Stacking over the illumination set gives the
full datum, a (J, nt+1, 4*(n-1)) array.

The data space carries the L2((0,T) x boundary) inner product, realized as
trapezoid weights in time times the segment weight h per boundary node.
"""

import numpy as np

from .grid import UniformGrid, TriMesh, build_trimesh
from .wave import TimeGrid, solve_wave
from .diffusion import FemSystem

DIFFUSION_CONSTANT = 0.02
GRUENEISEN_CONSTANT = 1.0
ILLUMINATION_COUNT = 8


def default_illuminations(grid: UniformGrid, count=ILLUMINATION_COUNT):
    """Boundary illumination set: two smooth profiles per side.

    Side k (counterclockwise from the bottom) carries the profiles
    1 + 0.5*sin(pi*s/2) and 1 + 0.5*cos(pi*s/2) in the side arclength
    s in [0, 2), zero on the other sides.  Corner nodes belong to the side
    that starts there in the counterclockwise ordering.  Profiles are
    positive and bounded away from zero on their side.

    Returns
    -------
    ndarray, shape (count, 4*(n-1))
        Boundary values in counterclockwise order, sine profile first per
        side: j = 2*side + (0 for sine, 1 for cosine).
    """
    if not (1 <= count <= ILLUMINATION_COUNT):
        raise ValueError(f"count must be in 1..{ILLUMINATION_COUNT}")
    m = grid.n - 1
    s = np.arange(m) * grid.h
    profiles = np.zeros((ILLUMINATION_COUNT, 4 * m))
    for side in range(4):
        sl = slice(side * m, (side + 1) * m)
        profiles[2 * side, sl] = 1.0 + 0.5 * np.sin(0.5 * np.pi * s)
        profiles[2 * side + 1, sl] = 1.0 + 0.5 * np.cos(0.5 * np.pi * s)
    return profiles[:count]


def initial_pressure(grueneisen, absorption, photon_density) -> np.ndarray:
    """Pointwise initial pressure Gamma * sigma * u."""
    return grueneisen * absorption * photon_density


def forward_datum(sound_speed, absorption, illumination, grid: UniformGrid,
                  tg: TimeGrid, diffusion=DIFFUSION_CONSTANT,
                  grueneisen=GRUENEISEN_CONSTANT, mesh: TriMesh = None,
                  fem: FemSystem = None):
    """Boundary datum for one illumination.

    Returns
    -------
    ndarray, shape (nt+1, 4*(n-1))
        Outward normal derivative of the pressure at every time level.
    """
    if fem is None:
        fem = FemSystem(grid, diffusion, absorption, mesh)
    u = fem.solve(boundary=illumination)
    h0 = initial_pressure(grueneisen, fem.absorption, u)
    _, series = solve_wave(sound_speed, h0, grid, tg, store_history=False)
    return series


def stacked_forward(sound_speed, absorption, illuminations,
                    grid: UniformGrid, tg: TimeGrid,
                    diffusion=DIFFUSION_CONSTANT,
                    grueneisen=GRUENEISEN_CONSTANT, mesh: TriMesh = None,
                    fem: FemSystem = None):
    """Datum stacked over the illumination set, shape (J, nt+1, 4*(n-1)).

    One elliptic factorization is shared by all illuminations.
    """
    if fem is None:
        fem = FemSystem(grid, diffusion, absorption, mesh)
    out = np.empty((len(illuminations), tg.n_steps + 1, grid.n_boundary))
    for j, g in enumerate(illuminations):
        try:
            out[j] = forward_datum(sound_speed, absorption, g, grid, tg,
                                   grueneisen=grueneisen, fem=fem)
        except Exception as exc:
            exc.args = (f"illumination {j}: {exc}",)
            raise
    return out


def trapezoid_weights(tg: TimeGrid) -> np.ndarray:
    w = np.ones(tg.n_steps + 1)
    w[0] = 0.5
    w[-1] = 0.5
    return w


def data_dot(a, b, tg: TimeGrid, h) -> float:
    """Discrete L2((0,T) x boundary) inner product.

    Accepts single series (nt+1, nb) or stacked data (J, nt+1, nb); stacked
    inputs sum over illuminations with unit weights.
    """
    w = trapezoid_weights(tg)
    per_level = np.sum(np.asarray(a) * np.asarray(b), axis=-1)
    return float(h * tg.dt * np.sum(per_level * w))


def data_norm(a, tg: TimeGrid, h) -> float:
    return float(np.sqrt(max(data_dot(a, a, tg, h), 0.0)))
