"""Bound-constrained nonlinear inversion: Levenberg-Marquardt outer loop
with matrix-free conjugate-gradient inner solves.

Both coefficients are kept strictly inside box bounds by the pointwise map
value = midpoint + halfwidth * tanh(latent), and the outer iteration works
on the latent pair throughout.  The chain rule turns the coefficient-space
Jacobian J into J S with S the diagonal halfwidth * sech^2 scaling, so each
step solves (S J* J S + mu I) step = -S J* residual in the lumped pair
inner product.  The normal operator is symmetric positive definite there
because the adjoint is the exact transpose of the Jacobian, which is what
lets plain conjugate gradient run on it without safeguards.

A known coefficient is frozen by zeroing its scaling block: gradient,
metric, and step vanish there at once and the stored field passes through
to every background rebuild unchanged.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .forward import (DIFFUSION_CONSTANT, GRUENEISEN_CONSTANT, data_norm,
                      stacked_forward)
from .grid import UniformGrid, build_trimesh
from .linearized import (DivergenceError, apply_adjoint, apply_jacobian,
                         build_background, pair_dot, pair_norm)
from .wave import TimeGrid

LATENT_CLAMP = 12.0


@dataclass(frozen=True)
class Bounds:
    """Box constraints: speed in [c_lo, c_hi], absorption in [sigma_lo, sigma_hi]."""

    c_lo: float
    c_hi: float
    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        if not 0.0 < self.c_lo < self.c_hi:
            raise ValueError("speed bounds need 0 < lo < hi")
        if not 0.0 <= self.sigma_lo < self.sigma_hi:
            raise ValueError("absorption bounds need 0 <= lo < hi")

    @property
    def midpoints(self) -> np.ndarray:
        """Box centers as a (2, 1, 1) array, broadcastable over pairs."""
        return 0.5 * np.array([self.c_lo + self.c_hi,
                               self.sigma_lo + self.sigma_hi]
                              ).reshape(2, 1, 1)

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * np.array([self.c_hi - self.c_lo,
                               self.sigma_hi - self.sigma_lo]
                              ).reshape(2, 1, 1)


def to_physical(latent, bounds: Bounds) -> np.ndarray:
    """Map a latent (2, n, n) pair to coefficients strictly inside the box."""
    return bounds.midpoints + bounds.half_widths * np.tanh(
        np.asarray(latent, float))


def latent_from_physical(pair, bounds: Bounds) -> np.ndarray:
    """Invert ``to_physical``; exact for interior values, values on a box
    face land on the latent clamp.  Raises ValueError outside the box."""
    ratio = (np.asarray(pair, float) - bounds.midpoints) / bounds.half_widths
    if np.any(np.abs(ratio) > 1.0 + 1e-12):
        raise ValueError("coefficients violate the bounds")
    limit = math.tanh(LATENT_CLAMP)
    return np.arctanh(np.clip(ratio, -limit, limit))


def latent_jacobian_scaling(latent, bounds: Bounds) -> np.ndarray:
    """Pointwise derivative of ``to_physical``: halfwidth * sech^2(latent)."""
    return bounds.half_widths / np.cosh(np.asarray(latent, float)) ** 2


def objective(sound_speed, absorption, data_ref, illuminations,
              grid: UniformGrid, tg: TimeGrid,
              diffusion=DIFFUSION_CONSTANT,
              grueneisen=GRUENEISEN_CONSTANT) -> float:
    """Half the squared data-space misfit of the forward map at (c, sigma)."""
    predicted = stacked_forward(sound_speed, absorption, illuminations,
                                grid, tg, diffusion, grueneisen)
    return 0.5 * data_norm(predicted - np.asarray(data_ref, float),
                           tg, grid.h) ** 2


def cg_solve(apply_normal, rhs, mass, damping, tol=1e-8, cap=50):
    """Conjugate gradient for (N + damping I) z = rhs in the lumped pair
    inner product.

    ``apply_normal`` must be symmetric positive semidefinite in that
    product (here J* J, possibly with the latent scaling folded in on both
    sides).  Stops when the residual norm falls below ``tol`` times its
    starting value or after ``cap`` iterations; the info dict reports
    which.  Nonpositive curvature aborts: an exact transpose pair cannot
    produce it, so it signals an inconsistent jacobian/adjoint.

    Returns
    -------
    z : array shaped like rhs
    info : dict with 'iterations' and 'stop'
    """
    if damping <= 0.0:
        raise ValueError("damping must be positive")
    rhs = np.asarray(rhs, float)
    z = np.zeros_like(rhs)
    r = rhs.copy()
    rho = pair_dot(r, r, mass)
    scale = math.sqrt(max(rho, 0.0))
    if scale == 0.0:
        return z, {"iterations": 0, "stop": "zero right-hand side"}
    p = r.copy()
    for it in range(1, cap + 1):
        ap = apply_normal(p) + damping * p
        curvature = pair_dot(p, ap, mass)
        if curvature <= 0.0:
            raise DivergenceError(
                "conjugate gradient hit nonpositive curvature; the normal "
                "operator is not positive definite, which points at an "
                "inconsistent jacobian/adjoint pair")
        alpha = rho / curvature
        z += alpha * p
        r -= alpha * ap
        rho_next = pair_dot(r, r, mass)
        if math.sqrt(max(rho_next, 0.0)) <= tol * scale:
            return z, {"iterations": it, "stop": "tolerance"}
        p = r + (rho_next / rho) * p
        rho = rho_next
    return z, {"iterations": cap, "stop": "iteration cap"}


@dataclass
class LmConfig:
    """Knobs for ``lm_solve``.

    ``damping=None`` picks 1e-3 times the sup norm of the latent-space
    image of the reference data under the adjoint, computed once at the
    initial point and held constant for the whole run.  Initial values may
    be scalars or (n, n) fields; a frozen block keeps its initial field
    bitwise across all iterations.
    """

    c_init: object = 1.0
    sigma_init: object = 0.1
    outer_cap: int = 80
    cg_tol: float = 1e-8
    cg_cap: int = 50
    damping: float = None
    freeze_speed: bool = False
    freeze_absorption: bool = False
    residual_drop_tol: float = 0.0

    def __post_init__(self):
        if self.outer_cap < 1 or self.cg_cap < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.damping is not None and self.damping <= 0.0:
            raise ValueError("damping must be positive")


@dataclass(frozen=True)
class LmLogEntry:
    iteration: int
    objective_value: float
    gradient_norm: float
    cg_iterations: int


@dataclass
class LmResult:
    sound_speed: np.ndarray
    absorption: np.ndarray
    latent: np.ndarray
    log: list
    stop: str
    damping: float


def lm_solve(data_ref, bounds: Bounds, config: LmConfig, illuminations,
             grid: UniformGrid, tg: TimeGrid,
             diffusion=DIFFUSION_CONSTANT, grueneisen=GRUENEISEN_CONSTANT,
             callback=None) -> LmResult:
    """Levenberg-Marquardt iteration on the latent pair.

    Each iteration rebuilds the background at the current coefficients,
    forms the residual against ``data_ref``, and solves the damped normal
    equation with ``cg_solve`` for the latent step.  The damping stays
    constant over the run.  The log records objective value, latent
    gradient norm, and inner iteration count per step, plus a terminal
    entry for the final state (cg_iterations 0); ``callback``, when given,
    receives each entry as it is appended.

    Stops at the outer cap, or once the relative drop of the residual norm
    falls below ``config.residual_drop_tol`` without increasing.  Five
    consecutive iterations without objective decrease raise
    DivergenceError.
    """
    data_ref = np.asarray(data_ref, float)
    n = grid.n
    init = np.empty((2, n, n))
    init[0] = np.broadcast_to(np.asarray(config.c_init, float), (n, n))
    init[1] = np.broadcast_to(np.asarray(config.sigma_init, float), (n, n))
    latent = latent_from_physical(init, bounds)

    freeze_mask = np.ones((2, 1, 1))
    if config.freeze_speed:
        freeze_mask[0] = 0.0
    if config.freeze_absorption:
        freeze_mask[1] = 0.0

    def current_physical():
        phys = to_physical(latent, bounds)
        # frozen blocks bypass the transform so known fields stay bitwise
        if config.freeze_speed:
            phys[0] = init[0]
        if config.freeze_absorption:
            phys[1] = init[1]
        return phys

    mesh = build_trimesh(grid)
    damping = config.damping
    log = []
    prev_objective = None
    prev_residual = None
    flat_count = 0
    steps = 0
    stop = None

    while True:
        physical = current_physical()
        bg = build_background(physical[0], physical[1], illuminations,
                              grid, tg, diffusion, grueneisen, mesh=mesh)
        residual = bg.datum - data_ref
        residual_norm = data_norm(residual, tg, grid.h)
        objective_value = 0.5 * residual_norm ** 2
        scaling = latent_jacobian_scaling(latent, bounds) * freeze_mask
        gradient = scaling * apply_adjoint(bg, residual)
        gradient_norm = pair_norm(gradient, bg.mass)

        if prev_objective is not None and objective_value >= prev_objective:
            flat_count += 1
            if flat_count >= 5:
                raise DivergenceError(
                    "objective did not decrease for five consecutive "
                    "iterations; lower the damping or check the data "
                    "scaling")
        elif prev_objective is not None:
            flat_count = 0

        if prev_residual is not None and config.residual_drop_tol > 0.0:
            drop = (prev_residual - residual_norm) / prev_residual
            if 0.0 <= drop < config.residual_drop_tol:
                stop = "residual stagnated"
        if stop is None and steps >= config.outer_cap:
            stop = "iteration cap"
        if stop is not None:
            entry = LmLogEntry(steps, objective_value, gradient_norm, 0)
            log.append(entry)
            if callback is not None:
                callback(entry)
            break

        if damping is None:
            reference_pull = scaling * apply_adjoint(bg, data_ref)
            damping = 1e-3 * float(np.max(np.abs(reference_pull)))
            if damping <= 0.0:
                raise ValueError(
                    "reference data gives a zero damping scale; set "
                    "config.damping explicitly")

        def apply_normal(w):
            return scaling * apply_adjoint(
                bg, apply_jacobian(bg, scaling * w))

        step, cg_info = cg_solve(apply_normal, -gradient, bg.mass, damping,
                                 config.cg_tol, config.cg_cap)
        entry = LmLogEntry(steps, objective_value, gradient_norm,
                           cg_info["iterations"])
        log.append(entry)
        if callback is not None:
            callback(entry)

        latent = np.clip(latent + step, -LATENT_CLAMP, LATENT_CLAMP)
        prev_objective = objective_value
        prev_residual = residual_norm
        steps += 1

    physical = current_physical()
    return LmResult(sound_speed=physical[0], absorption=physical[1],
                    latent=latent, log=log, stop=stop, damping=damping)
