"""Second probe round: basin structure and dynamics variants for study 2,
long run for study 1.  Scratch only."""
import sys
import time

import numpy as np

from qpat.experiments import _study_setup
from qpat.forward import data_norm, stacked_forward, default_illuminations
from qpat.grid import build_grid, build_trimesh
from qpat.linearized import (apply_adjoint, apply_jacobian, build_background,
                             pair_norm)
from qpat.nonlinear import (LATENT_CLAMP, cg_solve, latent_from_physical,
                            latent_jacobian_scaling, to_physical)
from qpat.wave import build_time_grid


def setup(experiment, n):
    grid = build_grid(n)
    illum = default_illuminations(grid)
    truth, bounds, cfg = _study_setup(experiment, grid)
    tg = build_time_grid(4.0, grid.h, bounds.c_hi)
    data = stacked_forward(truth[0], truth[1], illum, grid, tg)
    return grid, illum, truth, bounds, cfg, tg, data


def line_scan(n=65, points=13):
    grid, illum, truth, bounds, cfg, tg, data = setup(2, n)
    mesh = build_trimesh(grid)
    init_c = np.full((n, n), 0.9)
    for t in np.linspace(0.0, 1.0, points):
        c = (1.0 - t) * init_c + t * truth[0]
        pred = stacked_forward(c, truth[1], illum, grid, tg, mesh=mesh)
        f = 0.5 * data_norm(pred - data, tg, grid.h) ** 2
        print(f"[scan] t={t:.3f} F={f:.6e}", flush=True)


def lm_probe(tag, experiment, n, outer_cap, cg_cap, damping_factor=1.0,
             c_init=None, report_every=2):
    grid, illum, truth, bounds, cfg, tg, data = setup(experiment, n)
    if c_init is not None:
        cfg.c_init = c_init
    init = np.empty((2, n, n))
    init[0] = np.broadcast_to(np.asarray(cfg.c_init, float), (n, n))
    init[1] = np.broadcast_to(np.asarray(cfg.sigma_init, float), (n, n))
    latent = latent_from_physical(init, bounds)
    freeze_mask = np.ones((2, 1, 1))
    if cfg.freeze_speed:
        freeze_mask[0] = 0.0
    if cfg.freeze_absorption:
        freeze_mask[1] = 0.0
    block = 1 if experiment == 1 else 0

    mesh = build_trimesh(grid)
    damping = None
    t0 = time.time()
    for it in range(outer_cap + 1):
        phys = to_physical(latent, bounds)
        if cfg.freeze_speed:
            phys[0] = init[0]
        if cfg.freeze_absorption:
            phys[1] = init[1]
        bg = build_background(phys[0], phys[1], illum, grid, tg, mesh=mesh)
        residual = bg.datum - data
        fval = 0.5 * data_norm(residual, tg, grid.h) ** 2
        scaling = latent_jacobian_scaling(latent, bounds) * freeze_mask
        gradient = scaling * apply_adjoint(bg, residual)
        gnorm = pair_norm(gradient, bg.mass)

        rel = np.abs(phys[block] - truth[block]) / np.abs(truth[block])
        mx = float(rel.max())
        iy, ix = np.unravel_index(int(rel.argmax()), rel.shape)
        if it % report_every == 0 or it == outer_cap:
            print(f"[{tag}] it={it:3d} F={fval:.4e} g={gnorm:.3e} "
                  f"err={mx:.4f}@({iy},{ix}) t={time.time()-t0:.0f}s",
                  flush=True)
        if it == outer_cap:
            break
        if damping is None:
            pull = scaling * apply_adjoint(bg, data)
            damping = 1e-3 * float(np.max(np.abs(pull))) * damping_factor
            print(f"[{tag}] damping={damping:.4e}", flush=True)

        def apply_normal(w):
            return scaling * apply_adjoint(bg, apply_jacobian(bg, scaling * w))

        step, info = cg_solve(apply_normal, -gradient, bg.mass, damping,
                              cfg.cg_tol, cg_cap)
        latent = np.clip(latent + step, -LATENT_CLAMP, LATENT_CLAMP)
    print(f"[{tag}] done {time.time()-t0:.0f}s", flush=True)


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    if "scan" in which or which == "all":
        line_scan()
    jobs = {
        "F": dict(tag="exp2 mu*0.01 cg50", experiment=2, n=65,
                  outer_cap=60, cg_cap=50),
        "G": dict(tag="exp2 cg15 o200", experiment=2, n=65,
                  outer_cap=200, cg_cap=15, report_every=10),
        "H": dict(tag="exp2 init1.0 cg30", experiment=2, n=65,
                  outer_cap=40, cg_cap=30, c_init=1.0),
        "E": dict(tag="exp1 cg15 o150", experiment=1, n=65,
                  outer_cap=150, cg_cap=15, report_every=10),
    }
    jobs["F"]["damping_factor"] = 0.01
    for key, kw in jobs.items():
        if which == "all" or key in which:
            lm_probe(**kw)
