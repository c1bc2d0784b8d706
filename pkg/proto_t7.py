"""Find the outer-iteration count where study 1 crosses its error target
at the full grid, with an early stop.  Scratch only."""
import time

import numpy as np

from proto_t3 import setup
from qpat.forward import data_norm
from qpat.grid import build_trimesh
from qpat.linearized import apply_adjoint, apply_jacobian, build_background, \
    pair_norm
from qpat.nonlinear import (LATENT_CLAMP, cg_solve, latent_from_physical,
                            latent_jacobian_scaling, to_physical)


def crossing_probe(tag, n=129, outer_cap=240, cg_cap=15, final_time=1.25,
                   stop_below=0.20, report_every=5):
    grid, illum, truth, bounds, cfg, tg, data = setup(1, n, final_time)
    print(f"[{tag}] nt={tg.n_steps}", flush=True)
    init = np.empty((2, n, n))
    init[0] = truth[0]
    init[1] = np.broadcast_to(np.asarray(cfg.sigma_init, float), (n, n))
    latent = latent_from_physical(init, bounds)
    freeze_mask = np.ones((2, 1, 1))
    freeze_mask[0] = 0.0

    mesh = build_trimesh(grid)
    damping = None
    t0 = time.time()
    for it in range(outer_cap + 1):
        phys = to_physical(latent, bounds)
        phys[0] = init[0]
        bg = build_background(phys[0], phys[1], illum, grid, tg, mesh=mesh)
        residual = bg.datum - data
        fval = 0.5 * data_norm(residual, tg, grid.h) ** 2
        scaling = latent_jacobian_scaling(latent, bounds) * freeze_mask
        gradient = scaling * apply_adjoint(bg, residual)
        gnorm = pair_norm(gradient, bg.mass)

        rel = np.abs(phys[1] - truth[1]) / np.abs(truth[1])
        mx = float(rel.max())
        if it % report_every == 0 or it == outer_cap or mx < stop_below:
            print(f"[{tag}] it={it:3d} F={fval:.4e} g={gnorm:.3e} "
                  f"err={mx:.4f} t={time.time()-t0:.0f}s", flush=True)
        if it == outer_cap or mx < stop_below:
            break
        if damping is None:
            pull = scaling * apply_adjoint(bg, data)
            damping = 1e-3 * float(np.max(np.abs(pull)))
            print(f"[{tag}] damping={damping:.4e}", flush=True)

        def apply_normal(w):
            return scaling * apply_adjoint(bg, apply_jacobian(bg, scaling * w))

        step, info = cg_solve(apply_normal, -gradient, bg.mass, damping,
                              cfg.cg_tol, cg_cap)
        latent = np.clip(latent + step, -LATENT_CLAMP, LATENT_CLAMP)
    print(f"[{tag}] done {time.time()-t0:.0f}s", flush=True)


def exp2_noisy_probe(tag, kappa, index, n=129, outer_cap=160, cg_cap=15,
                     final_time=1.0, report_every=5, seed=0):
    from qpat.experiments import NoiseSpec, add_noise
    grid, illum, truth, bounds, cfg, tg, clean = setup(2, n, final_time)
    data = add_noise(clean, NoiseSpec(kappa, (seed, 2, index)))
    print(f"[{tag}] nt={tg.n_steps}", flush=True)
    init = np.empty((2, n, n))
    init[0] = np.broadcast_to(np.asarray(cfg.c_init, float), (n, n))
    init[1] = truth[1]
    latent = latent_from_physical(init, bounds)
    freeze_mask = np.ones((2, 1, 1))
    freeze_mask[1] = 0.0

    mesh = build_trimesh(grid)
    damping = None
    t0 = time.time()
    for it in range(outer_cap + 1):
        phys = to_physical(latent, bounds)
        phys[1] = init[1]
        bg = build_background(phys[0], phys[1], illum, grid, tg, mesh=mesh)
        residual = bg.datum - data
        fval = 0.5 * data_norm(residual, tg, grid.h) ** 2
        scaling = latent_jacobian_scaling(latent, bounds) * freeze_mask
        gradient = scaling * apply_adjoint(bg, residual)
        gnorm = pair_norm(gradient, bg.mass)

        rel = np.abs(phys[0] - truth[0]) / np.abs(truth[0])
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
            damping = 1e-3 * float(np.max(np.abs(pull)))
            print(f"[{tag}] damping={damping:.4e}", flush=True)

        def apply_normal(w):
            return scaling * apply_adjoint(bg, apply_jacobian(bg, scaling * w))

        step, info = cg_solve(apply_normal, -gradient, bg.mass, damping,
                              cfg.cg_tol, cg_cap)
        latent = np.clip(latent + step, -LATENT_CLAMP, LATENT_CLAMP)
    print(f"[{tag}] done {time.time()-t0:.0f}s", flush=True)


if __name__ == "__main__":
    import sys
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    if which in ("all", "exp2"):
        exp2_noisy_probe("exp2 k0 o160", 0.0, 0)
    if which in ("all", "exp1"):
        crossing_probe("exp1cross 129 T1.25 cg15")
    if which == "exp2noisy":
        exp2_noisy_probe("exp2 k0.5 o160", 0.5, 1)
        exp2_noisy_probe("exp2 k1 o160", 1.0, 2)
    print("probe queue done", flush=True)
