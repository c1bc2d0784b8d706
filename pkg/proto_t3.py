"""Third probe round: shorter recording windows per study, plus the
criterion-5 Landweber run under the same lever.  Scratch only."""
import sys
import time

import numpy as np

from qpat.experiments import _study_setup, perturbation_pair
from qpat.forward import data_norm, stacked_forward, default_illuminations
from qpat.grid import build_grid, build_trimesh
from qpat.linearized import (apply_adjoint, apply_jacobian, build_background,
                             estimate_operator_norm, landweber_solve,
                             pair_norm)
from qpat.nonlinear import (LATENT_CLAMP, cg_solve, latent_from_physical,
                            latent_jacobian_scaling, to_physical)
from qpat.wave import build_time_grid


def setup(experiment, n, final_time):
    grid = build_grid(n)
    illum = default_illuminations(grid)
    truth, bounds, cfg = _study_setup(experiment, grid)
    tg = build_time_grid(final_time, grid.h, bounds.c_hi)
    data = stacked_forward(truth[0], truth[1], illum, grid, tg)
    return grid, illum, truth, bounds, cfg, tg, data


def lm_probe(tag, experiment, n, outer_cap, cg_cap, final_time=4.0,
             report_every=2):
    grid, illum, truth, bounds, cfg, tg, data = setup(experiment, n,
                                                      final_time)
    print(f"[{tag}] nt={tg.n_steps}", flush=True)
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
            damping = 1e-3 * float(np.max(np.abs(pull)))
            print(f"[{tag}] damping={damping:.4e}", flush=True)

        def apply_normal(w):
            return scaling * apply_adjoint(bg, apply_jacobian(bg, scaling * w))

        step, info = cg_solve(apply_normal, -gradient, bg.mass, damping,
                              cfg.cg_tol, cg_cap)
        latent = np.clip(latent + step, -LATENT_CLAMP, LATENT_CLAMP)
    print(f"[{tag}] done {time.time()-t0:.0f}s", flush=True)


def landweber_probe(tag, n=65, final_time=4.0, iters=500):
    grid = build_grid(n)
    illum = default_illuminations(grid)
    tg = build_time_grid(final_time, grid.h, 1.0)
    c0 = np.full((n, n), 1.0)
    s0 = np.full((n, n), 0.1)
    bg = build_background(c0, s0, illum, grid, tg)
    pert = perturbation_pair(grid)
    data = apply_jacobian(bg, pert)
    print(f"[{tag}] nt={tg.n_steps} |data|={data_norm(data, tg, grid.h):.4e}",
          flush=True)
    t0 = time.time()
    top, _ = estimate_operator_norm(bg, n_iters=30, seed=11)
    print(f"[{tag}] sigma_hat={top:.4e} ({time.time()-t0:.0f}s)", flush=True)
    step = 0.9 / top ** 2
    recon, info = landweber_solve(bg, data, step, iters,
                                  target_relative_residual=1e-2)
    rels = info["relative_residuals"]
    below = [i for i, r in enumerate(rels) if r <= 1e-2]
    cross = below[0] if below else None
    for k in range(0, len(rels), 50):
        print(f"[{tag}] it={k:3d} rel={rels[k]:.4e}", flush=True)
    print(f"[{tag}] stop={info['stop']} iters={info['iterations']} "
          f"final={rels[-1]:.4e} cross={cross} t={time.time()-t0:.0f}s",
          flush=True)


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    jobs = {
        # decisive: does the spurious basin vanish at T=2?
        "A": dict(tag="exp2 T2 cg15 o40", experiment=2, n=65,
                  outer_cap=40, cg_cap=15, final_time=2.0),
        # study 1 under the same lever, long leash to find the crossing
        "B": dict(tag="exp1 T2 cg15 o150", experiment=1, n=65,
                  outer_cap=150, cg_cap=15, final_time=2.0,
                  report_every=10),
        # fallback if A still stalls
        "C": dict(tag="exp2 T1.5 cg15 o40", experiment=2, n=65,
                  outer_cap=40, cg_cap=15, final_time=1.5),
        # joint study sanity at T=2 (thresholds 0.85/1.4)
        "D": dict(tag="exp4 T2 cg10 o80", experiment=4, n=65,
                  outer_cap=80, cg_cap=10, final_time=2.0,
                  report_every=10),
    }
    for key, kw in jobs.items():
        if which == "all" or key in which:
            if key == "C":
                continue  # only run on demand
            lm_probe(**kw)
    if which == "all" or "L" in which:
        landweber_probe("lw T2", final_time=2.0)
