"""Probe queue: Landweber window/phantom variants at 65, then 129 cost and
validation runs for the LM studies.  Scratch only."""
import time

import numpy as np

from proto_t3 import lm_probe
from qpat.experiments import gaussian_bump
from qpat.forward import data_norm, default_illuminations
from qpat.grid import build_grid
from qpat.linearized import (apply_jacobian, build_background,
                             estimate_operator_norm, landweber_solve)
from qpat.wave import build_time_grid


def make_pair(grid, width, c_amp=0.1, s_amp=0.03):
    x, y = grid.coords()
    out = np.empty((2, grid.n, grid.n))
    out[0] = c_amp * gaussian_bump(x, y, (0.7, 1.3), width)
    out[1] = s_amp * gaussian_bump(x, y, (1.3, 0.7), width)
    return out


def lw_probe(tag, final_time, width, n=65, iters=500, s_amp=0.03):
    grid = build_grid(n)
    illum = default_illuminations(grid)
    tg = build_time_grid(final_time, grid.h, 1.0)
    bg = build_background(np.full((n, n), 1.0), np.full((n, n), 0.1),
                          illum, grid, tg)
    pert = make_pair(grid, width, s_amp=s_amp)
    data = apply_jacobian(bg, pert)
    print(f"[{tag}] nt={tg.n_steps} |data|={data_norm(data, tg, grid.h):.4e}",
          flush=True)
    t0 = time.time()
    top, _ = estimate_operator_norm(bg)
    print(f"[{tag}] sigma_hat={top:.4e} ({time.time()-t0:.0f}s)", flush=True)
    step = 0.9 / top ** 2
    recon, info = landweber_solve(bg, data, step, iters,
                                  target_relative_residual=1e-2)
    rels = info["relative_residuals"]
    below = [i for i, r in enumerate(rels) if r <= 1e-2]
    cross = below[0] if below else None
    for k in range(0, len(rels), 100):
        print(f"[{tag}] it={k:3d} rel={rels[k]:.4e}", flush=True)
    print(f"[{tag}] stop={info['stop']} n_rel={len(rels)} "
          f"final={rels[-1]:.4e} cross={cross} t={time.time()-t0:.0f}s",
          flush=True)


if __name__ == "__main__":
    lw_probe("lwB T6 w0.3", 6.0, 0.3)
    lw_probe("lwA T4 w0.45", 4.0, 0.45)
    lw_probe("lwC T6 w0.45", 6.0, 0.45)
    lw_probe("lwD T4 w0.6", 4.0, 0.6)
    lm_probe("exp1cost 129 T1.25", 1, 129, 6, 15, final_time=1.25,
             report_every=1)
    lm_probe("exp1cost 129 T2", 1, 129, 6, 15, final_time=2.0,
             report_every=1)
    lm_probe("exp2val 129 T1", 2, 129, 40, 15, final_time=1.0,
             report_every=2)
    print("queue done", flush=True)
