"""Line scan init -> truth for study 2 at the acceptance grid.  Scratch."""
import time
import numpy as np
from qpat.experiments import _study_setup
from qpat.forward import data_norm, stacked_forward, default_illuminations
from qpat.grid import build_grid, build_trimesh
from qpat.wave import build_time_grid

n = 129
grid = build_grid(n)
illum = default_illuminations(grid)
truth, bounds, cfg = _study_setup(2, grid)
tg = build_time_grid(4.0, grid.h, bounds.c_hi)
print(f"nt={tg.n_steps}", flush=True)
t0 = time.time()
data = stacked_forward(truth[0], truth[1], illum, grid, tg)
print(f"truth forward {time.time()-t0:.1f}s", flush=True)
mesh = build_trimesh(grid)
init_c = np.full((n, n), 0.9)
for t in np.linspace(0.0, 1.0, 13):
    c = (1.0 - t) * init_c + t * truth[0]
    pred = stacked_forward(c, truth[1], illum, grid, tg, mesh=mesh)
    f = 0.5 * data_norm(pred - data, tg, grid.h) ** 2
    print(f"[scan129] t={t:.3f} F={f:.6e}", flush=True)
# also the center-down direction: lower the center toward the 0.8 bound
bump = truth[0] - 1.0   # the gaussian profile, peak 0.2
for a in (0.25, 0.5, 1.0):
    c = init_c - a * 0.5 * bump   # center 0.9 - a*0.1
    pred = stacked_forward(c, truth[1], illum, grid, tg, mesh=mesh)
    f = 0.5 * data_norm(pred - data, tg, grid.h) ** 2
    print(f"[scan129] down a={a} center={c[64,64]:.3f} F={f:.6e}", flush=True)
