"""Where does the 65^2 Landweber residual cross 1e-2, and which block is slow."""
import numpy as np

from qpat.grid import build_grid
from qpat.wave import build_time_grid
from qpat.forward import default_illuminations
from qpat.linearized import (build_background, apply_jacobian,
                             estimate_operator_norm, landweber_solve)


def gauss(grid, cx, cy, width):
    x, y = grid.coords()
    return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * width ** 2))


n = 65
g = build_grid(n)
tg = build_time_grid(4.0, g.h, 1.0)
bg = build_background(np.ones((n, n)), np.full((n, n), 0.1),
                      default_illuminations(g), g, tg)
sigma_hat, _ = estimate_operator_norm(bg, n_iters=30, seed=0)
tau = 0.9 / sigma_hat ** 2
print(f"sigma_hat={sigma_hat:.2f} tau={tau:.3e}")

speed = 0.1 * gauss(g, 0.7, 1.3, 0.3)
absorb = 0.03 * gauss(g, 1.3, 0.7, 0.3)
zero = np.zeros_like(speed)

for tag, d in [("speed-only", np.stack([speed, zero])),
               ("absorb-only", np.stack([zero, absorb]))]:
    data = apply_jacobian(bg, d)
    delta, info = landweber_solve(bg, data, tau, 500,
                                  target_relative_residual=1e-2)
    rel = info["relative_residuals"]
    print(f"{tag}: stop={info['stop']} iters={len(rel)-1} "
          f"final rel={rel[-1]:.4e}")

data = apply_jacobian(bg, np.stack([speed, absorb]))
delta, info = landweber_solve(bg, data, tau, 2000,
                              target_relative_residual=1e-2)
rel = info["relative_residuals"]
print(f"both: stop={info['stop']} iters={len(rel)-1} final={rel[-1]:.4e}")
for k in [400, 500, 600, 700, 800, 1000, 1200, 1500, 2000]:
    if k < len(rel):
        print(f"  iter {k:4d}  rel {rel[k]:.4e}")
