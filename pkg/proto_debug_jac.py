"""Isolate the linear-in-eps defect in the Jacobian (scratch)."""
import numpy as np

from qpat.grid import build_grid
from qpat.forward import default_illuminations, stacked_forward, data_norm
from qpat.linearized import build_background, apply_jacobian
from qpat.wave import build_time_grid
from proto_bench import fourier_field, interior_taper, make_test_background


def probe(direction):
    n = 17
    g, tg, bg, taper = make_test_background(n, tapered=True, n_illum=1)
    dc = fourier_field(g, 31) * taper * 0.05
    ds = fourier_field(g, 32) * taper * 0.02
    if direction == "speed":
        delta = np.stack([dc, np.zeros_like(dc)])
    elif direction == "absorption":
        delta = np.stack([np.zeros_like(dc), ds])
    else:
        delta = np.stack([dc, ds])
    jd = apply_jacobian(bg, delta)
    print(f"--- {direction}: |Jd| = {data_norm(jd, tg, g.h):.6e}")
    for eps in (1e-2, 1e-3, 1e-4):
        pert = stacked_forward(bg.sound_speed + eps * delta[0],
                               bg.absorption + eps * delta[1],
                               bg.illuminations, g, tg)
        rem = data_norm(pert - bg.datum - eps * jd, tg, g.h) / eps
        fd_dir = (pert - bg.datum) / eps
        print(f"  eps={eps:g}  remainder/eps={rem:.6e}  "
              f"|fd - Jd|/|Jd| = {data_norm(fd_dir - jd, tg, g.h) / data_norm(jd, tg, g.h):.3e}")


probe("speed")
probe("absorption")
probe("both")
