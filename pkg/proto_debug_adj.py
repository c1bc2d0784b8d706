"""Which block and which part of y breaks the adjoint pairing."""
import numpy as np

from qpat.forward import stacked_forward, data_dot, data_norm
from qpat.linearized import build_background, apply_jacobian, apply_adjoint, pair_dot
from proto_bench import fourier_field, fourier_series_time_boundary, make_test_background


n = 33
g, tg, bg, taper = make_test_background(n, tapered=True)
x, y = g.coords()
truth_c = bg.sound_speed + 0.05 * taper * np.exp(
    -((x - 0.8) ** 2 + (y - 1.2) ** 2) / (2 * 0.3 ** 2))
truth_s = bg.absorption + 0.02 * taper * np.exp(
    -((x - 1.2) ** 2 + (y - 0.8) ** 2) / (2 * 0.3 ** 2))
data = stacked_forward(truth_c, truth_s, bg.illuminations, g, tg)
resid = bg.datum - data

dc = fourier_field(g, 500) * taper * 0.05
ds = fourier_field(g, 600) * taper * 0.01
zero = np.zeros_like(dc)


def pairing(d, z, tag):
    jd = apply_jacobian(bg, d)
    adj = apply_adjoint(bg, z)
    lhs = data_dot(jd, z, tg, g.h)
    rhs = pair_dot(d, adj, bg.mass)
    rel = abs(lhs - rhs) / max(abs(lhs), 1e-30)
    norm = abs(lhs - rhs) / (data_norm(jd, tg, g.h) * data_norm(z, tg, g.h))
    print(f"{tag}: lhs={lhs:+.6e} rhs={rhs:+.6e} rel={rel:.3e} normed={norm:.3e}")


smooth = np.stack([fourier_series_time_boundary(g, tg, 900 + j)
                   for j in range(bg.n_illuminations)])

print("== smooth y ==")
pairing(np.stack([dc, zero]), smooth, "speed block ")
pairing(np.stack([zero, ds]), smooth, "absorb block")

print("== y = resid ==")
pairing(np.stack([dc, zero]), resid, "speed block ")
pairing(np.stack([zero, ds]), resid, "absorb block")

print("== y = resid, endpoint levels zeroed ==")
clipped = resid.copy()
clipped[:, 0, :] = 0.0
clipped[:, -1, :] = 0.0
pairing(np.stack([dc, zero]), clipped, "speed block ")
pairing(np.stack([zero, ds]), clipped, "absorb block")

print("== y = resid, first/last 5 levels zeroed ==")
clipped = resid.copy()
clipped[:, :5, :] = 0.0
clipped[:, -5:, :] = 0.0
pairing(np.stack([dc, zero]), clipped, "speed block ")
pairing(np.stack([zero, ds]), clipped, "absorb block")

print("== resid level-0 magnitude profile ==")
per_level = np.sqrt((resid ** 2).sum(axis=(0, 2)))
print("levels 0..6:", np.array2string(per_level[:7], precision=3))
print("max over levels:", per_level.max(), "at", per_level.argmax(), "of", tg.n_steps)
