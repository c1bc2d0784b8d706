"""Split the gradient-check error into Jacobian-defect vs adjoint-pairing parts."""
import numpy as np

from qpat.forward import stacked_forward, data_dot, data_norm
from qpat.linearized import build_background, apply_jacobian, apply_adjoint, pair_dot
from proto_bench import fourier_field, make_test_background


n = 33
g, tg, bg, taper = make_test_background(n, tapered=True)
x, y = g.coords()
truth_c = bg.sound_speed + 0.05 * taper * np.exp(
    -((x - 0.8) ** 2 + (y - 1.2) ** 2) / (2 * 0.3 ** 2))
truth_s = bg.absorption + 0.02 * taper * np.exp(
    -((x - 1.2) ** 2 + (y - 0.8) ** 2) / (2 * 0.3 ** 2))
data = stacked_forward(truth_c, truth_s, bg.illuminations, g, tg)
resid = bg.datum - data
print("|resid| =", data_norm(resid, tg, g.h),
      "F0 =", 0.5 * data_dot(resid, resid, tg, g.h))
grad = apply_adjoint(bg, resid)

for trial in range(3):
    d = np.stack([fourier_field(g, 500 + trial) * taper * 0.05,
                  fourier_field(g, 600 + trial) * taper * 0.01])
    eps = 1e-4
    def F(t):
        pert = stacked_forward(bg.sound_speed + t * d[0],
                               bg.absorption + t * d[1],
                               bg.illuminations, g, tg)
        r = pert - data
        return 0.5 * data_dot(r, r, tg, g.h)
    fd = (F(eps) - F(-eps)) / (2 * eps)
    jd = apply_jacobian(bg, d)
    lhs = data_dot(jd, resid, tg, g.h)
    rhs = pair_dot(d, grad, bg.mass)
    print(f"dir {trial}: fd={fd:+.6e}  <Jd,z>={lhs:+.6e}  <d,J*z>={rhs:+.6e}")
    print(f"   fd vs <Jd,z>: {abs(fd-lhs)/abs(fd):.3e}   "
          f"<Jd,z> vs <d,J*z>: {abs(lhs-rhs)/abs(lhs):.3e}")
    print(f"   |Jd|*|z| = {data_norm(jd, tg, g.h) * data_norm(resid, tg, g.h):.3e}")
