import time

import numpy as np

from qpat.experiments import run_experiment

for exp in (1, 2, 4):
    t0 = time.time()
    rep = run_experiment(exp, grid_size=65, kappas=(0.0,))
    dt = time.time() - t0
    r = rep.runs[0]
    print(f"exp {exp} at 65^2: {dt:.1f}s  speed_err={r.speed_error}  "
          f"absorb_err={r.absorption_error}  stop={r.stop}", flush=True)
    f_first = r.log[0].objective_value
    f_last = r.log[-1].objective_value
    print(f"   F {f_first:.3e} -> {f_last:.3e}  entries={len(r.log)}",
          flush=True)
