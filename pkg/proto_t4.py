"""Short single-transit windows for study 2.  Scratch."""
from proto_t3 import lm_probe

for T in (1.0, 1.25, 1.5):
    lm_probe(f"exp2 T{T} cg15 o40", 2, 65, outer_cap=40, cg_cap=15,
             final_time=T, report_every=5)
