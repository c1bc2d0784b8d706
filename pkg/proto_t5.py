"""Window choices for studies 1/4 and the Landweber gate.  Scratch."""
from proto_t3 import landweber_probe, lm_probe

lm_probe("exp1 T1.25 cg15 o150", 1, 65, outer_cap=150, cg_cap=15,
         final_time=1.25, report_every=10)
lm_probe("exp1 T2 cg15 o150", 1, 65, outer_cap=150, cg_cap=15,
         final_time=2.0, report_every=10)
lm_probe("exp4 T1.5 cg10 o80", 4, 65, outer_cap=80, cg_cap=10,
         final_time=1.5, report_every=10)
lm_probe("exp4 T2 cg10 o80", 4, 65, outer_cap=80, cg_cap=10,
         final_time=2.0, report_every=10)
landweber_probe("lw T1.25", final_time=1.25)
landweber_probe("lw T2", final_time=2.0)
