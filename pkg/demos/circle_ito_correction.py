"""Rotation noise on the unit circle: when does the circle stay invariant?

Run with ``python3 demos/circle_ito_correction.py``.
"""

import numpy as np

from roughman import QSpec, SignalConfig, check_invariance, distance_monitor, geometric_fbm_lift, ito_wiener_lift, solve
from roughman.scenarios import circle_rot, circle_rot_corrected

cfg = SignalConfig(N=1024, refine=16, seed=3)
ito = ito_wiener_lift(QSpec([1.0]), cfg)
fbm = geometric_fbm_lift(QSpec([1.0], hurst=0.4), cfg)

print("dY = R Y dX with R the rotation generator, started at (1, 0).\n")

# Itô noise carries a bracket [X]_t = t, so the drift must absorb -1/2 (Df f) x.
for s, x, label in [(circle_rot(), 1.0, "no drift, Itô driver"),
                    (circle_rot_corrected(), 1.0, "drift -y/2, Itô driver"),
                    (circle_rot(), 0.0, "no drift, geometric fBm H=0.4")]:
    p = ito if x else fbm
    v = check_invariance(s.fields, s.chart, [[x]])
    d = distance_monitor(solve(s.fields, p, s.xi), s.chart)
    print(f"{label:32s} verdict={v.invariant!s:5s} residual={v.max_residual:.2e} "
          f"max | |Y|-1 | = {d.max_defect:.3e}")

print("\nWithout the correction the radius drifts like exp(t/2):")
s = circle_rot()
sol = solve(s.fields, ito, s.xi)
for k in (256, 512, 768, 1024):
    print(f"  t={sol.times[k]:.2f}  |Y|={np.linalg.norm(sol.values[k]):.4f}  exp(t/2)={np.exp(sol.times[k] / 2):.4f}")
