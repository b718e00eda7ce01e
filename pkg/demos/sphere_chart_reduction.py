"""Solving on the sphere in coordinates versus in the ambient space.

Run with ``python3 demos/sphere_chart_reduction.py``.
"""

import numpy as np

from roughman import QSpec, SignalConfig, chart_reduce, ito_wiener_lift, reduced_vs_ambient
from roughman.refinement import LEVELS, levels_of, observed_order
from roughman.scenarios import sphere_so3

s = sphere_so3()
x = np.eye(3)
g = chart_reduce(s.fields, s.chart, x)
z = np.array([0.1, -0.2])
print("so(3) noise with drift -y on the unit sphere, north-pole graph chart.")
print(f"reduced drift g0({z[0]}, {z[1]}) = {np.round(g.f0(z), 6)}, reduced noise g =\n{np.round(g.fmat(z), 4)}\n")

fine = ito_wiener_lift(QSpec([1.0, 1.0, 1.0]), SignalConfig(N=LEVELS[-1], seed=2))
gaps = []
for n, p in levels_of(fine).items():
    cmp = reduced_vs_ambient(s.fields, s.chart, p, s.xi, x)
    gaps.append(cmp.gap)
    left = "" if cmp.exit_index is None else f" (compared up to chart exit at t={p.times[cmp.exit_index]:.3f})"
    print(f"N={n:5d}  max |phi(Z) - Y| = {cmp.gap:.3e}{left}")
print(f"\nobserved order {observed_order(LEVELS, gaps):.2f}")
