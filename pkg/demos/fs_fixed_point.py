"""The Fubini-Study metric does not move.

Start the U(n)-invariant flow on CP^2 at the Fubini-Study potential and
watch every curvature bound stay put. The reaction operator vanishes on
the matching constant-curvature tensor too, in every dimension.
"""
import numpy as np

from krflab import constant_curvature_tensor
from krflab.flow import FlowConfig, run_flow
from krflab.reaction import box_reaction

for n in (2, 3, 4):
    fs = constant_curvature_tensor(n, 2 / (n + 1))
    print(f"n={n}: max |box(FS)| = {np.abs(box_reaction(fs)).max():.2e}")

rec = run_flow(FlowConfig(n=2, N=64, t_end=2.0, cadence=0.5))
print("\n   t   scalar  ricci_min  holsec_min  orthbis_min  mu_star")
for row in rec.rows():
    t, smin, _, ric, hs, ob, mu = row[:7]
    print(f"{t:4.1f}  {smin:7.4f}  {ric:9.6f}  {hs:10.6f}  {ob:11.6f}  {mu:7.4f}")
