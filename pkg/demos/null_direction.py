"""Evaluating the maximum-principle inequality at a null direction.

Build R with R - mu (g*g) bisectionally nonnegative and zero at a known
direction, rotate to that direction, and compare the reaction of
S_{1 1bar 1 1bar} against the lower bound the estimate predicts. In
dimension 2 the two agree exactly; above that the bound is strict.
"""
from krflab import constant_curvature_tensor
from krflab.reaction import null_direction_diagnostics, s_reaction_bound_check, tight_pinched_instance

for n in (2, 3, 4):
    R, e1 = tight_pinched_instance(n, mu=0.15, seed=n)
    d = null_direction_diagnostics(R, 0.15, direction=e1)
    chk = s_reaction_bound_check(R, 0.15, mu_prime=0.0, direction=e1)
    print(f"n={n}: lambda={d.lam.round(4)}  A={d.A:.4f}  squeeze {d.squeeze_lhs:.4f} >= {d.squeeze_rhs:.4f}")
    print(f"      direct {chk.direct_value:+.6f} vs bound {chk.lower_bound_value:+.6f}  satisfied={chk.satisfied}")

fs = s_reaction_bound_check(constant_curvature_tensor(2, 2 / 3), 1 / 3, 0.0)
print("FS at mu = 1/3: degenerate =", fs.degenerate)
