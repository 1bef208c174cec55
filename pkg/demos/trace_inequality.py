"""When does tr(AC) >= |B|^2 + |Bt|^2 hold for a nonnegative block form?

Not always: |x_1 + y_2|^2 is nonnegative yet has tr(AC) = 0. At a null
direction of a nonnegative curvature-type tensor, though, the second
variation form satisfies it with equality, and that is the case the
curvature estimate needs.
"""
import numpy as np

from krflab.quadform import BlockQuadraticForm, trace_inequality_check, lemma_fuzz, second_variation_form
from krflab.reaction import pinched_tensor, tight_pinched_instance

Z = np.zeros((2, 2))
f = BlockQuadraticForm(2, np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), Z, np.array([[0, 1.0], [0, 0]]))
chk = trace_inequality_check(f)
print(f"|x1 + y2|^2: tr(AC) = {chk.lhs}, |B|^2 + |Bt|^2 = {chk.rhs}, holds = {chk.holds}")
print(f"  the weaker tr(A) tr(C) = {chk.trace_product} does bound it")

for sampler in ("general", "second-variation"):
    s = lemma_fuzz(3, 2000, 0, sampler=sampler)
    print(f"{sampler:>17}: {s.violations} violations in {s.samples} forms, worst slack {s.worst_slack:+.3e}")

R, e1 = tight_pinched_instance(3, 0.1, seed=4)
chk = trace_inequality_check(second_variation_form(pinched_tensor(R, 0.1), e1), tol=1e-9)
print(f"one null-direction form: lhs = {chk.lhs:.6f}, rhs = {chk.rhs:.6f}")
