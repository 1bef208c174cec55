"""Block Hermitian quadratic forms on C^n x C^n.

A form is

    Q(x, y) = A_{i jbar} x^i xbar^j + C_{k lbar} y^k ybar^l
              + 2 Re(B_{ij} x^i y^j + Bt_{i jbar} x^i ybar^j),

with A and C Hermitian. The trace inequality checked here is

    Re tr(A C) >= sum |B_ij|^2 + sum |Bt_ij|^2.

It holds on second-variation forms at null directions of nonnegative
curvature-type tensors (where it is an equality) but not for arbitrary
nonnegative forms: ``Q = |x_1 + y_2|^2`` has ``tr(A C) = 0`` and
``|Bt|^2 = 1``. The weaker ``tr(A) tr(C) >= |B|^2 + |Bt|^2`` does hold in
general and is reported next to it.
"""
from dataclasses import dataclass

import numpy as np

from .curvature import KahlerCurvatureTensor, pinching_mu_star, holomorphic_sectional
from .errors import NotAtMinimum, NotPSD

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BlockQuadraticForm:
    n: int
    A: np.ndarray
    C: np.ndarray
    B: np.ndarray
    Btilde: np.ndarray

    def __post_init__(self):
        for name in ("A", "C", "B", "Btilde"):
            m = np.array(getattr(self, name), dtype=complex)
            if m.shape != (self.n, self.n):
                raise ValueError(f"{name} must be {self.n}x{self.n}, got {m.shape}")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        for name in ("A", "C"):
            m = getattr(self, name)
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
                raise ValueError(f"{name} must be Hermitian")

    def __call__(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        q = (
            np.einsum("...i,ij,...j->...", x, self.A, x.conj())
            + np.einsum("...k,kl,...l->...", y, self.C, y.conj())
            + 2 * np.einsum("...i,ij,...j->...", x, self.B, y)
            + 2 * np.einsum("...i,ij,...j->...", x, self.Btilde, y.conj())
        )
        return q.real

    def gram(self):
        """Real symmetric matrix G with ``Q = w^T G w``, w = (Re x, Im x, Re y, Im y)."""
        n = self.n
        z = np.zeros((2 * n, 2 * n), dtype=complex)
        h = z.copy()
        h[:n, :n] = self.A.T
        h[n:, n:] = self.C.T
        h[n:, :n] = self.Btilde.T
        h[:n, n:] = self.Btilde.conj()
        k = z.copy()
        k[:n, n:] = self.B
        k[n:, :n] = self.B.T
        # Re(z^* H z) + Re(z^T K z) in the real coordinates (Re z, Im z)
        g = np.block(
            [
                [h.real + k.real, -h.imag - k.imag],
                [h.imag - k.imag, h.real - k.real],
            ]
        )
        g = 0.5 * (g + g.T)
        perm = np.concatenate(
            [np.arange(n), 2 * n + np.arange(n), n + np.arange(n), 3 * n + np.arange(n)]
        )
        return g[np.ix_(perm, perm)]

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.gram())[0])


def is_psd(form, tol=PSD_TOL):
    return form.min_eigenvalue() >= -tol


@dataclass(frozen=True)
class LemmaCheck:
    lhs: float
    rhs: float
    holds: bool
    trace_product: float  # tr(A) tr(C), an upper bound for rhs on any PSD form

    @property
    def slack(self):
        return self.lhs - self.rhs


def trace_inequality_check(form, tol=PSD_TOL):
    """``(Re tr(AC), |B|^2 + |Bt|^2, holds)``; requires a nonnegative form."""
    if not is_psd(form, tol):
        raise NotPSD(f"form has Gram eigenvalue {form.min_eigenvalue():.3e}")
    lhs = float(np.trace(form.A @ form.C).real)
    rhs = float(np.sum(np.abs(form.B) ** 2) + np.sum(np.abs(form.Btilde) ** 2))
    tp = float(np.trace(form.A).real * np.trace(form.C).real)
    return LemmaCheck(lhs, rhs, lhs >= rhs - tol, tp)


def form_from_factors(m1, m2, m3, m4):
    """Blocks of ``|m1 x + m2 ybar|^2 + |m3 x + m4 y|^2``."""
    n = m1.shape[1]
    A = m1.T @ m1.conj() + m3.T @ m3.conj()
    C = m2.conj().T @ m2 + m4.T @ m4.conj()
    A = 0.5 * (A + A.conj().T)
    C = 0.5 * (C + C.conj().T)
    return BlockQuadraticForm(n, A, C, m1.T @ m2.conj(), m3.T @ m4.conj())


def sample_psd_form(n, seed):
    """Nonnegative form ``|M1 x + M2 ybar|^2 + |M3 x + M4 y|^2`` with random M.

    Row counts are drawn from 1..2n, so rank-deficient forms appear too.
    """
    rng = np.random.default_rng(seed)
    r1, r2 = rng.integers(1, 2 * n + 1, size=2)

    def g(r):
        return rng.standard_normal((r, n)) + 1j * rng.standard_normal((r, n))

    return form_from_factors(g(r1), g(r1), g(r2), g(r2))


def saturation_probe(n, tol=1e-13):
    """Bisect ``eps`` in ``A = C = eps I, B = I, Bt = 0`` down to the nonnegativity edge.

    The form is nonnegative exactly for ``eps >= 1`` and the slack there is
    ``n (eps^2 - 1)``. Returns the final form and its lemma check.
    """
    eye = np.eye(n)
    zero = np.zeros((n, n))

    def form(eps):
        return BlockQuadraticForm(n, eps * eye, eps * eye, eye, zero)

    lo, hi = 0.0, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        # strict edge so the returned form is nonnegative to rounding
        if is_psd(form(mid), tol=1e-14):
            hi = mid
        else:
            lo = mid
    f = form(hi)
    return f, trace_inequality_check(f)


def second_variation_form(S, e1, restarts=32, seed=0, tol=1e-6):
    """Second variation of ``S(e1 + eps x, ., e1 + eps y, .)`` at eps = 0 as a block form.

    In a unitary frame whose first vector is ``e1``: ``A = S_{i jbar 1 1bar}``,
    ``C = S_{1 1bar k lbar}``, ``B = S_{i 1bar k 1bar}``, ``Bt = S_{i 1bar 1 lbar}``.
    ``e1`` must be a null direction of a bisectionally nonnegative ``S``.
    """
    ent = np.asarray(S)
    val = holomorphic_sectional(ent, e1)
    if abs(val) > tol:
        raise NotAtMinimum(f"S(e1, e1bar, e1, e1bar) = {val:.3e}, not 0")
    floor = pinching_mu_star(ent, restarts=restarts, seed=seed)
    if floor < -tol:
        raise NotAtMinimum(f"S takes bisectional ratio {floor:.3e} < 0, so e1 is not a minimum")
    return _null_form(ent, e1)


def _null_form(S, e1):
    from .reaction import householder_frame

    ent = np.asarray(S)
    n = ent.shape[0]
    s = np.asarray(KahlerCurvatureTensor(n, ent).rotated(householder_frame(e1)))
    A = 0.5 * (s[:, :, 0, 0] + s[:, :, 0, 0].conj().T)
    C = 0.5 * (s[0, 0] + s[0, 0].conj().T)
    return BlockQuadraticForm(n, A, C, s[:, 0, :, 0], s[:, 0, 0, :])


def direct_contraction(S, e1):
    """Both sides of the null-direction trace inequality contracted straight from ``S``.

    ``lhs = S_{1 1bar k lbar} S_{l kbar 1 1bar}``,
    ``rhs = sum |S_{1 kbar 1 jbar}|^2 + sum |S_{1 1bar j kbar}|^2``.
    """
    from .reaction import householder_frame

    ent = np.asarray(S)
    s = np.asarray(KahlerCurvatureTensor(ent.shape[0], ent).rotated(householder_frame(e1)))
    lhs = float(np.einsum("kl,lk->", s[0, 0], s[:, :, 0, 0]).real)
    rhs = float(np.sum(np.abs(s[0, :, 0, :]) ** 2) + np.sum(np.abs(s[0, 0]) ** 2))
    return lhs, rhs


@dataclass(frozen=True)
class FuzzSummary:
    samples: int
    violations: int
    worst_slack: float
    worst_seed: int
    first_violation_seed: int = None

    def as_dict(self):
        return {
            "samples": self.samples,
            "violations": self.violations,
            "worst_slack": self.worst_slack,
            "worst_seed": self.worst_seed,
            "first_violation_seed": self.first_violation_seed,
        }


def _second_variation_sample(n, seed):
    from .reaction import tight_pinched_instance

    S, e1 = tight_pinched_instance(n, 0.0, seed)
    return _null_form(S, e1)


SAMPLERS = {
    "general": sample_psd_form,
    "second-variation": _second_variation_sample,
}


def lemma_fuzz(n, samples, seed, sampler="general"):
    """Check the trace inequality on ``samples`` forms; seeds are ``seed, seed+1, ...``.

    The ``general`` sampler draws arbitrary nonnegative forms; the
    ``second-variation`` sampler draws forms arising at null directions of
    bisectionally nonnegative tensors (the setting the inequality is used in).
    """
    draw = SAMPLERS[sampler]
    violations = 0
    worst, worst_seed, first = np.inf, seed, None
    for s in range(seed, seed + samples):
        chk = trace_inequality_check(draw(n, s))
        scale = max(1.0, chk.trace_product)
        slack = chk.slack / scale
        if not chk.holds:
            violations += 1
            if first is None:
                first = s
        if slack < worst:
            worst, worst_seed = slack, s
    return FuzzSummary(samples, violations, float(worst), worst_seed, first)
