"""Reaction part of the curvature evolution and null-direction diagnostics.

``box_reaction`` is the evolution operator with the Laplacian removed:

    Q(A) + A - 1/2 (Ric.A + A.Ric terms on all four slots),

where ``Q(A)_{ijkl} = A_{ij pq} A_{qp kl} - A_{ip kq} A_{pj ql} + A_{il pq} A_{qp kj}``
and Ric is the Ricci contraction of the tensor itself. Integrating it
pointwise gives the ODE whose invariant sets the maximum principle transfers
to the flow.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import optimize, rk45
from .curvature import (
    KahlerCurvatureTensor,
    cone_reports,
    gg_tensor,
    holomorphic_sectional,
    symmetry_defects,
    traces,
)
from .errors import DiagonalizationFailure, NotTight, SymmetryDrift

TIGHT_TOL = 1e-6
DRIFT_TOL = 1e-9
DEGENERATE_TOL = 1e-9


def quadratic_part(A):
    a = np.asarray(A)
    return (
        np.einsum("ijpq,qpkl->ijkl", a, a, optimize=True)
        - np.einsum("ipkq,pjql->ijkl", a, a, optimize=True)
        + np.einsum("ilpq,qpkj->ijkl", a, a, optimize=True)
    )


def ricci_terms(ric, A):
    """``Ric_ip A_pjkl + Ric_pj A_ipkl + Ric_kp A_ijpl + Ric_pl A_ijkp``."""
    a = np.asarray(A)
    return (
        np.einsum("ip,pjkl->ijkl", ric, a)
        + np.einsum("pj,ipkl->ijkl", ric, a)
        + np.einsum("kp,ijpl->ijkl", ric, a)
        + np.einsum("pl,ijkp->ijkl", ric, a)
    )


def box_reaction(A, ric=None):
    """Reaction operator applied to ``A``; ``ric`` defaults to A's own Ricci form."""
    a = np.asarray(A)
    if ric is None:
        ric = np.einsum("ijkk->ij", a)
    return quadratic_part(a) + a - 0.5 * ricci_terms(ric, a)


def unitary_frame_reaction(A):
    """Reaction in a frame kept unitary along the evolving metric: ``Q(A) - A``."""
    return quadratic_part(A) - np.asarray(A)


def pinched_tensor(R, mu):
    """``S = R - mu (g*g)``."""
    ent = np.asarray(R)
    return KahlerCurvatureTensor(ent.shape[0], ent - mu * gg_tensor(ent.shape[0]))


@dataclass(eq=False)
class ReactionTrajectory:
    times: np.ndarray
    tensors: list
    restarts: int = optimize.DEFAULT_RESTARTS
    seed: int = 0

    @cached_property
    def bounds(self):
        """CurvatureBounds at every stored time (computed on first access)."""
        return cone_reports(self.tensors, restarts=self.restarts, seed=self.seed)

    def ricci_min(self):
        return np.array([np.linalg.eigvalsh(traces(t)[0])[0] for t in self.tensors])

    def distance_to(self, R):
        ref = np.asarray(R)
        return np.array([np.max(np.abs(np.asarray(t) - ref)) for t in self.tensors])


def integrate_reaction(
    R0, t_span, tol=1e-9, t_eval=None, samples=21, frame="fixed", restarts=None, seed=0
):
    """Integrate ``dR/dt = box_reaction(R)`` and sample the trajectory.

    ``frame="fixed"`` integrates the operator as written; ``frame="unitary"``
    uses :func:`unitary_frame_reaction` instead. Every sampled state is
    checked against the symmetry identities at 1e-9.
    """
    r0 = np.asarray(R0, dtype=complex)
    n = r0.shape[0]
    shape = r0.shape
    if frame not in ("fixed", "unitary"):
        raise ValueError(f"unknown frame {frame!r}")
    f = box_reaction if frame == "fixed" else unitary_frame_reaction
    if t_eval is None:
        t_eval = np.linspace(t_span[0], t_span[1], samples)
    t_eval = np.asarray(t_eval, dtype=float)
    sol = rk45.integrate(
        lambda t, y: f(y.reshape(shape)).ravel(), t_span, r0.ravel(), tol=tol, t_eval=t_eval
    )
    states = sol(t_eval)
    tensors = []
    for t, y in zip(t_eval, states):
        arr = y.reshape(shape)
        for name, (idx, mag) in symmetry_defects(arr).items():
            if mag > DRIFT_TOL:
                raise SymmetryDrift(f"{name} symmetry drifted by {mag:.3e} at t = {t:.6g}, {idx}")
        tensors.append(KahlerCurvatureTensor(n, arr))
    return ReactionTrajectory(
        t_eval, tensors, restarts=restarts or optimize.DEFAULT_RESTARTS, seed=seed
    )


def scalar_reaction_ode(c, n):
    """For ``R = (c/2)(g*g)`` the reaction closes to ``c' = c (1 - (n+1) c / 2)``."""
    return c * (1.0 - 0.5 * (n + 1) * c)


def ricci_null_sum(R):
    """``sum_{j>=2} R_{1 1bar j jbar} Ric_{j jbar}`` in the Ricci eigenframe, lowest eigenvalue first.

    This is the reaction of the smallest Ricci eigenvalue at a point where it
    vanishes; returns ``(sum, lowest eigenvalue)``.
    """
    ent = np.asarray(R)
    n = ent.shape[0]
    ric, _ = traces(ent)
    w, vecs = np.linalg.eigh(ric)
    rot = np.asarray(KahlerCurvatureTensor(n, ent).rotated(vecs))
    bis = np.einsum("jj->j", rot[0, 0]).real
    return float(np.dot(bis[1:], w[1:])), float(w[0])


def householder_frame(v):
    """Unitary matrix whose first column is the unit vector ``v``."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    n = v.size
    beta = np.exp(1j * np.angle(v[0])) if abs(v[0]) > 0 else 1.0
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    w = v - beta * e1
    nw = np.linalg.norm(w)
    h = np.eye(n, dtype=complex)
    if nw > 1e-15:
        h -= 2.0 * np.outer(w, w.conj()) / nw**2
    # h maps beta e1 to v; fold the phase into the first column
    h[:, 0] *= beta
    return h


@dataclass(eq=False)
class NullDiagnostics:
    """Null-direction data for ``S = R - mu (g*g)``.

    ``squeeze_rhs`` is the Cauchy-Schwarz bound ``2/(n-1) (A - (n+1) mu)^2``
    for ``squeeze_lhs = 2 sum_{k>=2} (lambda_k - mu)^2``. The quantity
    ``2/(n-1) (A - 2 mu)^2`` that enters the final lower bound is kept in
    ``squeeze_rhs_2mu``; it is not a lower bound for ``squeeze_lhs``.
    """

    direction: np.ndarray
    frame: np.ndarray
    lam: np.ndarray
    A: float
    squeeze_lhs: float
    squeeze_rhs: float
    squeeze_rhs_2mu: float
    degenerate: bool
    null_value: float
    off_diagonal: float = field(default=0.0)

    @property
    def holds(self):
        return self.squeeze_lhs >= self.squeeze_rhs - 1e-9


def null_direction_diagnostics(R, mu, restarts=optimize.DEFAULT_RESTARTS, seed=0, direction=None):
    """Rotate to the null direction of ``S = R - mu (g*g)`` and read off the eigen-data.

    ``direction`` skips the search when the null direction is known.
    """
    ent = np.asarray(R)
    n = ent.shape[0]
    S = pinched_tensor(ent, mu)
    if direction is None:
        res = optimize.minimize_holsec(np.asarray(S)[None], restarts=restarts, seed=seed)
        val, v = float(res.values[0]), res.certificates[0]
    else:
        v = np.asarray(direction, dtype=complex)
        v = v / np.linalg.norm(v)
        val = holomorphic_sectional(S, v)
    if abs(val) > TIGHT_TOL:
        raise NotTight(f"min holomorphic sectional of R - mu(g*g) is {val:.3e}, not 0")
    u = householder_frame(v)
    rot = KahlerCurvatureTensor(n, ent).rotated(u)
    m = np.asarray(rot)[0, 0]  # R_{1 1bar k lbar}
    m = 0.5 * (m + m.conj().T)
    off = float(np.max(np.abs(m[0, 1:]))) if n > 1 else 0.0
    if off > 10 * np.sqrt(TIGHT_TOL):
        raise DiagonalizationFailure(
            f"R_(1 1bar 1 kbar) = {off:.3e} off the null direction; e1 is not critical"
        )
    try:
        w, vecs = np.linalg.eigh(m[1:, 1:])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh on Hermitian input
        raise DiagonalizationFailure(str(exc)) from exc
    frame = u.copy()
    frame[:, 1:] = u[:, 1:] @ vecs
    lam = np.concatenate([[m[0, 0].real], w])
    a = float(np.trace(m).real)
    lhs = 2.0 * float(np.sum((w - mu) ** 2))
    rhs = 2.0 / (n - 1) * (a - (n + 1) * mu) ** 2
    rhs2 = 2.0 / (n - 1) * (a - 2 * mu) ** 2
    degenerate = bool(np.all(np.abs(w - mu) <= DEGENERATE_TOL))
    return NullDiagnostics(v, frame, lam, a, lhs, rhs, rhs2, degenerate, val, off)


def chain_lower_bound(A, mu, mu_prime, n):
    """``2/(n-1) (A - 2 mu)^2 + 4 mu^2 - 2 mu - 2 mu'``."""
    return 2.0 / (n - 1) * (A - 2 * mu) ** 2 + 4 * mu**2 - 2 * mu - 2 * mu_prime


def nu_lower_bound(nu, mu_prime, n):
    """``2/(n-1) nu^2 - 2 mu'``, valid when ``A - 2 mu >= nu > 0``."""
    return 2.0 / (n - 1) * nu**2 - 2 * mu_prime


@dataclass(eq=False)
class ReactionBoundCheck:
    lower_bound_value: float
    direct_value: float
    satisfied: bool
    degenerate: bool
    nu_bound: float = None
    diagnostics: NullDiagnostics = None


def s_reaction_bound_check(R, mu, mu_prime, nu=None, **kw):
    """Compare the reaction of ``S_{1 1bar 1 1bar}`` at the null direction with its lower bound.

    The direct value is ``box(R)_{1111} - d/dt[mu (g*g)]_{1111}`` where the
    metric moves by ``g - Ric``: that is ``box(R)_{1111} - 2 mu' - 4 mu (1 - A)``.
    """
    ent = np.asarray(R)
    n = ent.shape[0]
    d = null_direction_diagnostics(ent, mu, **kw)
    rot = np.asarray(KahlerCurvatureTensor(n, ent).rotated(d.frame))
    direct = float(box_reaction(rot)[0, 0, 0, 0].real) - 2 * mu_prime - 4 * mu * (1 - d.A)
    chain = chain_lower_bound(d.A, mu, mu_prime, n)
    nb = nu_lower_bound(nu, mu_prime, n) if nu is not None and mu < 0 else None
    return ReactionBoundCheck(chain, direct, direct >= chain - 1e-8, d.degenerate, nb, d)


def tight_pinched_instance(n, mu, seed, rank=None, rotate=True):
    """Tensor ``R`` with ``R - mu (g*g) >= 0`` bisectionally and a null direction.

    ``S = sum_a c^a (x) conj(c^a)`` for random symmetric ``c^a`` with
    ``c^a_{11} = 0``, so ``S(X, Xb, Y, Yb) = sum_a |c^a(X, Y)|^2`` vanishes at
    ``X = Y = e1``. With ``rotate`` the frame is scrambled by a random unitary
    and the null direction returned alongside.
    """
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(2, n * (n + 1) // 2 + 1)) if rank is None else rank
    c = rng.standard_normal((rank, n, n)) + 1j * rng.standard_normal((rank, n, n))
    c = 0.5 * (c + c.transpose(0, 2, 1))
    c[:, 0, 0] = 0.0
    c /= np.sqrt(rank * n)
    s = np.einsum("aik,ajl->ijkl", c, c.conj())
    R = KahlerCurvatureTensor(n, s + mu * gg_tensor(n))
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    if not rotate:
        return R, e1
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    # components in the new frame: the old e1 has coordinates q^* e1
    return R.rotated(q), q.conj().T @ e1
