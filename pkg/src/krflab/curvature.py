"""Pointwise Kähler curvature tensors in a unitary frame.

A tensor is stored as a complex array ``R[i, j, k, l]`` standing for
``R_{i jbar k lbar}`` against the identity metric. Valid tensors satisfy

* Kähler symmetry ``R[i,j,k,l] == R[k,j,i,l] == R[i,l,k,j]``,
* reality ``R[i,j,k,l] == conj(R[j,i,l,k])``.

Extremal quantities (holomorphic sectional, orthogonal bisectional, pinching
constant) are found by batched Riemannian descent from quasi-random restarts;
see :mod:`krflab.optimize`.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import null_space

from . import optimize
from .errors import (
    DimensionTooSmall,
    NonConvergence,
    NotOrthogonal,
    SamplingBudgetExhausted,
    SymmetryViolation,
    ZeroVector,
)

VALIDATION_TOL = 1e-12
ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KahlerCurvatureTensor:
    n: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __mul__(self, s):
        return KahlerCurvatureTensor(self.n, self.entries * s)

    __rmul__ = __mul__

    def __add__(self, other):
        return KahlerCurvatureTensor(self.n, self.entries + np.asarray(other))

    def __sub__(self, other):
        return KahlerCurvatureTensor(self.n, self.entries - np.asarray(other))

    def rotated(self, u):
        """Components in the frame given by the columns of the unitary ``u``."""
        r = np.einsum(
            "abcd,ai,bj,ck,dl->ijkl", self.entries, u, u.conj(), u, u.conj(), optimize=True
        )
        return KahlerCurvatureTensor(self.n, r)


@lru_cache(maxsize=None)
def _gg(n):
    d = np.eye(n)
    t = np.einsum("ij,kl->ijkl", d, d) + np.einsum("il,kj->ijkl", d, d)
    t.setflags(write=False)
    return t


def gg_tensor(n):
    """The model tensor ``(g*g)_{i jbar k lbar} = d_ij d_kl + d_il d_kj``."""
    return _gg(n).astype(complex)


def symmetry_defects(arr):
    """Worst violation of each identity as ``{name: (index, magnitude)}``."""
    arr = np.asarray(arr)
    out = {}
    checks = {
        "kahler": [arr - arr.transpose(2, 1, 0, 3), arr - arr.transpose(0, 3, 2, 1)],
        "hermitian": [arr - arr.transpose(1, 0, 3, 2).conj()],
    }
    for name, diffs in checks.items():
        best = (None, 0.0)
        for d in diffs:
            a = np.abs(d)
            idx = np.unravel_index(np.argmax(a), a.shape)
            if a[idx] > best[1] or best[0] is None:
                best = (idx, float(a[idx]))
        out[name] = best
    return out


def validate_curvature(raw, n=None, tol=VALIDATION_TOL):
    """Check shape and symmetries of ``raw`` and wrap it as a tensor."""
    arr = np.asarray(raw, dtype=complex)
    n = arr.shape[0] if n is None else int(n)
    if n < 2:
        raise DimensionTooSmall(f"complex dimension must be >= 2, got {n}")
    if arr.shape != (n, n, n, n):
        raise ValueError(f"expected shape {(n,) * 4}, got {arr.shape}")
    # reality first: a broken conjugate pair is the more basic defect
    for name in ("hermitian", "kahler"):
        idx, mag = symmetry_defects(arr)[name]
        if mag > tol:
            raise SymmetryViolation(name, idx, mag)
    return KahlerCurvatureTensor(n, arr)


def project_kahler(arr):
    """Average over the symmetry group; the result satisfies both identities."""
    a = np.asarray(arr, dtype=complex)
    a = 0.5 * (a + a.transpose(2, 1, 0, 3))
    a = 0.5 * (a + a.transpose(0, 3, 2, 1))
    return 0.5 * (a + a.transpose(1, 0, 3, 2).conj())


def constant_curvature_tensor(n, c):
    """Tensor with constant holomorphic sectional curvature ``c``."""
    if n < 2:
        raise DimensionTooSmall(f"complex dimension must be >= 2, got {n}")
    return KahlerCurvatureTensor(n, 0.5 * c * gg_tensor(n))


def zero_tensor(n):
    return constant_curvature_tensor(n, 0.0)


def traces(R):
    """Ricci form ``sum_k R[i,j,k,k]`` and scalar curvature."""
    ent = np.asarray(R)
    ric = np.einsum("ijkk->ij", ent)
    ric = 0.5 * (ric + ric.conj().T)
    return ric, float(np.trace(ric).real)


def _check_nonzero(v):
    v = np.asarray(v, dtype=complex)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ZeroVector("direction must be nonzero")
    return v, nv


def bisectional(R, X, Y):
    """Unnormalized ``R(X, Xbar, Y, Ybar)``."""
    return float(
        np.einsum("ijkl,i,j,k,l->", np.asarray(R), X, np.conj(X), Y, np.conj(Y), optimize=True).real
    )


def holomorphic_sectional(R, v):
    v, nv = _check_nonzero(v)
    return bisectional(R, v, v) / nv**4


def orthogonal_bisectional(R, X, Y):
    X, nx = _check_nonzero(X)
    Y, ny = _check_nonzero(Y)
    inner = abs(np.vdot(Y, X)) / (nx * ny)
    if inner > ORTHO_TOL:
        raise NotOrthogonal(inner)
    return bisectional(R, X, Y) / (nx**2 * ny**2)


def _stack(tensors):
    return np.stack([np.asarray(t) for t in tensors])


def _raise_if_unconverged(res, what):
    if not res.converged.all():
        i = int(np.argmin(res.converged))
        raise NonConvergence(
            f"{what}: optimizer exceeded its iteration budget",
            best=float(res.values[i]),
            certificate=res.certificates[i],
        )


def min_holomorphic_sectional(R, restarts=optimize.DEFAULT_RESTARTS, seed=0):
    """``(value, unit direction)`` minimizing holomorphic sectional curvature."""
    res = optimize.minimize_holsec(_stack([R]), restarts=restarts, seed=seed)
    _raise_if_unconverged(res, "min_holomorphic_sectional")
    return float(res.values[0]), res.certificates[0]


def min_orthogonal_bisectional(R, restarts=optimize.DEFAULT_RESTARTS, seed=0):
    """``(value, (n, 2) orthonormal frame)`` minimizing orthogonal bisectional curvature."""
    res = optimize.minimize_orthbis(_stack([R]), restarts=restarts, seed=seed)
    _raise_if_unconverged(res, "min_orthogonal_bisectional")
    return float(res.values[0]), res.certificates[0]


def pinching_mu_star(R, restarts=optimize.DEFAULT_RESTARTS, seed=0, return_pair=False):
    """Largest ``mu`` with ``R(X,Xb,Y,Yb) >= mu (g*g)(X,Xb,Y,Yb)`` for all X, Y."""
    n = np.asarray(R).shape[0]
    res = optimize.minimize_pinching(_stack([R]), _gg(n), restarts=restarts, seed=seed)
    _raise_if_unconverged(res, "pinching_mu_star")
    if return_pair:
        return float(res.values[0]), res.certificates[0]
    return float(res.values[0])


@lru_cache(maxsize=None)
def _traceless_basis(n):
    q = null_space(np.eye(n).reshape(1, n * n))
    q.setflags(write=False)
    return q


def traceless_operator(R):
    """Matrix of ``eta -> sum_{k,l} R[i,j,k,l] eta[l,k]`` on trace-free forms."""
    ent = np.asarray(R)
    n = ent.shape[0]
    op = ent.transpose(0, 1, 3, 2).reshape(n * n, n * n)
    q = _traceless_basis(n)
    return q.T @ op @ q


def traceless_spectrum(R):
    """Ascending eigenvalues on trace-free Hermitian forms and the 2-positivity flag."""
    h = traceless_operator(R)
    ev = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    return ev, bool(ev[0] + ev[1] > 0)


@dataclass(frozen=True, eq=False)
class CurvatureBounds:
    scalar_min: float
    scalar_max: float
    ricci_min: float
    holsec_min: float
    orthbis_min: float
    mu_star: float
    ricci_direction: np.ndarray = field(default=None, repr=False)
    holsec_direction: np.ndarray = field(default=None, repr=False)
    orthbis_pair: np.ndarray = field(default=None, repr=False)
    mu_star_pair: np.ndarray = field(default=None, repr=False)

    FIELDS = ("scalar_min", "scalar_max", "ricci_min", "holsec_min", "orthbis_min", "mu_star")

    def as_dict(self):
        return {k: getattr(self, k) for k in self.FIELDS}


def cone_reports(tensors, restarts=optimize.DEFAULT_RESTARTS, seed=0, strict=True):
    """Batched :func:`cone_report` over tensors of a common dimension."""
    arr = _stack(tensors)
    if arr.shape[0] == 0:
        return []
    n = arr.shape[1]
    hs = optimize.minimize_holsec(arr, restarts=restarts, seed=seed)
    ob = optimize.minimize_orthbis(arr, restarts=restarts, seed=seed)
    mu = optimize.minimize_pinching(arr, _gg(n), restarts=restarts, seed=seed)
    if strict:
        for res, what in ((hs, "holsec"), (ob, "orthbis"), (mu, "mu_star")):
            _raise_if_unconverged(res, what)
    out = []
    for b in range(arr.shape[0]):
        ric, scal = traces(arr[b])
        w, vecs = np.linalg.eigh(ric)
        out.append(
            CurvatureBounds(
                scalar_min=scal,
                scalar_max=scal,
                ricci_min=float(w[0]),
                holsec_min=float(hs.values[b]),
                orthbis_min=float(ob.values[b]),
                mu_star=float(mu.values[b]),
                ricci_direction=vecs[:, 0],
                holsec_direction=hs.certificates[b],
                orthbis_pair=ob.certificates[b],
                mu_star_pair=mu.certificates[b],
            )
        )
    return out


def cone_report(R, restarts=optimize.DEFAULT_RESTARTS, seed=0):
    """All extremal quantities of one tensor with their certificates."""
    return cone_reports([R], restarts=restarts, seed=seed)[0]


def random_kahler_array(n, rng, scale=1.0):
    """Symmetry-projected pull-back of a random Hermitian operator on n^2 space."""
    m = n * n
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    h = (z + z.conj().T) / (2.0 * m)
    raw = h.reshape(n, n, n, n).transpose(0, 2, 1, 3)  # R[i,j,k,l] = H[(i,k),(j,l)]
    return scale * project_kahler(raw)


CONES = {
    "orthbis_positive": lambda R: min_orthogonal_bisectional(R, restarts=16)[0] > 0,
    "two_positive": lambda R: traceless_spectrum(R)[1],
    "ricci_nonnegative": lambda R: np.linalg.eigvalsh(traces(R)[0])[0] >= 0,
}


def sample_kahler_tensor(n, seed, cone_constraint=None, *, scale=1.0, shift=None, max_tries=2000):
    """Random valid tensor, optionally rejection-sampled into ``cone_constraint``.

    The tensor is ``noise + shift * (g*g)``; with ``shift=None`` the shift is
    drawn uniformly from [-0.5, 1.5] for every attempt so that all cones of
    interest are hit at a useful rate.
    """
    if n < 2:
        raise DimensionTooSmall(f"complex dimension must be >= 2, got {n}")
    if isinstance(cone_constraint, str):
        try:
            cone_constraint = CONES[cone_constraint]
        except KeyError:
            raise ValueError(f"unknown cone {cone_constraint!r}; choose from {sorted(CONES)}") from None
    rng = np.random.default_rng(seed)
    gg = gg_tensor(n)
    for _ in range(max_tries):
        s = rng.uniform(-0.5, 1.5) if shift is None else shift
        R = KahlerCurvatureTensor(n, random_kahler_array(n, rng, scale) + s * gg)
        if cone_constraint is None or cone_constraint(R):
            return R
    raise SamplingBudgetExhausted(f"no sample satisfied the constraint in {max_tries} tries")


# JSON exchange: a generating set of entries, completed by the symmetry orbit


def _orbit(i, j, k, l):
    """Index images under the symmetry group with a flag for conjugation."""
    base = {(i, j, k, l), (k, j, i, l), (i, l, k, j), (k, l, i, j)}
    out = [(q, False) for q in base]
    out += [((b, a, d, c), True) for (a, b, c, d) in base]
    return out


def tensor_to_json(R, tol=0.0):
    ent = np.asarray(R)
    n = ent.shape[0]
    seen = set()
    entries = []
    for idx in np.ndindex(*ent.shape):
        if idx in seen:
            continue
        for q, _ in _orbit(*idx):
            seen.add(q)
        v = ent[idx]
        if abs(v) > tol:
            entries.append([*map(int, idx), float(v.real), float(v.imag)])
    return {"n": int(n), "entries": entries}


def tensor_from_json(obj, tol=VALIDATION_TOL):
    """Read ``{"n": int, "entries": [[i, j, k, l, re, im], ...]}`` (0-based indices)."""
    n = int(obj["n"])
    if n < 2:
        raise DimensionTooSmall(f"complex dimension must be >= 2, got {n}")
    arr = np.zeros((n,) * 4, dtype=complex)
    filled = np.zeros((n,) * 4, dtype=bool)
    for e in obj["entries"]:
        i, j, k, l = (int(x) for x in e[:4])
        v = complex(float(e[4]), float(e[5]))
        for q, conj in _orbit(i, j, k, l):
            w = np.conj(v) if conj else v
            if filled[q] and abs(arr[q] - w) > tol:
                raise SymmetryViolation("orbit", q, abs(arr[q] - w))
            arr[q] = w
            filled[q] = True
    return validate_curvature(arr, n, tol=tol)
