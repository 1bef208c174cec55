"""Batched Riemannian descent for extremal curvature directions.

Three search spaces appear when extracting curvature bounds:

* the unit sphere in C^n (holomorphic sectional curvature),
* orthonormal 2-frames in C^n (orthogonal bisectional curvature),
* pairs of unit vectors (the pinching ratio against ``g*g``).

Every objective is a bisectional form ``T(X, Xbar, Y, Ybar)`` or a ratio of
two of them, so a single contraction routine drives all three. Minimization
runs over a batch of tensors times a set of quasi-random restarts at once,
with per-element Armijo backtracking. Results are deterministic for a fixed
seed: restart points come from a scrambled Sobol sequence and ties go to the
lowest restart index.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

DEFAULT_RESTARTS = 32
STEP_TOL = 1e-11
GRAD_TOL = 1e-9
MAX_ITER = 4000
STALL_ITERS = 25  # decrease below 1e-13 (relative) for this many steps counts as converged


@dataclass
class MinimizeResult:
    values: np.ndarray  # (B,)
    certificates: np.ndarray  # (B, n) or (B, n, 2)
    converged: np.ndarray  # (B,) bool
    iterations: int


def as_matrix(tensors):
    """Reshape (B, n, n, n, n) tensors so that ``T(X,Xb,Y,Yb) = a^T M b``."""
    t = np.asarray(tensors)
    b, n = t.shape[0], t.shape[1]
    return t.reshape(b, n * n, n * n)


def _outer(x):
    return (x[..., :, None] * x.conj()[..., None, :]).reshape(*x.shape[:-1], -1)


def form_and_grads(m, x, y):
    """Value of ``T(X, Xbar, Y, Ybar)`` and its Wirtinger derivatives.

    ``m`` is (B, n^2, n^2); ``x`` and ``y`` are (B, S, n). Returns the real
    values (B, S) and d/dXbar, d/dYbar, each (B, S, n).
    """
    n = x.shape[-1]
    a = _outer(x)
    b = _outer(y)
    mb = b @ np.swapaxes(m, 1, 2)  # (B,S,n^2): sum_q M[p,q] b[q]
    am = a @ m  # (B,S,n^2): sum_p a[p] M[p,q]
    val = np.einsum("bsp,bsp->bs", a, mb).real
    gx = np.einsum("bsij,bsi->bsj", mb.reshape(*mb.shape[:2], n, n), x)
    gy = np.einsum("bskl,bsk->bsl", am.reshape(*am.shape[:2], n, n), y)
    return val, gx, gy


def _rdot(a, b):
    return np.sum((a.conj() * b).real, axis=-1)


def _sphere_proj(v, g):
    return g - _rdot(v, g)[..., None] * v


def _normalize(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _gram_schmidt(x, y):
    x = _normalize(x)
    y = y - np.sum(x.conj() * y, axis=-1, keepdims=True) * x
    return x, _normalize(y)


def sobol_normals(dim, count, seed):
    """``count`` quasi-random standard normal points in R^dim."""
    m = int(np.ceil(np.log2(max(count, 1))))
    u = qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)[:count]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    return ndtri(u)


def _complex_starts(n, vectors, restarts, seed):
    z = sobol_normals(2 * n * vectors, restarts, seed)
    z = z[:, : n * vectors] + 1j * z[:, n * vectors :]
    return z.reshape(restarts, vectors, n)


# objectives: each maps state -> (value, riemannian gradient as tuple of arrays)


def _holsec_objective(ms, owner):
    (m,) = ms

    def f(idx, state):
        (v,) = state
        val, gx, gy = form_and_grads(m[owner[idx]], v, v)
        return val[:, 0], (_sphere_proj(v, 2.0 * (gx + gy)),)

    return f


def _orthbis_objective(ms, owner):
    (m,) = ms

    def f(idx, state):
        x, y = state
        val, gx, gy = form_and_grads(m[owner[idx]], x, y)
        val = val[:, 0]
        gx, gy = 2.0 * gx, 2.0 * gy
        # complex Stiefel: G - W herm(W^* G), columns x and y
        xx, xy = np.sum(x.conj() * gx, -1), np.sum(x.conj() * gy, -1)
        yx, yy = np.sum(y.conj() * gx, -1), np.sum(y.conj() * gy, -1)
        h11 = xx.real
        h22 = yy.real
        h12 = 0.5 * (xy + yx.conj())
        px = gx - h11[..., None] * x - h12.conj()[..., None] * y
        py = gy - h12[..., None] * x - h22[..., None] * y
        return val, (px, py)

    return f


def _pinching_objective(ms, owner):
    m, mgg = ms

    def f(idx, state):
        x, y = state
        num, nx, ny = form_and_grads(m[owner[idx]], x, y)
        den, dx, dy = form_and_grads(np.broadcast_to(mgg, (len(idx),) + mgg.shape), x, y)
        ratio = num / den
        gx = 2.0 * (nx - ratio[..., None] * dx) / den[..., None]
        gy = 2.0 * (ny - ratio[..., None] * dy) / den[..., None]
        return ratio[:, 0], (_sphere_proj(x, gx), _sphere_proj(y, gy))

    return f


def _descend(objective, retract, state, max_iter):
    """Armijo-safeguarded Barzilai-Borwein descent on flattened elements.

    Objectives receive the indices of the elements they are evaluated on, so
    converged elements drop out of the batch.
    """
    e = state[0].shape[0]
    val, grad = objective(np.arange(e), state)
    t = np.full(e, 0.25)
    conv = np.zeros(e, dtype=bool)
    stall = np.zeros(e, dtype=int)
    act = np.arange(e)
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = sum(np.sum(np.abs(g[act]) ** 2, axis=(-2, -1)) for g in grad)
        done = (
            (np.sqrt(gnorm2) < GRAD_TOL)
            | (t[act] * np.sqrt(gnorm2) < STEP_TOL)
            | (stall[act] >= STALL_ITERS)
        )
        conv[act[done]] = True
        keep = ~done
        act, gnorm2 = act[keep], gnorm2[keep]
        if act.size == 0:
            break
        ta = t[act]
        old = tuple(s[act] for s in state)
        gold = tuple(g[act] for g in grad)
        trial = retract(*(s - ta[:, None, None] * g for s, g in zip(old, gold)))
        tval, tgrad = objective(act, trial)
        ok = tval <= val[act] - 1e-4 * ta * gnorm2
        acc = act[ok]
        tiny = val[act] - tval <= 1e-13 * np.maximum(1.0, np.abs(val[act]))
        stall[act] = np.where(tiny, stall[act] + 1, 0)
        for s, ts in zip(state, trial):
            s[acc] = ts[ok]
        for g, tg in zip(grad, tgrad):
            g[acc] = tg[ok]
        val[acc] = tval[ok]
        # Barzilai-Borwein length from the accepted step
        ss = sum(np.sum(np.abs(ts[ok] - o[ok]) ** 2, axis=(-2, -1)) for ts, o in zip(trial, old))
        sy = sum(
            np.sum((np.conj(ts[ok] - o[ok]) * (tg[ok] - go[ok])).real, axis=(-2, -1))
            for ts, o, tg, go in zip(trial, old, tgrad, gold)
        )
        bb = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), 2.0 * ta[ok])
        t[acc] = np.clip(bb, 1e-8, 1e6)
        t[act[~ok]] *= 0.5
    return val, state, conv, it


def _run(objective_factory, retract, starts, m_list, batch, max_iter):
    restarts = starts[0].shape[0]
    owner = np.repeat(np.arange(batch), restarts)
    state = tuple(
        np.ascontiguousarray(np.broadcast_to(s, (batch,) + s.shape).reshape(-1, 1, s.shape[-1]))
        for s in starts
    )
    state = tuple(np.array(s) for s in retract(*state))
    objective = objective_factory(m_list, owner)
    val, state, conv, it = _descend(objective, retract, state, max_iter)
    val = val.reshape(batch, restarts)
    conv = conv.reshape(batch, restarts)
    best = np.argmin(val, axis=1)  # first index wins ties
    rows = np.arange(batch)
    flat = rows * restarts + best
    return val[rows, best], tuple(s[flat, 0] for s in state), conv[rows, best], it


def minimize_holsec(tensors, restarts=DEFAULT_RESTARTS, seed=0, max_iter=MAX_ITER):
    """Minimum holomorphic sectional curvature of each tensor in the batch."""
    tensors = np.asarray(tensors)
    b, n = tensors.shape[:2]
    starts = _complex_starts(n, 1, restarts, seed)[:, 0, :]
    retract = lambda v: (_normalize(v),)  # noqa: E731
    val, (v,), conv, it = _run(
        _holsec_objective, retract, (starts,), (as_matrix(tensors),), b, max_iter
    )
    return MinimizeResult(val, v, conv, it)


def minimize_orthbis(tensors, restarts=DEFAULT_RESTARTS, seed=0, max_iter=MAX_ITER):
    """Minimum orthogonal bisectional curvature; certificates are (n, 2) frames."""
    tensors = np.asarray(tensors)
    b, n = tensors.shape[:2]
    z = _complex_starts(n, 2, restarts, seed)
    val, (x, y), conv, it = _run(
        _orthbis_objective, _gram_schmidt, (z[:, 0], z[:, 1]), (as_matrix(tensors),), b, max_iter
    )
    return MinimizeResult(val, np.stack([x, y], axis=-1), conv, it)


def minimize_pinching(tensors, gg, restarts=DEFAULT_RESTARTS, seed=0, max_iter=MAX_ITER):
    """Minimum of ``T(X,Xb,Y,Yb) / gg(X,Xb,Y,Yb)`` over unit X, Y."""
    tensors = np.asarray(tensors)
    b, n = tensors.shape[:2]
    z = _complex_starts(n, 2, restarts, seed)
    mgg = np.asarray(gg, dtype=complex).reshape(n * n, n * n)
    retract = lambda x, y: (_normalize(x), _normalize(y))  # noqa: E731
    val, (x, y), conv, it = _run(
        _pinching_objective, retract, (z[:, 0], z[:, 1]), (as_matrix(tensors), mgg), b, max_iter
    )
    return MinimizeResult(val, np.stack([x, y], axis=-1), conv, it)
