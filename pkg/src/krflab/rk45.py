"""Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.

Small and self-contained: the envelope and reaction modules need a local
error guarantee and a stiffness guard, nothing more. States may be real or
complex numpy arrays of any shape.
"""
from dataclasses import dataclass

import numpy as np

from .errors import StepUnderflow

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


@dataclass
class Solution:
    """Accepted steps of an integration plus Hermite interpolation between them."""

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    nfev: int

    def __call__(self, tq):
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        out = []
        for q, i in zip(tq, idx):
            t0, t1 = self.t[i], self.t[i + 1]
            h = t1 - t0
            s = (q - t0) / h
            h00 = 2 * s**3 - 3 * s**2 + 1
            h10 = s**3 - 2 * s**2 + s
            h01 = -2 * s**3 + 3 * s**2
            h11 = s**3 - s**2
            out.append(
                h00 * self.y[i] + h10 * h * self.f[i] + h01 * self.y[i + 1] + h11 * h * self.f[i + 1]
            )
        return np.array(out)


def _err_norm(err, y0, y1, atol, rtol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale)) if err.size else 0.0


def integrate(
    fun, t_span, y0, tol=1e-9, rtol=None, h0=None, t_eval=None, max_steps=1_000_000, h_min=1e-14
):
    """Integrate ``y' = fun(t, y)`` over ``t_span`` with local error below ``tol``.

    ``tol`` is the absolute tolerance; ``rtol`` defaults to ``tol`` as well.
    The fifth-order solution is propagated (local extrapolation). Steps are
    shortened to land exactly on every time in ``t_eval``, so those samples
    carry the full integrator accuracy rather than the interpolant's.

    Raises StepUnderflow when the controller needs a step below ``h_min``
    relative to the span, which is how stiffness shows up here.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    rtol = tol if rtol is None else rtol
    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float), copy=True)
    f = np.asarray(fun(t0, y))
    nfev = 1
    ts, ys, fs = [t0], [y.copy()], [f.copy()]
    if t1 == t0:
        return Solution(np.array(ts), np.array(ys), np.array(fs), nfev)
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    if h0 is None:
        d0 = np.max(np.abs(y)) if y.size else 0.0
        d1 = np.max(np.abs(f)) if f.size else 0.0
        h = 0.01 * max(d0, 1e-5) / max(d1, 1e-5)
        h = min(h, 0.1 * span)
    else:
        h = abs(h0)
    t = t0
    stops = [] if t_eval is None else sorted(
        (float(q) for q in t_eval if (q - t0) * direction > 0 and (t1 - q) * direction > 0),
        key=lambda q: q * direction,
    )
    stops.append(t1)
    si = 0
    k = [None] * 7
    for _ in range(max_steps):
        if abs(t1 - t) <= 1e-15 * max(1.0, abs(t1)):
            break
        while si < len(stops) - 1 and (stops[si] - t) * direction <= 1e-15 * max(1.0, abs(t)):
            si += 1
        h_try = min(h, abs(stops[si] - t))
        if h < h_min * max(1.0, span):
            raise StepUnderflow(f"step size {h:.3e} underflowed at t = {t:.6g}")
        landing = h_try < h
        hs = direction * h_try
        k[0] = f
        for s in range(1, 7):
            dy = sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0.0)
            k[s] = np.asarray(fun(t + _C[s] * hs, y + hs * dy))
        nfev += 6
        y_new = y + hs * sum(b * k[j] for j, b in enumerate(_B5) if b != 0.0)
        err = hs * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
        en = _err_norm(err, y, y_new, tol, rtol)
        if en <= 1.0:
            t = stops[si] if landing or h_try == abs(stops[si] - t) else t + hs
            y = y_new
            f = k[6]
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            if not landing:
                h *= 5.0 if en == 0 else min(5.0, 0.9 * en ** (-0.2))
        else:
            h = h_try * max(0.2, 0.9 * en ** (-0.2))
    else:
        raise StepUnderflow(f"exceeded {max_steps} steps before reaching t = {t1}")
    return Solution(np.array(ts), np.array(ys), np.array(fs), nfev)
