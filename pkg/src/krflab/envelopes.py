"""Comparison envelopes for curvature lower and upper bounds.

Each maximum-principle argument reduces to a scalar ODE for the bound
``mu(t)``. The closed forms live here together with an adaptive
Runge-Kutta route that integrates the same right-hand sides, so every closed
form can be checked against an independent numerical solution.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import rk45
from .errors import InvalidMu0, NegativeTime, ParamOutOfRange


class Family(str, Enum):
    SCALAR_LOWER = "ScalarLower"
    SCALAR_UPPER = "ScalarUpper"
    RICCI_LOWER = "RicciLower"
    HOLSEC_LOWER = "HolSecLower"
    LOGISTIC_PINCH = "LogisticPinch"

    @classmethod
    def parse(cls, name):
        aliases = {
            "scalar": cls.SCALAR_LOWER,
            "scalar-lower": cls.SCALAR_LOWER,
            "scalar-upper": cls.SCALAR_UPPER,
            "ricci": cls.RICCI_LOWER,
            "holsec": cls.HOLSEC_LOWER,
            "logistic": cls.LOGISTIC_PINCH,
        }
        if isinstance(name, cls):
            return name
        key = str(name)
        if key.lower() in aliases:
            return aliases[key.lower()]
        return cls(key)


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeTime("envelopes are defined for t >= 0")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def scalar_lower_envelope(r_min0, t):
    """``min(r_min0, 0) * exp(-t)``; positive starts carry no information."""
    t = _check_time(t)
    return _out(min(float(r_min0), 0.0) * np.exp(-t))


def scalar_upper_envelope(h0, n, t):
    """``h0 * exp(t) + n`` with ``h0 = max(R - n + F)`` at time zero."""
    t = _check_time(t)
    return _out(h0 * np.exp(t) + n)


def ricci_mu(mu0, t):
    """Solution of ``mu' = -mu (mu + 1)``: ``C / (e^t - C)``, ``C = mu0 / (mu0 + 1)``."""
    if mu0 <= 0:
        raise InvalidMu0(f"ricci_mu needs mu0 > 0, got {mu0}")
    t = _check_time(t)
    c = mu0 / (mu0 + 1.0)
    return _out(c / (np.exp(t) - c))


def holsec_mu(mu0, t):
    """Solution of ``mu' = 2 mu^2 - mu`` for a negative start."""
    if mu0 >= 0:
        raise InvalidMu0(f"holsec_mu needs mu0 < 0, got {mu0}")
    t = _check_time(t)
    return _out(1.0 / (2.0 + (1.0 / mu0 - 2.0) * np.exp(t)))


def logistic_limit(nu, n):
    return (2.0 * nu - 1.0) / (n + 1.0)


def logistic_mu(mu0, nu, n, t, rate=None):
    """Logistic pinching bound rising from ``mu0`` to ``a = (2 nu - 1)/(n + 1)``.

    Returns ``a C e^{r t} / (C e^{r t} + 1)`` with ``C = mu0 / (a - mu0)``.
    The default rate ``r = (n + 1) a = 2 nu - 1`` makes this the exact solution
    of ``mu' = mu (2 nu - (n + 1) mu - 1)``. Passing ``rate=a`` gives the slower
    curve ``mu' = mu (a - mu)``, which is a subsolution of the same inequality.
    """
    if nu <= 0.5:
        raise ParamOutOfRange(f"nu must exceed 1/2, got {nu}")
    a = logistic_limit(nu, n)
    if not 0 < mu0 < a:
        raise ParamOutOfRange(f"mu0 must lie in (0, {a}), got {mu0}")
    t = _check_time(t)
    r = (n + 1.0) * a if rate is None else float(rate)
    c = mu0 / (a - mu0)
    # a / (1 + e^{-rt}/C) avoids overflow for large t
    return _out(a / (1.0 + np.exp(-r * t) / c))


def positivity_crossing_time(mu0, nu, n):
    """Time at which ``mu0 + nu^2 t / (n - 1)`` reaches zero (zero if already there)."""
    if nu <= 0:
        raise ParamOutOfRange(f"nu must be positive, got {nu}")
    if n < 2:
        raise ParamOutOfRange(f"n must be >= 2, got {n}")
    if mu0 >= 0:
        return 0.0
    return -mu0 * (n - 1) / nu**2


def rhs(family, params):
    """Right-hand side ``mu' = f(mu)`` of each family's comparison ODE."""
    family = Family.parse(family)
    if family is Family.SCALAR_LOWER:
        return lambda t, m: -m
    if family is Family.SCALAR_UPPER:
        return lambda t, m: m
    if family is Family.RICCI_LOWER:
        return lambda t, m: -m * (m + 1.0)
    if family is Family.HOLSEC_LOWER:
        return lambda t, m: 2.0 * m * m - m
    nu, n = params["nu"], params["n"]
    return lambda t, m: m * (2.0 * nu - (n + 1.0) * m - 1.0)


@dataclass
class ComparisonEnvelope:
    """One envelope family with its parameters.

    ``params`` keys: ``mu0`` for every family (the starting bound, or ``h0``
    for ScalarUpper), plus ``n`` for ScalarUpper and LogisticPinch and ``nu``
    for LogisticPinch.
    """

    family: Family
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.family = Family.parse(self.family)

    def evaluate(self, t):
        p = self.params
        f = self.family
        if f is Family.SCALAR_LOWER:
            return scalar_lower_envelope(p["mu0"], t)
        if f is Family.SCALAR_UPPER:
            return scalar_upper_envelope(p["mu0"], p["n"], t)
        if f is Family.RICCI_LOWER:
            return -np.asarray(ricci_mu(p["mu0"], t)) if np.ndim(t) else -ricci_mu(p["mu0"], t)
        if f is Family.HOLSEC_LOWER:
            return holsec_mu(p["mu0"], t)
        return logistic_mu(p["mu0"], p["nu"], p["n"], t, rate=p.get("rate"))

    def metadata(self):
        meta = {}
        p = self.params
        if self.family is Family.RICCI_LOWER:
            meta["C"] = p["mu0"] / (p["mu0"] + 1.0)
        if self.family is Family.LOGISTIC_PINCH:
            a = logistic_limit(p["nu"], p["n"])
            meta["a"] = a
            meta["C"] = p["mu0"] / (a - p["mu0"])
            # the alternative constant mu0/(1 - mu0) reproduces mu0 only when a = 1
            meta["C_alt"] = p["mu0"] / (1.0 - p["mu0"])
            meta["rate"] = (p["n"] + 1.0) * a if p.get("rate") is None else p["rate"]
        return meta

    def to_json(self):
        return {"family": self.family.value, "params": dict(self.params), "metadata": self.metadata()}

    @classmethod
    def from_json(cls, obj):
        return cls(Family.parse(obj["family"]), dict(obj.get("params", {})))


def solve_envelope_ode(family, params, t_span, tol=1e-10, t_eval=None):
    """Integrate a family's ODE from ``params['mu0']`` with adaptive RK45.

    Returns a callable solution; ``t_eval`` times are hit exactly. For
    RicciLower the integrated quantity is ``mu`` (the bound itself is ``-mu``),
    matching :func:`ricci_mu`.
    """
    f = rhs(family, params)
    sol = rk45.integrate(
        lambda t, y: np.array([f(t, y[0])]),
        t_span,
        np.array([float(params["mu0"])]),
        tol=tol,
        t_eval=t_eval,
    )
    return lambda t: sol(t)[:, 0] if np.ndim(t) else float(sol(t)[0, 0])
