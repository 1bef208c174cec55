"""Normalized Kähler-Ricci flow among U(n)-invariant metrics on CP^n.

A U(n)-invariant metric in the affine chart is ``omega = (n+1) i dd-bar u``
with ``u = u(rho)``, ``rho = log |z|^2``. The factor ``n + 1`` puts the
Fubini-Study metric at ``Ric = g``, the fixed point of ``dg/dt = g - Ric``.

The grid lives in the compactified coordinate ``x = e^rho / (1 + e^rho)`` on
``[0, 1]`` and the potential is stored as ``u = log(1 + e^rho) + v(x)``. Any
smooth ``v`` on the closed interval gives a metric extending smoothly over the
origin (``x = 0``) and the hyperplane at infinity (``x = 1``). With

    s = x (1 - x),  a = 1 + (1 - x) v_x,  b = 1 + (s v_x)_x,

one has ``u' = x a`` and ``u'' = s b`` (primes are rho-derivatives), so the
metric is positive iff ``a > 0`` and ``b > 0``. The potential flow
``phi_t = log(omega_phi^n / omega^n) + phi`` with ``phi = (n+1) v`` becomes

    v_t = ((n - 1) log a + log b) / (n + 1) + v,

a parabolic equation whose diffusion ``s / ((n+1) b)`` degenerates at both
ends; characteristics leave the domain there, so boundary nodes are advanced
with one-sided stencils and no boundary condition is imposed.

Curvature of ``i dd-bar u`` at ``z = (e^{rho/2}, 0, ..., 0)`` in a unitary
frame (radial vector first) has four independent components:

    A  radial holomorphic sectional,   B  radial-transverse bisectional,
    C  transverse holomorphic sectional, D = C / 2 transverse-transverse,

given in rho-derivatives by ``A = (u'''^2 - u'' u'''') / u''^3``,
``B = u''/u'^2 - u'''/(u' u'')``, ``C = 2 (u' - u'') / u'^2``. The regular
x-forms below avoid the 0/0 at the ends. Curvature of the flow metric is the
above divided by ``n + 1``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import envelopes
from .curvature import CurvatureBounds, KahlerCurvatureTensor, cone_reports, gg_tensor
from .errors import CFLFailure, MetricDegenerate
from .fd import derivative_matrix, simpson

DEFAULT_SAFETY = 0.2
FLOW_RESTARTS = 8


@dataclass(frozen=True, eq=False)
class RadialPotential:
    """``u = log(1 + e^rho) + v(x)`` sampled at ``x_i = i / N``."""

    n: int
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def N(self):
        return self.v.size - 1

    @property
    def x(self):
        return np.linspace(0.0, 1.0, self.N + 1)

    @property
    def h(self):
        return 1.0 / self.N

    def x_derivatives(self):
        """``v_x, v_xx, v_xxx, v_xxxx`` from the fourth-order difference matrices."""
        d1 = derivative_matrix(self.N, 1)
        d2 = derivative_matrix(self.N, 2)
        v1, v2 = d1 @ self.v, d2 @ self.v
        return v1, v2, d1 @ v2, d2 @ v2

    def shape_functions(self):
        """``(a, b)`` with ``u' = x a`` and ``u'' = s b``."""
        x = self.x
        v1, v2 = derivative_matrix(self.N, 1) @ self.v, derivative_matrix(self.N, 2) @ self.v
        s = x * (1 - x)
        return 1 + (1 - x) * v1, 1 + (1 - 2 * x) * v1 + s * v2

    def u(self):
        """Potential values; ``+inf`` at ``x = 1`` where ``rho`` is infinite."""
        x = self.x
        with np.errstate(divide="ignore"):
            return -np.log1p(-x) + self.v

    def rho_derivatives(self):
        """``u', u'', u''', u''''`` with respect to ``rho`` at every node (chain rule)."""
        x = self.x
        s, sp = x * (1 - x), 1 - 2 * x
        v1, v2, v3, v4 = self.x_derivatives()
        # tau = u' and its x-derivatives
        tau = x + s * v1
        t1 = 1 + sp * v1 + s * v2
        t2 = -2 * v1 + 2 * sp * v2 + s * v3
        t3 = -6 * v2 + 3 * sp * v3 + s * v4
        u2 = s * t1
        u3 = s * (sp * t1 + s * t2)
        u4 = s * ((sp**2 - 2 * s) * t1 + 3 * s * sp * t2 + s**2 * t3)
        return tau, u2, u3, u4

    def check_positive(self, t=None):
        a, b = self.shape_functions()
        bad = np.flatnonzero((a <= 0) | (b <= 0) | ~np.isfinite(a) | ~np.isfinite(b))
        if bad.size:
            i = int(bad[0])
            raise MetricDegenerate(
                f"metric not positive at node {i} (a = {a[i]:.3e}, b = {b[i]:.3e})", node=i, time=t
            )
        return a, b


def fs_potential(n, N):
    if N < 16:
        raise ValueError(f"need N >= 16, got {N}")
    return RadialPotential(n, np.zeros(N + 1))


def bump(x):
    """Smooth bump ``(4 x (1 - x))^4``, vanishing to fourth order at both ends."""
    return (4 * x * (1 - x)) ** 4


def perturbed_potential(n, N, amplitude, mode, seed):
    """FS plus ``amplitude * bump(x) * sin(mode pi x + phase)``; the phase comes from ``seed``."""
    if N < 16:
        raise ValueError(f"need N >= 16, got {N}")
    phase = 2 * np.pi * np.random.default_rng(seed).random()
    x = np.linspace(0.0, 1.0, N + 1)
    p = RadialPotential(n, amplitude * bump(x) * np.sin(mode * np.pi * x + phase))
    p.check_positive()
    return p


def components(p):
    """Unnormalized ``(A, B, C, D)`` at every node from the regular x-forms."""
    x = p.x
    s = x * (1 - x)
    d1 = derivative_matrix(p.N, 1)
    a, b = p.check_positive()
    v1, v2 = d1 @ p.v, derivative_matrix(p.N, 2) @ p.v
    D = (1 + 2 * (1 - x) * v1 - (1 - x) ** 2 * v2) / a**2
    q = (1 - x) * b / a
    B = -(d1 @ q) / b
    g = s * (d1 @ b) / b
    A = -(-2 + d1 @ g) / b
    return A, B, 2 * D, D


def components_from_rho(tau, u2, u3, u4):
    """The same components straight from rho-derivatives (singular at the ends)."""
    A = (u3**2 - u2 * u4) / u2**3
    B = u2 / tau**2 - u3 / (tau * u2)
    C = 2 * (tau - u2) / tau**2
    return A, B, C, C / 2


def assemble_tensor(n, A, B, C, D):
    """Unitary-frame tensor with the radial direction first."""
    r = np.zeros((n,) * 4, dtype=complex)
    r[0, 0, 0, 0] = A
    for k in range(1, n):
        r[0, 0, k, k] = r[k, k, 0, 0] = r[0, k, k, 0] = r[k, 0, 0, k] = B
    if n > 1:
        m = n - 1
        r[1:, 1:, 1:, 1:] = D * gg_tensor(m) if m > 1 else C
    return r


def curvature_from_potential(p, node, normalized=False):
    """Curvature tensor of ``i dd-bar u`` at a node (of the flow metric if ``normalized``)."""
    A, B, C, D = components(p)
    scale = 1.0 / (p.n + 1) if normalized else 1.0
    return KahlerCurvatureTensor(p.n, scale * assemble_tensor(p.n, A[node], B[node], C[node], D[node]))


def ansatz_extrema(n, A, B, C, D):
    """Closed-form holomorphic sectional and orthogonal bisectional minima of the ansatz.

    For a unit ``v = (cos t, sin t w)`` the holomorphic sectional curvature is
    ``A p^2 + 4 B p (1 - p) + C (1 - p)^2`` with ``p = cos^2 t``, minimized over
    ``p`` in ``[0, 1]``. Orthogonal pairs give ``B``, ``D`` (when ``n >= 3``)
    and the balanced radial/transverse mix ``(A + C) / 4``.
    """
    A, B, C, D = (np.asarray(z, dtype=float) for z in (A, B, C, D))
    curv = A + C - 4 * B
    cand = [A, C]
    with np.errstate(divide="ignore", invalid="ignore"):
        pstar = np.where(curv > 0, (C - 2 * B) / np.where(curv > 0, curv, 1), -1.0)
    inside = (pstar > 0) & (pstar < 1)
    val = A * pstar**2 + 4 * B * pstar * (1 - pstar) + C * (1 - pstar) ** 2
    cand.append(np.where(inside, val, np.inf))
    holsec = np.min(cand, axis=0)
    ob = [B, (A + C) / 4]
    if n >= 3:
        ob.append(D)
    orthbis = np.min(ob, axis=0)
    return holsec, orthbis


@dataclass(eq=False)
class FlowState:
    """Potential at time ``t`` with normalized curvature fields cached per node."""

    t: float
    potential: RadialPotential
    phidot: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        p = self.potential
        n = p.n
        A, B, C, D = components(p)
        k = 1.0 / (n + 1)
        self.Arad, self.Brad, self.Ctan, self.Dtan = A * k, B * k, C * k, D * k
        self.ricci_radial = self.Arad + (n - 1) * self.Brad
        self.ricci_transverse = self.Brad + self.Ctan + (n - 2) * self.Dtan
        self.scalar = self.ricci_radial + (n - 1) * self.ricci_transverse
        if self.phidot is None:
            self.phidot = phidot(p)

    @property
    def n(self):
        return self.potential.n

    def tensor(self, node):
        return KahlerCurvatureTensor(
            self.n,
            assemble_tensor(self.n, self.Arad[node], self.Brad[node], self.Ctan[node], self.Dtan[node]),
        )

    def tensors(self):
        return [self.tensor(i) for i in range(self.potential.N + 1)]

    def ricci_min(self):
        return np.minimum(self.ricci_radial, self.ricci_transverse)


def phidot(p):
    """``log(omega_phi^n / omega^n) + phi`` with ``phi = (n+1) v``."""
    a, b = p.check_positive()
    return (p.n - 1) * np.log(a) + np.log(b) + (p.n + 1) * p.v


def laplacian(p, f):
    """Laplacian of a radial function for the metric ``(n+1) i dd-bar u``."""
    x = p.x
    s = x * (1 - x)
    a, b = p.shape_functions()
    d1 = derivative_matrix(p.N, 1)
    fx = d1 @ f
    return (d1 @ (s * fx) / b + (p.n - 1) * (1 - x) * fx / a) / (p.n + 1)


def F_field(state):
    """``|grad phidot|^2`` in the evolving metric."""
    p = state.potential
    x = p.x
    _, b = p.shape_functions()
    g = derivative_matrix(p.N, 1) @ state.phidot
    return x * (1 - x) * g**2 / ((p.n + 1) * b)


def h_functional(state):
    """``(F, max(R - n + F))``."""
    F = F_field(state)
    return F, float(np.max(state.scalar - state.n + F))


def integral_F(state):
    """Average of ``F`` against the volume form (total volume normalized to 1)."""
    p = state.potential
    a, b = p.shape_functions()
    x = p.x
    tau = x * a
    # d(tau^n) = n tau^{n-1} tau_x dx and tau_x = b
    w = p.n * tau ** (p.n - 1) * b
    return float(simpson(F_field(state) * w, p.h))


class _Operator:
    """Right-hand side of the potential flow with its matrices bound once."""

    def __init__(self, n, N):
        self.n = n
        self.x = np.linspace(0.0, 1.0, N + 1)
        self.s = self.x * (1 - self.x)
        self.h = 1.0 / N
        self.d1 = derivative_matrix(N, 1)
        self.d2 = derivative_matrix(N, 2)

    def shape(self, v):
        v1, v2 = self.d1 @ v, self.d2 @ v
        return 1 + (1 - self.x) * v1, 1 + (1 - 2 * self.x) * v1 + self.s * v2

    def __call__(self, v, t=None):
        a, b = self.shape(v)
        bad = np.flatnonzero(~((a > 0) & (b > 0)))
        if bad.size:
            i = int(bad[0])
            raise MetricDegenerate(
                f"metric not positive at node {i} (a = {a[i]:.3e}, b = {b[i]:.3e})", node=i, time=t
            )
        return ((self.n - 1) * np.log(a) + np.log(b)) / (self.n + 1) + v

    def stable_dt(self, v, safety):
        _, b = self.shape(v)
        diff = np.max(self.s / ((self.n + 1) * b))
        dt = safety * self.h**2 / diff
        if not np.isfinite(dt) or dt <= 0:
            raise CFLFailure(f"non-finite time step (max diffusion {diff:.3e})")
        return dt


def flow_rhs(p):
    return _Operator(p.n, p.N)(p.v)


def stable_dt(p, safety=DEFAULT_SAFETY):
    """Parabolic step ``safety * dx^2 / max diffusion``."""
    return _Operator(p.n, p.N).stable_dt(p.v, safety)


def evolve(p, t0, t1, safety=DEFAULT_SAFETY):
    """Advance the potential from ``t0`` to ``t1`` with RK4, landing exactly on ``t1``."""
    op = _Operator(p.n, p.N)
    v = np.array(p.v)
    t = t0
    while t < t1 - 1e-14:
        dt = min(op.stable_dt(v, safety), t1 - t)
        k1 = op(v, t)
        k2 = op(v + 0.5 * dt * k1, t)
        k3 = op(v + 0.5 * dt * k2, t)
        k4 = op(v + dt * k3, t)
        v = v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(v)):
            raise CFLFailure(f"solution blew up at t = {t:.6g}")
        t += dt
    return RadialPotential(p.n, v)


@dataclass
class FlowConfig:
    n: int = 2
    N: int = 128
    t_end: float = 1.0
    safety: float = DEFAULT_SAFETY
    cadence: float = 0.1
    init: dict = field(default_factory=lambda: {"kind": "fs"})
    restarts: int = FLOW_RESTARTS
    seed: int = 0
    extremizers: bool = True  # False: trace bounds only, optimizer columns are NaN

    def initial_potential(self):
        kind = self.init.get("kind", "fs")
        if kind == "fs":
            return fs_potential(self.n, self.N)
        if kind == "perturbed":
            return perturbed_potential(
                self.n,
                self.N,
                float(self.init.get("amplitude", 0.0)),
                float(self.init.get("mode", 1)),
                int(self.init.get("seed", 0)),
            )
        raise ValueError(f"unknown initial data kind {kind!r}")


CSV_COLUMNS = (
    "t",
    "scalar_min",
    "scalar_max",
    "ricci_min",
    "holsec_min",
    "orthbis_min",
    "mu_star",
    "h_max",
    "int_F",
    "env_scalar",
    "env_ricci",
    "env_holsec",
    "env_scalar_upper",
)


@dataclass(eq=False)
class TrajectoryRecord:
    n: int
    times: np.ndarray
    bounds: list
    h_max: np.ndarray
    int_F: np.ndarray
    envelopes: dict
    states: list = field(default=None, repr=False)

    def column(self, name):
        if name == "t":
            return np.asarray(self.times)
        if name in CurvatureBounds.FIELDS:
            return np.array([getattr(b, name) for b in self.bounds])
        if name == "h_max":
            return np.asarray(self.h_max)
        if name == "int_F":
            return np.asarray(self.int_F)
        return np.asarray(self.envelopes[name])

    def rows(self):
        cols = [self.column(c) for c in CSV_COLUMNS]
        return [tuple(float(c[i]) for c in cols) for i in range(len(self.times))]


def state_bounds(state, restarts=FLOW_RESTARTS, seed=0, extremizers=True):
    """Bounds over all nodes, extrema from the curvature-algebra extractors.

    Node tensors are deduplicated before extraction (flat regions and the
    FS solution produce many identical tensors).
    """
    if not extremizers:
        nan = float("nan")
        return CurvatureBounds(
            scalar_min=float(state.scalar.min()),
            scalar_max=float(state.scalar.max()),
            ricci_min=float(state.ricci_min().min()),
            holsec_min=nan,
            orthbis_min=nan,
            mu_star=nan,
        )
    n = state.n
    comp = np.stack([state.Arad, state.Brad, state.Ctan, state.Dtan], axis=1)
    uniq, inverse = np.unique(np.round(comp, 14), axis=0, return_inverse=True)
    tensors = [assemble_tensor(n, *row) for row in uniq]
    reps = cone_reports(tensors, restarts=restarts, seed=seed)
    inverse = np.ravel(inverse)
    hs = np.array([r.holsec_min for r in reps])[inverse]
    ob = np.array([r.orthbis_min for r in reps])[inverse]
    ms = np.array([r.mu_star for r in reps])[inverse]
    return CurvatureBounds(
        scalar_min=float(state.scalar.min()),
        scalar_max=float(state.scalar.max()),
        ricci_min=float(state.ricci_min().min()),
        holsec_min=float(hs.min()),
        orthbis_min=float(ob.min()),
        mu_star=float(ms.min()),
    )


def envelope_predictions(b0, h0, n, times):
    """Envelopes seeded from the t = 0 bounds; NaN where a family does not apply."""
    t = np.asarray(times, dtype=float)
    out = {
        "env_scalar": envelopes.scalar_lower_envelope(b0.scalar_min, t),
        "env_scalar_upper": envelopes.scalar_upper_envelope(h0, n, t),
        "env_ricci": np.full(t.shape, np.nan),
        "env_holsec": np.full(t.shape, np.nan),
    }
    if b0.ricci_min < 0:
        out["env_ricci"] = -envelopes.ricci_mu(-b0.ricci_min, t)
    if b0.mu_star < 0:  # NaN compares False
        # R >= mu (g*g) bounds holomorphic sectional curvature below by 2 mu
        out["env_holsec"] = 2.0 * envelopes.holsec_mu(b0.mu_star, t)
    return out


def run_flow(config, keep_states=False):
    """Integrate the flow and record bounds, ``h``, ``int F`` and envelopes at each output time."""
    if isinstance(config, dict):
        config = FlowConfig(**config)
    p = config.initial_potential()
    n_out = int(round(config.t_end / config.cadence))
    times = np.linspace(0.0, config.cadence * n_out, n_out + 1)
    if times[-1] < config.t_end - 1e-12:
        times = np.append(times, config.t_end)
    bounds, hmax, intF, states = [], [], [], []
    t_prev = 0.0
    for t in times:
        if t > t_prev:
            p = evolve(p, t_prev, t, config.safety)
        st = FlowState(float(t), p)
        bounds.append(state_bounds(st, config.restarts, config.seed, config.extremizers))
        hmax.append(h_functional(st)[1])
        intF.append(integral_F(st))
        if keep_states:
            states.append(st)
        t_prev = t
    env = envelope_predictions(bounds[0], hmax[0], config.n, times)
    return TrajectoryRecord(
        config.n, times, bounds, np.array(hmax), np.array(intF), env, states if keep_states else None
    )
