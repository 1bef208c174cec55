import numpy as np
import pytest
import sympy as sp

from krflab.curvature import cone_report, constant_curvature_tensor
from krflab.errors import MetricDegenerate
from krflab.flow import (
    FlowConfig,
    FlowState,
    RadialPotential,
    ansatz_extrema,
    assemble_tensor,
    components,
    components_from_rho,
    curvature_from_potential,
    evolve,
    flow_rhs,
    fs_potential,
    h_functional,
    integral_F,
    laplacian,
    perturbed_potential,
    run_flow,
    stable_dt,
)


def test_regular_forms_agree_symbolically():
    # d/drho = s d/dx with x = e^rho / (1 + e^rho)
    x = sp.symbols("x", positive=True)
    v = sp.Function("v")(x)
    s = x * (1 - x)
    dr = lambda f: s * sp.diff(f, x)
    tau = x + s * sp.diff(v, x)  # u' for u = log(1 + e^rho) + v
    u2, u3 = dr(tau), dr(dr(tau))
    u4 = dr(u3)
    a = 1 + (1 - x) * sp.diff(v, x)
    b = 1 + sp.diff(s * sp.diff(v, x), x)
    A_rho = (u3**2 - u2 * u4) / u2**3
    B_rho = u2 / tau**2 - u3 / (tau * u2)
    C_rho = 2 * (tau - u2) / tau**2
    D = (1 + 2 * (1 - x) * sp.diff(v, x) - (1 - x) ** 2 * sp.diff(v, x, 2)) / a**2
    B = -sp.diff((1 - x) * b / a, x) / b
    A = -(-2 + sp.diff(s * sp.diff(b, x) / b, x)) / b
    for lhs, rhs in ((A, A_rho), (B, B_rho), (2 * D, C_rho)):
        assert sp.simplify(lhs - rhs) == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_fs_is_stationary_with_constant_curvature(n):
    p = fs_potential(n, 64)
    np.testing.assert_allclose(flow_rhs(p), 0.0, atol=1e-13)
    st = FlowState(0.0, p)
    k = 2.0 / (n + 1)
    for field, want in ((st.Arad, k), (st.Brad, k / 2), (st.Ctan, k), (st.Dtan, k / 2)):
        np.testing.assert_allclose(field, want, atol=1e-12)
    np.testing.assert_allclose(st.ricci_min(), 1.0, atol=1e-12)
    np.testing.assert_allclose(st.scalar, n, atol=1e-12)
    T = st.tensor(7).entries
    np.testing.assert_allclose(T, constant_curvature_tensor(n, k).entries, atol=1e-12)
    F, hmax = h_functional(st)
    assert np.abs(F).max() < 1e-20 and abs(hmax) < 1e-12 and integral_F(st) == 0.0


def test_components_fourth_order_and_match_rho_forms():
    errs = []
    for N in (64, 128, 256):
        p = perturbed_potential(2, N, 0.003, 1, 0)
        A, B, C, D = components(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            Ar, Br, Cr, _ = components_from_rho(*p.rho_derivatives())
        i = slice(N // 8, -N // 8)
        errs.append(max(np.abs(A - Ar)[i].max(), np.abs(B - Br)[i].max()))
        np.testing.assert_allclose(C[i], Cr[i], atol=1e-12)
        np.testing.assert_allclose(C, 2 * D)
    assert errs[0] / errs[1] > 10 and errs[1] / errs[2] > 10


def test_scalar_matches_potential_laplacian():
    # R = n - Laplacian(phidot) along the normalized flow
    errs = []
    for N in (64, 128, 256):
        p = perturbed_potential(2, N, 0.003, 1, 0)
        st = FlowState(0.0, p)
        errs.append(np.abs(st.scalar - (2 - laplacian(p, st.phidot))).max())
    assert errs[-1] < 1e-5 and errs[0] / errs[-1] > 50


@pytest.mark.parametrize("n", [2, 3])
def test_ansatz_extrema_match_extractors(n):
    p = perturbed_potential(n, 64, 0.01, 1, 2)
    st = FlowState(0.0, p)
    hs, ob = ansatz_extrema(n, st.Arad, st.Brad, st.Ctan, st.Dtan)
    for node in (5, 20, 40, 60):
        rep = cone_report(st.tensor(node), restarts=16)
        assert rep.holsec_min == pytest.approx(hs[node], abs=1e-10)
        assert rep.orthbis_min == pytest.approx(ob[node], abs=1e-10)


def test_assembled_tensor_is_kahler():
    from krflab.curvature import validate_curvature

    validate_curvature(assemble_tensor(3, 0.7, 0.2, 0.9, 0.45))
    R = curvature_from_potential(fs_potential(2, 32), 3)
    assert R.entries[0, 0, 0, 0].real == pytest.approx(2.0)


def test_degenerate_metric():
    with pytest.raises(MetricDegenerate) as exc:
        perturbed_potential(2, 128, 0.2, 1, 0)
    assert exc.value.node is not None
    with pytest.raises(ValueError):
        fs_potential(2, 8)


def test_perturbation_relaxes_to_fs():
    p = perturbed_potential(2, 64, 0.01, 1, 0)
    q = evolve(p, 0.0, 2.0)
    r0 = np.abs(FlowState(0.0, p).scalar - 2).max()
    r1 = np.abs(FlowState(2.0, q).scalar - 2).max()
    assert r1 < 0.1 * r0
    assert stable_dt(q) > 0


def test_time_step_refinement():
    p = perturbed_potential(2, 64, 0.01, 2, 1)
    a = evolve(p, 0.0, 0.2, safety=0.2).v
    b = evolve(p, 0.0, 0.2, safety=0.05).v
    assert np.abs(a - b).max() < 1e-9


def test_integral_F_weight_is_volume():
    # weight n tau^{n-1} b integrates to 1 for any admissible potential
    from krflab.fd import simpson

    p = perturbed_potential(3, 128, 0.01, 1, 3)
    a, b = p.shape_functions()
    tau = p.x * a
    assert simpson(3 * tau**2 * b, p.h) == pytest.approx(1.0, abs=1e-8)


def test_run_flow_record_shape():
    rec = run_flow(FlowConfig(n=2, N=32, t_end=0.2, cadence=0.1, init={"kind": "perturbed", "amplitude": 0.01, "mode": 1, "seed": 0}))
    assert np.allclose(rec.times, [0, 0.1, 0.2])
    assert len(rec.rows()) == 3 and len(rec.rows()[0]) == 13
    assert rec.column("env_scalar_upper")[0] == pytest.approx(rec.h_max[0] + 2)


def test_unknown_init():
    with pytest.raises(ValueError):
        FlowConfig(init={"kind": "spiral"}).initial_potential()
