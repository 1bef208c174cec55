import numpy as np
import pytest
from hypothesis import given, strategies as st

from krflab.curvature import constant_curvature_tensor, sample_kahler_tensor
from krflab.errors import NotAtMinimum, NotPSD
from krflab.quadform import (
    BlockQuadraticForm,
    direct_contraction,
    is_psd,
    trace_inequality_check,
    lemma_fuzz,
    sample_psd_form,
    saturation_probe,
    second_variation_form,
)
from krflab.reaction import pinched_tensor, tight_pinched_instance

I2, Z2 = np.eye(2), np.zeros((2, 2))


def _brute_min(form, rng, m=4000):
    n = form.n
    x = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    y = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    w = np.sqrt(np.sum(np.abs(x) ** 2 + np.abs(y) ** 2, axis=1))
    return (form(x / w[:, None], y / w[:, None])).min()


class TestForm:
    def test_gram_reproduces_form(self, rng):
        f = sample_psd_form(3, 4)
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        w = np.concatenate([x.real, x.imag, y.real, y.imag])
        assert w @ f.gram() @ w == pytest.approx(f(x, y), rel=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            BlockQuadraticForm(2, np.array([[0, 1], [0, 0]]), I2, Z2, Z2)

    @pytest.mark.parametrize(
        "A, C, B, psd",
        [(I2, I2, Z2, True), (Z2, Z2, np.diag([1.0, 0.0]), False), (I2, I2, I2, True), (I2, I2, 1.01 * I2, False)],
    )
    def test_is_psd(self, A, C, B, psd):
        assert is_psd(BlockQuadraticForm(2, A, C, B, Z2)) is psd

    @given(st.integers(0, 2**31), st.integers(1, 4))
    def test_sampler_is_psd(self, seed, n):
        f = sample_psd_form(n, seed)
        assert is_psd(f)
        assert _brute_min(f, np.random.default_rng(seed), 300) >= -1e-10


class TestLemmaCheck:
    def test_identity(self):
        chk = trace_inequality_check(BlockQuadraticForm(3, np.eye(3), np.eye(3), np.zeros((3, 3)), np.zeros((3, 3))))
        assert (chk.lhs, chk.rhs, chk.holds) == (3.0, 0.0, True)

    def test_requires_psd(self):
        with pytest.raises(NotPSD):
            trace_inequality_check(BlockQuadraticForm(2, Z2, Z2, np.diag([1.0, 0.0]), Z2))

    def test_counterexample(self):
        # |x_1 + y_2|^2 is nonnegative with tr(AC) = 0 < |Bt|^2 = 1
        A, C, Bt = np.diag([1.0, 0]), np.diag([0, 1.0]), np.array([[0, 1.0], [0, 0]])
        f = BlockQuadraticForm(2, A, C, Z2, Bt)
        x, y = np.array([1.0, 0.3]), np.array([0.2, -1.0])
        assert f(x, y) == pytest.approx(abs(x[0] + y[1]) ** 2)
        chk = trace_inequality_check(f)
        assert not chk.holds and chk.slack == pytest.approx(-1.0)
        assert chk.trace_product >= chk.rhs

    @given(st.integers(0, 2**31), st.integers(1, 4))
    def test_trace_product_bound_always_holds(self, seed, n):
        chk = trace_inequality_check(sample_psd_form(n, seed))
        assert chk.trace_product >= chk.rhs - 1e-9 * max(1.0, chk.trace_product)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_saturation_probe(self, n):
        f, chk = saturation_probe(n)
        assert is_psd(f)
        assert 0.0 <= chk.slack <= 1e-6
        assert f.A[0, 0].real == pytest.approx(1.0, abs=1e-12)


class TestSecondVariation:
    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_direct_contraction(self, n, seed):
        R, e1 = tight_pinched_instance(n, 0.2, seed)
        S = pinched_tensor(R, 0.2)
        f = second_variation_form(S, e1)
        assert is_psd(f, 1e-9)
        chk = trace_inequality_check(f, 1e-9)
        lhs, rhs = direct_contraction(S, e1)
        assert chk.lhs == pytest.approx(lhs, abs=1e-9)
        assert chk.rhs == pytest.approx(rhs, abs=1e-9)
        assert chk.holds

    def test_form_is_the_second_variation(self):
        R, e1 = tight_pinched_instance(2, 0.0, 3, rotate=False)
        S = np.asarray(R)
        f = second_variation_form(R, e1)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        eps = 1e-4
        g = lambda e: np.einsum("ijkl,i,j,k,l->", S, e1 + e * x, np.conj(e1 + e * x), e1 + e * y, np.conj(e1 + e * y)).real
        d2 = (g(eps) - 2 * g(0) + g(-eps)) / eps**2
        assert d2 == pytest.approx(2 * f(x, y), rel=1e-5)

    def test_not_at_minimum(self):
        S = sample_kahler_tensor(2, 1)
        with pytest.raises(NotAtMinimum):
            second_variation_form(S, np.array([1.0, 0.0]))
        # null value but a negative floor elsewhere
        S = pinched_tensor(constant_curvature_tensor(2, 2 / 3), 1 / 3).entries.copy()
        S[1, 1, 1, 1] = -0.5
        with pytest.raises(NotAtMinimum):
            second_variation_form(S, np.array([1.0, 0.0]))


class TestFuzz:
    def test_general_sampler_finds_violations(self):
        s = lemma_fuzz(2, 300, 0)
        assert s.violations > 0 and s.first_violation_seed is not None
        assert s.worst_slack < 0

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_second_variation_sampler_has_none(self, n):
        s = lemma_fuzz(n, 200, 0, sampler="second-variation")
        assert s.violations == 0
        assert s.worst_slack > -1e-9

    def test_seeded(self):
        assert lemma_fuzz(3, 50, 7).as_dict() == lemma_fuzz(3, 50, 7).as_dict()
