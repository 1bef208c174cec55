import numpy as np
import pytest

from krflab.fd import derivative_matrix, fd_weights, simpson


def test_classic_weights():
    np.testing.assert_allclose(fd_weights([-1, 0, 1], 2), [1, -2, 1], atol=1e-14)
    np.testing.assert_allclose(fd_weights([-2, -1, 0, 1, 2], 1), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12], atol=1e-14)


def test_too_few_points():
    with pytest.raises(ValueError):
        fd_weights([0, 1], 2)


@pytest.mark.parametrize("order", [1, 2])
def test_exact_on_polynomials(order):
    N = 20
    x = np.linspace(0, 1, N + 1)
    d = derivative_matrix(N, order)
    # accuracy 4 stencils are exact up to degree order + 3
    f = x ** (order + 3)
    exact = np.polyval(np.polyder(np.poly1d([1] + [0] * (order + 3)), order), x)
    np.testing.assert_allclose(d @ f, exact, atol=1e-9)


@pytest.mark.parametrize("order", [1, 2])
def test_fourth_order_convergence_everywhere(order):
    errs = []
    for N in (32, 64, 128):
        x = np.linspace(0, 1, N + 1)
        f = np.sin(3 * x + 0.4)
        exact = 3**order * np.sin(3 * x + 0.4 + order * np.pi / 2)
        errs.append(np.abs(derivative_matrix(N, order) @ f - exact).max())
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert rates.min() > 3.7


def test_cache_survives_caller_mutation():
    d = derivative_matrix(16, 1)
    d[:] = 0.0
    assert np.abs(derivative_matrix(16, 1)).max() > 0
    np.testing.assert_allclose(derivative_matrix(16, 1, h=0.5) * 0.5, derivative_matrix(16, 1) / 16)


def test_simpson():
    x = np.linspace(0, np.pi, 101)
    assert simpson(np.sin(x), x[1] - x[0]) == pytest.approx(2.0, abs=1e-7)
    with pytest.raises(ValueError):
        simpson(np.ones(4), 0.1)
