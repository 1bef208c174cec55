import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("krflab", max_examples=40, deadline=None)
settings.load_profile("krflab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def hopf_grid(m):
    """Unit vectors of C^2 on an m x m x m grid of Hopf coordinates (phases mod the overall one)."""
    eta = np.linspace(0.0, np.pi / 2, m)
    phi = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
    e, p = np.meshgrid(eta, phi, indexing="ij")
    return np.stack([np.cos(e).ravel(), (np.sin(e) * np.exp(1j * p)).ravel()], axis=1)


# acceptance summary: test_acceptance.py records one line per criterion here
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}  {detail}")
