import numpy as np
import pytest

from ltsa.dataset import make_rng

# "<criterion> <part>" -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def order(key):
        head = key.split()[0]
        return (int(head) if head.isdigit() else 99, key)

    for key in sorted(ACCEPTANCE, key=order):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return make_rng(12345)


def affine_data(rng, m, d, N):
    """Points ``c + U tau`` on an exact d-dimensional affine subspace of R^m."""
    tau = rng.uniform(-1.0, 1.0, (d, N))
    U = np.linalg.qr(rng.standard_normal((m, d)))[0]
    c = rng.standard_normal((m, 1))
    return c + U @ tau, tau, U, c
