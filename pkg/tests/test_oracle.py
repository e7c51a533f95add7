"""Closed-form oracle checks, including an independent finite-difference
cross-validation of the dispersion law on a coarse 1-D grid."""

import numpy as np
import pytest
from scipy.linalg import solve_banded

from splitbeam import GaussianSpec, inner_product, make_grid, oracle_free_gaussian
from splitbeam.oracle import (
    dispersed_width,
    oracle_field,
    oracle_overlap,
    product_width,
)

SIGMA = 20.0
SOURCE = GaussianSpec(0.0, 0.0, SIGMA, 0.4, 0.0)
D1 = GaussianSpec(800.0, 0.0, SIGMA, 0.4, 0.0)


@pytest.mark.parametrize(
    "t, expected",
    [
        (0.0, 20.0),
        (500.0, 2.5 * np.sqrt(89.0)),     # 23.58495...
        (1000.0, 5.0 * np.sqrt(41.0)),    # 32.01562...
        (1500.0, 42.5),
        (2000.0, 10.0 * np.sqrt(29.0)),   # 53.85165...
    ],
)
def test_dispersed_width_closed_forms(t, expected):
    assert dispersed_width(SIGMA, t) == pytest.approx(expected, abs=1e-12)


def test_state_at_zero_is_identity():
    state = oracle_free_gaussian(SOURCE, 0.0)
    assert state.center == (0.0, 0.0)
    assert state.width == pytest.approx(SIGMA)
    assert state.phase == 0.0
    assert state.alpha == pytest.approx(SIGMA)


def test_state_translates_with_carrier():
    state = oracle_free_gaussian(SOURCE, 500.0)
    assert state.center == pytest.approx((200.0, 0.0))
    assert state.phase == pytest.approx(-0.5 * 0.4**2 * 500.0)
    assert abs(state.alpha) == pytest.approx(state.width)


def test_oracle_field_is_normalized():
    grid = make_grid(512, 512, 3.0, 3.0, -312.0, -456.0)
    f = oracle_field(oracle_free_gaussian(SOURCE, 500.0), grid)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)


def test_overlap_formula_matches_grid_quadrature():
    grid = make_grid(512, 512, 3.0, 3.0, -312.0, -456.0)
    a = oracle_free_gaussian(D1, 0.0)
    b = oracle_free_gaussian(SOURCE, 2000.0)
    analytic = oracle_overlap(a, b)
    quadrature = inner_product(oracle_field(a, grid), oracle_field(b, grid))
    assert analytic == pytest.approx(quadrature, abs=1e-10)


def test_overlap_conjugate_symmetry():
    a = oracle_free_gaussian(GaussianSpec(3.0, -2.0, 5.0, 0.3, 0.1), 40.0)
    b = oracle_free_gaussian(GaussianSpec(-1.0, 4.0, 7.0, -0.2, 0.25), 15.0)
    assert oracle_overlap(a, b) == pytest.approx(np.conj(oracle_overlap(b, a)), abs=1e-14)


def test_detector_overlap_modulus():
    # closed form: per-axis |1 + i t/(4 sigma^2)|^(-1/2) -> total 4/sqrt(41)
    ov = oracle_overlap(oracle_free_gaussian(D1, 0.0), oracle_free_gaussian(SOURCE, 2000.0))
    assert abs(ov) == pytest.approx(4.0 / np.sqrt(41.0), abs=1e-12)
    assert abs(ov) == pytest.approx(0.625, abs=0.001)


def test_split_amplitude_and_probability_targets():
    ov = oracle_overlap(oracle_free_gaussian(D1, 0.0), oracle_free_gaussian(SOURCE, 2000.0))
    amp = abs(ov) / np.sqrt(2.0)
    assert amp == pytest.approx(np.sqrt(8.0 / 41.0), abs=1e-12)
    assert amp**2 == pytest.approx(8.0 / 41.0, abs=1e-12)


def test_product_width_symmetry():
    w_pre = product_width(dispersed_width(SIGMA, 500.0), dispersed_width(SIGMA, 1500.0))
    w_post = product_width(dispersed_width(SIGMA, 1500.0), dispersed_width(SIGMA, 500.0))
    assert w_pre == pytest.approx(w_post, rel=1e-15)
    assert w_pre == pytest.approx(29.164399, abs=1e-5)


def _crank_nicolson_1d(psi, dx, dt, steps):
    """Second-order finite-difference integrator, independent of any FFT."""
    n = psi.size
    r = 1j * dt / (4.0 * dx * dx)  # (i dt / 2) * (1 / (2 dx^2)) stencil factor
    # (1 - r L) psi_new = (1 + r L) psi with L the tridiagonal Laplacian
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r
    for _ in range(steps):
        rhs = psi.copy()
        rhs[1:-1] += r * (psi[2:] - 2.0 * psi[1:-1] + psi[:-2])
        rhs[0] += r * (psi[1] - 2.0 * psi[0])
        rhs[-1] += r * (psi[-2] - 2.0 * psi[-1])
        psi = solve_banded((1, 1), ab, rhs)
    return psi


def test_dispersion_against_finite_differences():
    """The oracle's center and width laws hold for an unrelated integrator."""
    dx, dt, t_end = 0.5, 0.25, 200.0
    x = np.arange(-150.0, 450.0, dx)
    sigma, k = 20.0, 0.4
    psi = (2 * np.pi * sigma**2) ** (-0.25) * np.exp(
        -(x**2) / (4 * sigma**2) + 1j * k * x
    )
    psi = _crank_nicolson_1d(psi, dx, dt, int(t_end / dt))
    rho = np.abs(psi) ** 2
    rho /= rho.sum() * dx
    mean = (x * rho).sum() * dx
    width = np.sqrt(((x - mean) ** 2 * rho).sum() * dx)
    state = oracle_free_gaussian(GaussianSpec(0.0, 0.0, sigma, k, 0.0), t_end)
    assert mean == pytest.approx(state.center[0], abs=1.0)
    assert width == pytest.approx(state.width, rel=0.01)
