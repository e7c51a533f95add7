"""Closed-form free-particle Gaussian evolution used to validate the solver.

For an initial packet with modulus-squared standard deviation ``sigma``,
carrier ``k``, and center ``c`` (per axis), free evolution with
``hbar = m = 1`` gives

    f(u, t) = (2 pi sigma^2)^(-1/4) * (sigma / sqrt(A))
              * exp(-(u - c - k t)^2 / (4 A)) * exp(i (k u - k^2 t / 2)),

with complex width parameter ``A = sigma^2 + i t / 2``. The modulus-squared
width is ``|A| / sigma = sigma * sqrt(1 + (t / (2 sigma^2))^2)``; 2-D packets
are products of the two axis factors. Everything here is independent of the
spectral solver: fields are evaluated pointwise from the formula above and
overlaps come from the analytic Gaussian integral.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, GaussianSpec, Grid2D, position_meshes


@dataclass(frozen=True)
class PacketState:
    """Analytic state of a freely evolving Gaussian packet at one instant."""

    center: tuple[float, float]
    alpha: complex          # per-axis complex width parameter, sigma * (1 + i t / (2 sigma^2))
    width: float            # standard deviation of the modulus-squared profile
    phase: float            # accumulated dynamical phase, -(kx^2 + ky^2) t / 2
    elapsed: float
    spec: GaussianSpec


def dispersed_width(sigma: float, t: float) -> float:
    """Modulus-squared standard deviation after free evolution for time ``t``."""
    return sigma * np.sqrt(1.0 + (t / (2.0 * sigma**2)) ** 2)


def oracle_free_gaussian(spec: GaussianSpec, t: float) -> PacketState:
    """Analytic evolution of ``spec`` by time ``t`` (negative ``t`` runs backward)."""
    sigma = spec.sigma
    alpha = sigma * (1.0 + 1j * t / (2.0 * sigma**2))
    return PacketState(
        center=(spec.cx + spec.kx * t, spec.cy + spec.ky * t),
        alpha=alpha,
        width=dispersed_width(sigma, t),
        phase=-0.5 * (spec.kx**2 + spec.ky**2) * t,
        elapsed=t,
        spec=spec,
    )


def _axis_values(u: np.ndarray, c: float, k: float, sigma: float, t: float) -> np.ndarray:
    A = sigma**2 + 0.5j * t
    prefactor = (2.0 * np.pi * sigma**2) ** (-0.25) * sigma / np.sqrt(A)
    return prefactor * np.exp(
        -((u - c - k * t) ** 2) / (4.0 * A) + 1j * (k * u - 0.5 * k**2 * t)
    )


def oracle_field(state: PacketState, grid: Grid2D, images: int = 0) -> ComplexField:
    """Evaluate the analytic packet on a grid (continuum normalization).

    ``images > 0`` adds the ``(2*images+1)^2 - 1`` neighboring periodic
    copies of the packet, giving the exact solution of the *periodic*
    problem a spectral solver integrates; use this when comparing against
    solver output at rounding-level tolerances, where the wrapped tails of
    a dispersed packet are no longer negligible.
    """
    spec, t = state.spec, state.elapsed
    X, Y = position_meshes(grid)
    Lx = grid.nx * grid.dx
    Ly = grid.ny * grid.dy
    values = np.zeros(grid.shape, dtype=np.complex128)
    for mx in range(-images, images + 1):
        fx = _axis_values(X, spec.cx + mx * Lx, spec.kx, spec.sigma, t)
        if images and spec.kx:
            fx = fx * np.exp(-1j * spec.kx * mx * Lx)
        for my in range(-images, images + 1):
            fy = _axis_values(Y, spec.cy + my * Ly, spec.ky, spec.sigma, t)
            if images and spec.ky:
                fy = fy * np.exp(-1j * spec.ky * my * Ly)
            values += fx * fy
    return ComplexField(grid, values, _trusted=True)


def _axis_overlap(c1, k1, s1, t1, c2, k2, s2, t2) -> complex:
    """Analytic 1-D overlap integral(conj(f1) f2) of two evolved Gaussians."""
    A1 = np.conj(s1**2 + 0.5j * t1)
    A2 = s2**2 + 0.5j * t2
    P1 = np.conj((2.0 * np.pi * s1**2) ** (-0.25) * s1 / np.sqrt(s1**2 + 0.5j * t1))
    P2 = (2.0 * np.pi * s2**2) ** (-0.25) * s2 / np.sqrt(A2)
    mu1 = c1 + k1 * t1
    mu2 = c2 + k2 * t2
    theta = 0.5 * k1**2 * t1 - 0.5 * k2**2 * t2
    alpha = 1.0 / (4.0 * A1) + 1.0 / (4.0 * A2)
    beta = mu1 / (2.0 * A1) + mu2 / (2.0 * A2) + 1j * (k2 - k1)
    gamma = -(mu1**2) / (4.0 * A1) - (mu2**2) / (4.0 * A2)
    integral = np.sqrt(np.pi / alpha) * np.exp(beta**2 / (4.0 * alpha) + gamma)
    return complex(P1 * P2 * np.exp(1j * theta) * integral)


def oracle_overlap(state_a: PacketState, state_b: PacketState) -> complex:
    """Analytic inner product ``integral(conj(a) b)`` of two evolved packets."""
    a, b = state_a, state_b
    ox = _axis_overlap(
        a.spec.cx, a.spec.kx, a.spec.sigma, a.elapsed,
        b.spec.cx, b.spec.kx, b.spec.sigma, b.elapsed,
    )
    oy = _axis_overlap(
        a.spec.cy, a.spec.ky, a.spec.sigma, a.elapsed,
        b.spec.cy, b.spec.ky, b.spec.sigma, b.elapsed,
    )
    return ox * oy


def product_width(width_a: float, width_b: float) -> float:
    """Standard deviation of ``|f_a * f_b|`` for co-centered Gaussians.

    ``|f_a f_b|`` is a Gaussian whose inverse variance adds the two packets'
    ``1/(4 sigma^2)`` envelope exponents: ``s^2 = 2 wa^2 wb^2 / (wa^2 + wb^2)``.
    """
    return float(
        np.sqrt(2.0 * width_a**2 * width_b**2 / (width_a**2 + width_b**2))
    )


def edge_band_mass(center: float, width: float, lo: float, hi: float) -> float:
    """Mass of a unit 1-D Gaussian marginal inside the interval ``[lo, hi]``."""
    from math import erf, sqrt

    def cdf(z):
        return 0.5 * (1.0 + erf(z / sqrt(2.0)))

    return cdf((hi - center) / width) - cdf((lo - center) / width)
