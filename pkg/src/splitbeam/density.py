"""Densities, currents, amplitudes, conservation residuals, and run observables.

Two density conventions coexist:

* single-wave (ct): probability density ``rho = conj(psi) * psi`` with current
  ``j = Im(conj(psi) grad psi)``, real and nonnegative;
* two-wave (st): transition-amplitude density ``rho_s = phi_star * psi`` with
  current ``j_s = (phi_star grad psi - psi grad phi_star) / (2 i)``, generally
  complex. Its spatial integral is the global transition amplitude and is
  conserved in time.

Gradients and divergences are spectral; with the default parameters every
product of fields stays below the grid Nyquist wavenumber, so no dealiasing
is needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import ComplexField, Grid2D, _require_same_grid, inner_product, wavenumber_meshes
from .splitter import Rect


@dataclass(frozen=True)
class DensityPair:
    """A density and its matching current components on one grid."""

    rho: ComplexField
    current_x: ComplexField
    current_y: ComplexField

    @property
    def grid(self) -> Grid2D:
        return self.rho.grid


def spectral_gradient(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    KX, KY = wavenumber_meshes(grid)
    spectrum = np.fft.fft2(values)
    gx = np.fft.ifft2(1j * KX * spectrum)
    gy = np.fft.ifft2(1j * KY * spectrum)
    return gx, gy


def ct_density_current(psi: ComplexField) -> DensityPair:
    """Probability density and current of a single forward wave."""
    grid = psi.grid
    rho = (np.conj(psi.values) * psi.values).real.astype(np.complex128)
    gx, gy = spectral_gradient(psi.values, grid)
    jx = (np.conj(psi.values) * gx).imag.astype(np.complex128)
    jy = (np.conj(psi.values) * gy).imag.astype(np.complex128)
    return DensityPair(
        ComplexField(grid, rho, _trusted=True),
        ComplexField(grid, jx, _trusted=True),
        ComplexField(grid, jy, _trusted=True),
    )


def st_density_current(phi_star: ComplexField, psi: ComplexField) -> DensityPair:
    """Transition-amplitude density ``phi_star * psi`` and its complex current."""
    _require_same_grid(phi_star, psi)
    grid = psi.grid
    rho = phi_star.values * psi.values
    gpsi_x, gpsi_y = spectral_gradient(psi.values, grid)
    gphi_x, gphi_y = spectral_gradient(phi_star.values, grid)
    jx = (phi_star.values * gpsi_x - psi.values * gphi_x) / 2.0j
    jy = (phi_star.values * gpsi_y - psi.values * gphi_y) / 2.0j
    return DensityPair(
        ComplexField(grid, rho, _trusted=True),
        ComplexField(grid, jx, _trusted=True),
        ComplexField(grid, jy, _trusted=True),
    )


def local_conservation_residual(
    pair_t_minus: DensityPair, pair_t_plus: DensityPair, dt: float
) -> float:
    """L2 norm of ``(rho(t+dt) - rho(t-dt)) / (2 dt) + div j(t)``.

    The center-time current is taken as the average of the two bracketing
    currents, which preserves the second-order accuracy of the centered time
    difference. The complex residual norm covers real and imaginary parts.
    """
    if pair_t_minus.grid != pair_t_plus.grid:
        raise ValueError("density pairs live on different grids (programming error)")
    grid = pair_t_minus.grid
    drho = (pair_t_plus.rho.values - pair_t_minus.rho.values) / (2.0 * dt)
    jx = 0.5 * (pair_t_minus.current_x.values + pair_t_plus.current_x.values)
    jy = 0.5 * (pair_t_minus.current_y.values + pair_t_plus.current_y.values)
    KX, KY = wavenumber_meshes(grid)
    div = np.fft.ifft2(1j * KX * np.fft.fft2(jx) + 1j * KY * np.fft.fft2(jy))
    residual = drho + div
    return float(np.sqrt((np.abs(residual) ** 2).sum() * grid.cell_area))


def global_amplitude(phi_star: ComplexField, psi: ComplexField) -> complex:
    """Global transition amplitude ``integral(phi_star * psi) dV`` (no conjugation)."""
    _require_same_grid(phi_star, psi)
    return complex(np.sum(phi_star.values * psi.values) * psi.grid.cell_area)


def transition_amplitude_ct(psi_final: ComplexField, xi: ComplexField) -> complex:
    """Measurement overlap ``integral(conj(xi) * psi) dV`` at the final time."""
    return inner_product(xi, psi_final)


def nonfactorization_values(phi_star: ComplexField, psi: ComplexField) -> tuple[float, float]:
    """Return ``(|integral rho_s|^2, integral |rho_s|^2)`` at one instant.

    The two quantities agree only in degenerate cases (e.g. disjoint
    supports); their mismatch shows the squared global amplitude is not the
    integral of any pointwise density.
    """
    _require_same_grid(phi_star, psi)
    rho = phi_star.values * psi.values
    area = psi.grid.cell_area
    lhs = float(abs(np.sum(rho) * area) ** 2)
    rhs = float((np.abs(rho) ** 2).sum() * area)
    return lhs, rhs


# ---------------------------------------------------------------------------
# observables on density snapshots


def _cell_window_weights(coords: np.ndarray, spacing: float, lo: float, hi: float) -> np.ndarray:
    """Per-node quadrature weights of a sharp 1-D window over cell midpoints.

    Each node owns the cell ``[c - h/2, c + h/2]``; the weight is the
    covered fraction of that cell, making congruent windows integrate
    identically regardless of how their edges fall between nodes.
    """
    left = np.maximum(coords - spacing / 2.0, lo)
    right = np.minimum(coords + spacing / 2.0, hi)
    return np.clip(right - left, 0.0, spacing) / spacing


def strip_marginal(
    density_abs: np.ndarray,
    grid: Grid2D,
    axis: str,
    line: float,
    half_width: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Marginal of ``|density|`` along one axis, restricted to a transverse strip.

    Returns ``(coordinates, weights)`` where weights integrate the density
    over the transverse direction within ``|transverse - line| <= half_width``,
    with fractional weights for cells straddling the strip edges.
    """
    if axis == "x":
        coords = grid.x()
        w = _cell_window_weights(grid.y(), grid.dy, line - half_width, line + half_width)
        weights = density_abs @ w * grid.dy
    elif axis == "y":
        coords = grid.y()
        w = _cell_window_weights(grid.x(), grid.dx, line - half_width, line + half_width)
        weights = w @ density_abs * grid.dx
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return coords, weights


def marginal_moments(coords: np.ndarray, weights: np.ndarray) -> tuple[float, float, float]:
    """Mean, standard deviation, and skewness of a nonnegative 1-D marginal."""
    total = weights.sum()
    if total <= 0:
        return float("nan"), float("nan"), float("nan")
    w = weights / total
    mean = float(np.sum(coords * w))
    var = float(np.sum((coords - mean) ** 2 * w))
    std = float(np.sqrt(var))
    if std == 0:
        return mean, 0.0, 0.0
    skew = float(np.sum(((coords - mean) / std) ** 3 * w))
    return mean, std, skew


def support_component_count(density_abs: np.ndarray, threshold_fraction: float) -> int:
    """Number of significant disjoint components above ``threshold * peak``.

    A component counts only if its own maximum reaches ten times the support
    threshold: coherent interference between two overlapping waves raises the
    density by at most a factor of four over either wave alone, so fringe
    islands carved off a support contour can never pass this cut, while any
    genuine lump (with maximum of order the peak) always does.
    """
    peak = density_abs.max()
    if peak <= 0:
        return 0
    mask = density_abs > threshold_fraction * peak
    labels, count = ndimage.label(mask)
    if count == 0:
        return 0
    significance = min(10.0 * threshold_fraction, 0.5) * peak
    maxima = ndimage.maximum(density_abs, labels=labels, index=np.arange(1, count + 1))
    return int(np.count_nonzero(np.atleast_1d(maxima) >= significance))


def corridor_mass(density_abs: np.ndarray, grid: Grid2D, rect: Rect) -> float:
    """Integral of ``|density|`` over an axis-aligned rectangle.

    Cells straddling the rectangle edges contribute their covered fraction,
    so congruent rectangles integrate identically wherever their edges fall
    relative to the nodes.
    """
    wx = _cell_window_weights(grid.x(), grid.dx, rect.x_min, rect.x_max)
    wy = _cell_window_weights(grid.y(), grid.dy, rect.y_min, rect.y_max)
    return float(wx @ density_abs @ wy * grid.cell_area)
