"""Uniform 2-D grids, complex scalar fields, Gaussian packets, and field transforms.

Conventions used throughout the package:

* natural units, ``hbar = m = 1``;
* fields are sampled on uniform rectangular grids, arrays indexed ``[ix, iy]``;
* the discrete L2 inner product is the plain Riemann sum with weight ``dx*dy``;
* spectral operations use the angular wavenumbers ``2*pi*fftfreq(n, d=spacing)``,
  which assumes packets stay well clear of the grid edges (policed by the
  boundary-mass guard below).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError

#: Width, in nodes, of the edge band monitored by the boundary-mass guard.
BOUNDARY_BAND_NODES = 4
#: Largest tolerable fraction of a field's squared norm inside the edge band.
BOUNDARY_MASS_LIMIT = 1e-10


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular grid; node ``(i, j)`` sits at ``(x0 + i*dx, y0 + j*dy)``."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ConfigError(f"grid must be at least 8x8 nodes, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise ConfigError(f"grid spacing must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def x_max(self) -> float:
        return self.x0 + (self.nx - 1) * self.dx

    @property
    def y_max(self) -> float:
        return self.y0 + (self.ny - 1) * self.dy

    def x(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx) * self.dx

    def y(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny) * self.dy

    def contains(self, px: float, py: float) -> bool:
        return (self.x0 <= px <= self.x_max) and (self.y0 <= py <= self.y_max)


@functools.lru_cache(maxsize=16)
def position_meshes(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Node coordinate meshes ``X[ix, iy], Y[ix, iy]``."""
    X, Y = np.meshgrid(grid.x(), grid.y(), indexing="ij")
    X.flags.writeable = False
    Y.flags.writeable = False
    return X, Y


@functools.lru_cache(maxsize=16)
def wavenumber_meshes(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Angular wavenumber meshes matching ``numpy.fft.fft2`` ordering."""
    kx = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    ky = 2.0 * np.pi * np.fft.fftfreq(grid.ny, d=grid.dy)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    KX.flags.writeable = False
    KY.flags.writeable = False
    return KX, KY


class ComplexField:
    """A complex amplitude sampled on a :class:`Grid2D`.

    Values are stored as a read-only ``complex128`` array of shape
    ``(nx, ny)``; every operation in the package returns a new field, so
    instances are safe to share across threads.
    """

    __slots__ = ("grid", "_values")

    def __init__(self, grid: Grid2D, values: np.ndarray, *, _trusted: bool = False):
        arr = np.asarray(values, dtype=np.complex128)
        if arr.shape != grid.shape:
            raise ValueError(
                f"field shape {arr.shape} does not match grid shape {grid.shape}"
            )
        if not _trusted:
            if not np.all(np.isfinite(arr.view(np.float64))):
                raise ValueError("field contains non-finite values")
            arr = arr.copy()
        arr.flags.writeable = False
        self.grid = grid
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    def norm(self) -> float:
        """Discrete L2 norm, ``sqrt(sum |f|^2 dx dy)``."""
        return float(np.sqrt(np.vdot(self._values, self._values).real * self.grid.cell_area))

    def conjugate(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self._values), _trusted=True)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        _require_same_grid(self, other)
        return ComplexField(self.grid, self._values + other._values, _trusted=True)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        _require_same_grid(self, other)
        return ComplexField(self.grid, self._values - other._values, _trusted=True)

    def __mul__(self, scalar: complex) -> "ComplexField":
        return ComplexField(self.grid, self._values * scalar, _trusted=True)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"ComplexField(grid={self.grid.shape}, norm={self.norm():.6g})"


@dataclass(frozen=True)
class GaussianSpec:
    """Traveling Gaussian packet parameters.

    ``sigma`` is the standard deviation of the modulus-squared profile per
    axis, i.e. ``|psi(x)|^2 ~ exp(-(x-c)^2 / (2 sigma^2))``, which fixes the
    ``4 sigma^2`` denominator in the amplitude.
    """

    cx: float
    cy: float
    sigma: float
    kx: float = 0.0
    ky: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError(f"packet sigma must be positive, got {self.sigma}")

    @property
    def k_mag(self) -> float:
        return float(np.hypot(self.kx, self.ky))

    @property
    def momentum_width(self) -> float:
        """Per-axis standard deviation of the momentum distribution, ``1/(2 sigma)``."""
        return 1.0 / (2.0 * self.sigma)


def make_grid(nx: int, ny: int, dx: float, dy: float, x0: float, y0: float) -> Grid2D:
    """Build a grid whose node ``(i, j)`` sits at ``(x0 + i*dx, y0 + j*dy)``."""
    return Grid2D(int(nx), int(ny), float(dx), float(dy), float(x0), float(y0))


def gaussian_packet(grid: Grid2D, spec: GaussianSpec) -> ComplexField:
    """Normalized traveling Gaussian ``N exp(-r^2/(4 sigma^2)) exp(i k.r)``.

    The discrete norm is pinned to 1 exactly; the packet carries no constant
    phase beyond the plane-wave carrier ``exp(i(kx*x + ky*y))``.

    Raises
    ------
    GeometryError
        If the center sits closer than ``8 sigma`` to any grid boundary,
        where normalization and spectral accuracy would silently degrade.
    """
    margin = 8.0 * spec.sigma
    if (
        spec.cx - grid.x0 < margin
        or grid.x_max - spec.cx < margin
        or spec.cy - grid.y0 < margin
        or grid.y_max - spec.cy < margin
    ):
        raise GeometryError(
            f"packet center ({spec.cx}, {spec.cy}) is closer than 8*sigma={margin} "
            "to a grid boundary"
        )
    X, Y = position_meshes(grid)
    envelope = np.exp(-((X - spec.cx) ** 2 + (Y - spec.cy) ** 2) / (4.0 * spec.sigma**2))
    carrier = np.exp(1j * (spec.kx * X + spec.ky * Y))
    values = envelope * carrier
    values /= np.sqrt(np.vdot(values, values).real * grid.cell_area)
    return ComplexField(grid, values, _trusted=True)


def _require_same_grid(a: ComplexField, b: ComplexField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids (programming error)")


def inner_product(a: ComplexField, b: ComplexField) -> complex:
    """Discrete L2 inner product ``sum conj(a) * b * dx * dy``."""
    _require_same_grid(a, b)
    return complex(np.vdot(a.values, b.values) * a.grid.cell_area)


def boundary_mass_fraction(
    values: np.ndarray, grid: Grid2D, band_nodes: int = BOUNDARY_BAND_NODES
) -> float:
    """Fraction of ``sum |v|^2`` lying within ``band_nodes`` of any grid edge.

    Returns 0 for an identically zero array.
    """
    w = np.abs(np.asarray(values)) ** 2
    total = float(w.sum())
    if total == 0.0:
        return 0.0
    b = band_nodes
    band = w[:b, :].sum() + w[-b:, :].sum() + w[b:-b, :b].sum() + w[b:-b, -b:].sum()
    return float(band) / total


def check_boundary_mass(field: ComplexField, context: str, limit: float = BOUNDARY_MASS_LIMIT) -> None:
    frac = boundary_mass_fraction(field.values, field.grid)
    if frac > limit:
        raise GeometryError(
            f"boundary-mass guard tripped ({context}): fraction {frac:.3e} exceeds {limit:.1e}"
        )


def _spectral_translate(values: np.ndarray, grid: Grid2D, sx: float, sy: float) -> np.ndarray:
    """Shift a band-limited field by ``(sx, sy)`` via Fourier phase ramps."""
    KX, KY = wavenumber_meshes(grid)
    spectrum = np.fft.fft2(values)
    spectrum *= np.exp(-1j * (KX * sx + KY * sy))
    return np.fft.ifft2(spectrum)


def _quarter_turn(field: ComplexField, pivot: tuple[float, float], turns: int) -> ComplexField:
    """Rotate a field by ``turns * 90`` degrees (counterclockwise) about ``pivot``.

    The rotation is decomposed into an exact index permutation about the grid
    node nearest the pivot followed by a spectral sub-node translation, so it
    is exact for band-limited interior-supported fields. Requires square
    spacing; content carried outside the grid by the permutation is dropped
    (it must be numerically zero, which the boundary-mass guard enforces).
    """
    grid = field.grid
    if abs(grid.dx - grid.dy) > 1e-12 * max(grid.dx, grid.dy):
        raise GeometryError("quarter-turn rotation requires square grid spacing (dx == dy)")
    px, py = float(pivot[0]), float(pivot[1])
    if not grid.contains(px, py):
        raise GeometryError(f"rotation pivot ({px}, {py}) lies outside the grid")
    if turns % 4 == 0:
        return field
    i0 = int(np.clip(round((px - grid.x0) / grid.dx), 0, grid.nx - 1))
    j0 = int(np.clip(round((py - grid.y0) / grid.dy), 0, grid.ny - 1))
    qx = grid.x0 + i0 * grid.dx
    qy = grid.y0 + j0 * grid.dy

    src = field.values
    for _ in range(turns % 4):
        src = _nodal_quarter_turn(src, grid, i0, j0)

    # Compose the nodal rotation with the residual pivot offset:
    # R_pivot = T_b o R_node with b = (p - q) - R^turns (p - q).
    du, dv = px - qx, py - qy
    ru, rv = du, dv
    for _ in range(turns % 4):
        ru, rv = -rv, ru
    bx, by = du - ru, dv - rv
    if bx != 0.0 or by != 0.0:
        src = _spectral_translate(src, grid, bx, by)
    return ComplexField(grid, src, _trusted=True)


def _nodal_quarter_turn(values: np.ndarray, grid: Grid2D, i0: int, j0: int) -> np.ndarray:
    """+90 degree rotation about node ``(i0, j0)``: out[i, j] = in[j + C, D - i]."""
    nx, ny = grid.nx, grid.ny
    C = i0 - j0
    D = i0 + j0
    out = np.zeros_like(values)
    j_lo = max(0, -C)
    j_hi = min(ny, nx - C)
    i_lo = max(0, D - ny + 1)
    i_hi = min(nx, D + 1)
    if j_lo >= j_hi or i_lo >= i_hi:
        return out
    block = values[j_lo + C : j_hi + C, D - i_hi + 1 : D - i_lo + 1]
    out[i_lo:i_hi, j_lo:j_hi] = block[:, ::-1].T
    return out


def rotate_field_90(field: ComplexField, pivot: tuple[float, float]) -> ComplexField:
    """Rotate a field by +90 degrees (counterclockwise) about ``pivot``.

    Both the envelope and the carrier rotate: a ``+x``-moving packet becomes
    ``+y``-moving. The rotated support must stay inside the grid.

    Raises
    ------
    GeometryError
        If more than ``BOUNDARY_MASS_LIMIT`` of the input or output squared
        norm sits within 4 nodes of a boundary, if the pivot falls off the
        grid, or if the spacing is not square.
    """
    if np.any(field.values):
        check_boundary_mass(field, "rotation input")
    rotated = _quarter_turn(field, pivot, +1)
    if np.any(rotated.values):
        check_boundary_mass(rotated, "rotation output")
    return rotated


def _cone_mask(grid: Grid2D, axis_angle: float, half_angle: float) -> np.ndarray:
    KX, KY = wavenumber_meshes(grid)
    theta = np.arctan2(KY, KX)
    diff = np.mod(theta - axis_angle + np.pi, 2.0 * np.pi) - np.pi
    return np.abs(diff) <= half_angle


def momentum_cone_split(
    field: ComplexField, axis_angle: float, half_angle: float
) -> tuple[ComplexField, ComplexField]:
    """Split a field into spectral content inside/outside a momentum cone.

    ``f_in`` is the inverse transform of the spectrum restricted to
    wavevector directions within ``half_angle`` of ``axis_angle``; ``f_out``
    is computed as ``f - f_in`` so the two parts reconstruct the input to
    rounding.
    """
    mask = _cone_mask(field.grid, axis_angle, half_angle)
    f_in = np.fft.ifft2(np.fft.fft2(field.values) * mask)
    inside = ComplexField(field.grid, f_in, _trusted=True)
    outside = ComplexField(field.grid, field.values - f_in, _trusted=True)
    return inside, outside


def cone_mass_fraction(field: ComplexField, axis_angle: float, half_angle: float) -> float:
    """Fraction of the squared norm whose wavevector lies inside the cone."""
    mask = _cone_mask(field.grid, axis_angle, half_angle)
    spectrum = np.abs(np.fft.fft2(field.values)) ** 2
    total = float(spectrum.sum())
    if total == 0.0:
        return 0.0
    return float(spectrum[mask].sum()) / total
