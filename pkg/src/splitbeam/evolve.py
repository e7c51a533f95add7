"""Time evolution under the retarded and advanced free-particle wave equations.

The forward (retarded) equation is ``i dpsi/dt = -(1/2) laplacian(psi)``; the
backward (advanced) equation is its complex conjugate and propagates the
conjugate wave ``phi*`` from final conditions toward earlier times. Both are
integrated with the split-step spectral method; with no potential the kinetic
phase ``exp(-i k^2 tau / 2)`` is exact for any step size.

The advanced backward step applies the *same* spectral multiplier as the
retarded forward step over an equal duration: reversing time and conjugating
the equation each flip the sign of the phase, and the stored field is the
conjugate solution, so the two sign flips cancel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError
from .grid import BOUNDARY_MASS_LIMIT, ComplexField, boundary_mass_fraction, wavenumber_meshes


@dataclass
class EvolutionSpec:
    """One evolution interval; direction comes from which evolve op is called."""

    t_start: float
    t_end: float
    dt: float = 1.0
    potential: np.ndarray | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        duration = abs(self.t_end - self.t_start)
        steps = round(duration / self.dt)
        if abs(steps * self.dt - duration) > 1e-9:
            raise ConfigError(
                f"interval {duration} is not an integer multiple of dt={self.dt}"
            )

    @property
    def duration(self) -> float:
        return abs(self.t_end - self.t_start)

    @property
    def steps(self) -> int:
        return max(1, round(self.duration / self.dt))


def _free_propagate(field: ComplexField, tau: float) -> ComplexField:
    """Exact free kinetic step: multiply the spectrum by ``exp(-i k^2 tau / 2)``.

    ``tau`` may have either sign; positive runs the retarded equation forward.
    """
    if tau == 0.0:
        return field
    KX, KY = wavenumber_meshes(field.grid)
    phase = np.exp(-0.5j * (KX**2 + KY**2) * tau)
    values = np.fft.ifft2(np.fft.fft2(field.values) * phase)
    return ComplexField(field.grid, values, _trusted=True)


def _strang_propagate(field: ComplexField, spec: EvolutionSpec) -> ComplexField:
    """Strang-split stepping for a (real, static) potential."""
    V = np.asarray(spec.potential, dtype=float)
    if V.shape != field.grid.shape:
        raise ValueError("potential shape does not match the grid")
    n = spec.steps
    dt = spec.duration / n
    KX, KY = wavenumber_meshes(field.grid)
    kinetic = np.exp(-0.5j * (KX**2 + KY**2) * dt)
    half_v = np.exp(-0.5j * V * dt)
    values = field.values * half_v
    for step in range(n):
        values = np.fft.ifft2(np.fft.fft2(values) * kinetic)
        values *= half_v if step == n - 1 else half_v * half_v
    return ComplexField(field.grid, values, _trusted=True)


def _guard(field: ComplexField, when: float, check: bool) -> None:
    if not check or not np.any(field.values):
        return
    frac = boundary_mass_fraction(field.values, field.grid)
    if frac > BOUNDARY_MASS_LIMIT:
        raise GeometryError(
            f"boundary-mass guard tripped at t={when:g}: fraction {frac:.3e} "
            f"exceeds {BOUNDARY_MASS_LIMIT:.1e}"
        )


def evolve_retarded(
    psi: ComplexField, spec: EvolutionSpec, *, check_boundary: bool = True
) -> ComplexField:
    """Evolve a forward wave from ``t_start`` to ``t_end >= t_start``."""
    if spec.t_end < spec.t_start:
        raise ValueError("retarded evolution requires t_end >= t_start")
    _guard(psi, spec.t_start, check_boundary)
    if spec.potential is None:
        out = _free_propagate(psi, spec.duration)
    else:
        out = _strang_propagate(psi, spec)
    _guard(out, spec.t_end, check_boundary)
    return out


def evolve_advanced(
    phi_star: ComplexField, spec: EvolutionSpec, *, check_boundary: bool = True
) -> ComplexField:
    """Evolve a conjugate (advanced) wave backward from ``t_start`` to ``t_end <= t_start``.

    A packet stored with carrier ``exp(-i k . r)`` retraces the path its
    unconjugated counterpart would travel forward, spreading as it goes.
    """
    if spec.t_end > spec.t_start:
        raise ValueError("advanced evolution requires t_end <= t_start")
    _guard(phi_star, spec.t_start, check_boundary)
    if spec.potential is None:
        out = _free_propagate(phi_star, spec.duration)
    else:
        out = _strang_propagate(phi_star, spec)
    _guard(out, spec.t_end, check_boundary)
    return out
