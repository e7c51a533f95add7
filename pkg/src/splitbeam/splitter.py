"""Idealized two-port beam splitter, detector definitions, and collapse projection.

The splitter acts instantaneously at its event time on the whole field. The
field is decomposed by momentum cones into a straight-port mode ``a`` (in
axis) and a turned-port mode ``b`` (out axis); content outside both cones
passes through unchanged. With mixing matrix ``M = [[m_aa, m_ab], [m_ba,
m_bb]]`` acting on the port amplitudes, the output field is

    (m_aa * a + m_ba * R a + m_ab * R^-1 b + m_bb * b)

where ``R`` is the +90 degree rotation about the splitter position that maps
the straight port onto the turned port. The backward map applied to the
conjugate (advanced) wave is the bilinear transpose of the forward map,
implemented as ``conj(forward_with_M_dagger(conj(field)))``; for the real
Hadamard convention ``M`` is real symmetric and this is literally
``conj(U(conj(field)))``. The transpose (rather than the forward map itself)
is what keeps the global transition amplitude invariant across the event.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError
from .grid import (
    ComplexField,
    GaussianSpec,
    _quarter_turn,
    check_boundary_mass,
    gaussian_packet,
    momentum_cone_split,
)

#: Largest tolerable fraction of an incident field's squared norm outside
#: the union of the two port cones.
OUTSIDE_CONE_LIMIT = 1e-6

SPLITTER_CONVENTIONS = ("real-hadamard", "symmetric-i")

_SQRT2 = np.sqrt(2.0)

# Port mixing matrices, rows = (straight, turned) outputs, cols = (a, b) inputs.
_MATRICES = {
    "real-hadamard": np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / _SQRT2,
    "symmetric-i": np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=complex) / _SQRT2,
}


@dataclass(frozen=True)
class SplitterSpec:
    """Geometry and timing of the instantaneous two-port splitter."""

    position: tuple[float, float] = (400.0, 0.0)
    event_time: float = 1000.0
    in_axis: float = 0.0
    out_axis: float = np.pi / 2.0
    cone_half_angle: float = np.pi / 4.0

    def __post_init__(self):
        delta = (self.out_axis - self.in_axis) % (2.0 * np.pi)
        if not (abs(delta - np.pi / 2.0) < 1e-9):
            raise ConfigError(
                "splitter out_axis must sit +90 degrees from in_axis "
                f"(got separation {delta:.6f} rad)"
            )
        if not (0.0 < self.cone_half_angle <= np.pi / 4.0 + 1e-12):
            raise ConfigError("cone_half_angle must lie in (0, pi/4]")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle used for corridor observables."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ConfigError(f"degenerate rectangle {self}")


@dataclass(frozen=True)
class DetectorSpec:
    """A detector: its name, final-condition packet, and corridor region."""

    name: str
    final_packet: GaussianSpec
    corridor: Rect | None = None


def _mixed_output(field: ComplexField, s: SplitterSpec, matrix: np.ndarray) -> ComplexField:
    a, remainder = momentum_cone_split(field, s.in_axis, s.cone_half_angle)
    b, rest = momentum_cone_split(remainder, s.out_axis, s.cone_half_angle)

    norm_sq = field.norm() ** 2
    if norm_sq > 0.0:
        outside = rest.norm() ** 2 / norm_sq
        if outside > OUTSIDE_CONE_LIMIT:
            raise GeometryError(
                f"incident field has fraction {outside:.3e} of its norm outside "
                "the splitter port cones"
            )

    m_aa, m_ab = matrix[0]
    m_ba, m_bb = matrix[1]
    out = m_aa * a.values + m_bb * b.values
    if np.any(a.values):
        out = out + m_ba * _quarter_turn(a, s.position, +1).values
    if np.any(b.values):
        out = out + m_ab * _quarter_turn(b, s.position, -1).values
    out = out + rest.values
    return ComplexField(field.grid, out, _trusted=True)


def apply_splitter_forward(
    psi: ComplexField, s: SplitterSpec, convention: str = "real-hadamard"
) -> ComplexField:
    """Apply the two-port splitter to the forward wave at its event time."""
    if convention not in _MATRICES:
        raise ConfigError(f"unknown splitter convention {convention!r}")
    if np.any(psi.values):
        check_boundary_mass(psi, "splitter input")
    return _mixed_output(psi, s, _MATRICES[convention])


def apply_splitter_backward(
    phi_star: ComplexField, s: SplitterSpec, convention: str = "real-hadamard"
) -> ComplexField:
    """Apply the transposed splitter map to the backward (conjugate) wave.

    Implemented as ``conj(forward_with_M_dagger(conj(phi_star)))``, which
    equals the bilinear transpose of the forward map and therefore preserves
    ``integral(phi_star * psi)`` across the event.
    """
    if convention not in _MATRICES:
        raise ConfigError(f"unknown splitter convention {convention!r}")
    adjoint = np.conj(_MATRICES[convention]).T
    if np.any(phi_star.values):
        check_boundary_mass(phi_star, "splitter input")
    mirrored = _mixed_output(phi_star.conjugate(), s, adjoint)
    return mirrored.conjugate()


def collapse_project(psi: ComplexField, detector: DetectorSpec) -> ComplexField:
    """State replacement at measurement: return the detector's normalized packet.

    Used only to render post-measurement probability-density snapshots in
    single-wave (collapse) runs; idempotent by construction.
    """
    return gaussian_packet(psi.grid, detector.final_packet)


def default_corridor(s: SplitterSpec, detector: DetectorSpec) -> Rect:
    """Middle 50% of the splitter-detector segment, 6 sigma wide transversely.

    Requires the segment to be axis-aligned, which the default geometry and
    every supported configuration satisfy.
    """
    bx, by = s.position
    cx, cy = detector.final_packet.cx, detector.final_packet.cy
    half_width = 3.0 * detector.final_packet.sigma
    if abs(cy - by) < 1e-9 and abs(cx - bx) > 0:
        x_lo = bx + 0.25 * (cx - bx)
        x_hi = bx + 0.75 * (cx - bx)
        return Rect(min(x_lo, x_hi), max(x_lo, x_hi), by - half_width, by + half_width)
    if abs(cx - bx) < 1e-9 and abs(cy - by) > 0:
        y_lo = by + 0.25 * (cy - by)
        y_hi = by + 0.75 * (cy - by)
        return Rect(bx - half_width, bx + half_width, min(y_lo, y_hi), max(y_lo, y_hi))
    raise ConfigError(
        f"detector {detector.name} is not axis-aligned with the splitter; "
        "set its corridor explicitly"
    )
