import numpy as np
import pytest

from splitbeam import (
    ComplexField,
    ConfigError,
    DetectorSpec,
    GaussianSpec,
    GeometryError,
    SplitterSpec,
    apply_splitter_backward,
    apply_splitter_forward,
    collapse_project,
    gaussian_packet,
    global_amplitude,
    inner_product,
    make_grid,
)
from splitbeam.grid import cone_mass_fraction
from splitbeam.splitter import default_corridor

GRID = make_grid(256, 256, 1.5, 1.5, -192.0, -192.0)
SPLITTER = SplitterSpec(position=(0.0, 0.0), event_time=100.0)


# sigma = 16 keeps the packets' momentum content nine sigma inside the port
# cones, so outside-cone dust stays below every guard in these tests
def _mode_a(cx=0.0, cy=0.0, sigma=16.0):
    return gaussian_packet(GRID, GaussianSpec(cx, cy, sigma, 0.4, 0.0))


def _mode_b(cx=0.0, cy=0.0, sigma=16.0):
    return gaussian_packet(GRID, GaussianSpec(cx, cy, sigma, 0.0, 0.4))


def test_axes_must_differ_by_quarter_turn():
    with pytest.raises(ConfigError):
        SplitterSpec(in_axis=0.0, out_axis=1.0)


@pytest.mark.parametrize("convention", ["real-hadamard", "symmetric-i"])
def test_port_balance_and_unitarity(convention):
    out = apply_splitter_forward(_mode_a(), SPLITTER, convention)
    assert abs(out.norm() - 1.0) < 1e-8
    straight = cone_mass_fraction(out, SPLITTER.in_axis, SPLITTER.cone_half_angle)
    turned = cone_mass_fraction(out, SPLITTER.out_axis, SPLITTER.cone_half_angle)
    assert straight == pytest.approx(0.5, abs=1e-6)
    assert turned == pytest.approx(0.5, abs=1e-6)


def test_zero_field_passes_through():
    zero = ComplexField(GRID, np.zeros(GRID.shape, dtype=complex))
    out = apply_splitter_forward(zero, SPLITTER)
    assert not np.any(out.values)


def test_pure_turned_mode_input():
    b = _mode_b()
    out = apply_splitter_forward(b, SPLITTER)
    # expected output is (R^-1 b - b)/sqrt(2)
    from splitbeam.grid import _quarter_turn

    r_inv_b = _quarter_turn(b, SPLITTER.position, -1)
    expected = (r_inv_b.values - b.values) / np.sqrt(2.0)
    assert np.max(np.abs(out.values - expected)) < 1e-10
    straight = cone_mass_fraction(out, SPLITTER.in_axis, SPLITTER.cone_half_angle)
    turned = cone_mass_fraction(out, SPLITTER.out_axis, SPLITTER.cone_half_angle)
    assert straight == pytest.approx(0.5, abs=1e-6)
    assert turned == pytest.approx(0.5, abs=1e-6)


def test_incident_cone_precondition():
    diagonal = gaussian_packet(GRID, GaussianSpec(0.0, 0.0, 10.0, -0.3, -0.3))
    with pytest.raises(GeometryError):
        apply_splitter_forward(diagonal, SPLITTER)


def test_forward_map_is_self_adjoint_real_hadamard():
    rng = np.random.default_rng(7)
    for _ in range(4):
        f = _random_two_cone_field(rng)
        g = _random_two_cone_field(rng)
        lhs = inner_product(apply_splitter_forward(f, SPLITTER), g)
        rhs = inner_product(f, apply_splitter_forward(g, SPLITTER))
        assert lhs == pytest.approx(rhs, abs=1e-8)


@pytest.mark.parametrize("convention", ["real-hadamard", "symmetric-i"])
def test_backward_is_bilinear_transpose(convention):
    """integral((W chi) psi) == integral(chi (U psi)) keeps the global
    amplitude invariant across the event for any field pair."""
    rng = np.random.default_rng(11)
    for _ in range(4):
        psi = _random_two_cone_field(rng)
        chi = _random_two_cone_field(rng).conjugate()
        lhs = global_amplitude(apply_splitter_backward(chi, SPLITTER, convention), psi)
        rhs = global_amplitude(chi, apply_splitter_forward(psi, SPLITTER, convention))
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_backward_splits_advanced_packet_into_retrace_and_unused_port():
    phi_star = _mode_a().conjugate()  # stored carrier -x: an advanced wave
    out = apply_splitter_backward(phi_star, SPLITTER)
    retrace = cone_mass_fraction(out, np.pi, SPLITTER.cone_half_angle)
    unused = cone_mass_fraction(out, -np.pi / 2.0, SPLITTER.cone_half_angle)
    assert retrace == pytest.approx(0.5, abs=1e-6)
    assert unused == pytest.approx(0.5, abs=1e-6)


def test_backward_amplitudes_agree_for_both_ports():
    """Both advanced ports send the same retracing amplitude toward the source."""
    psi = _mode_a()
    phi_a = _mode_a().conjugate()
    phi_b = _mode_b().conjugate()
    a_d1 = global_amplitude(apply_splitter_backward(phi_a, SPLITTER), psi)
    a_d2 = global_amplitude(apply_splitter_backward(phi_b, SPLITTER), psi)
    assert abs(a_d1) == pytest.approx(abs(a_d2), abs=1e-3)
    assert abs(a_d1) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-6)


def test_forward_then_backward_roundtrip_on_conjugate():
    """W(conj(U f)) = conj(f): the involution property of the real Hadamard."""
    f = _mode_a()
    u_f = apply_splitter_forward(f, SPLITTER)
    back = apply_splitter_backward(u_f.conjugate(), SPLITTER)
    assert (back - f.conjugate()).norm() < 1e-8


def _random_two_cone_field(rng) -> ComplexField:
    values = np.zeros(GRID.shape, dtype=complex)
    for _ in range(rng.integers(1, 3)):
        cx, cy = rng.uniform(-20, 20, size=2)
        k = rng.uniform(0.35, 0.45)
        axis = rng.choice([0.0, np.pi / 2.0])
        spec = GaussianSpec(cx, cy, rng.uniform(14, 18), k * np.cos(axis), k * np.sin(axis))
        values += rng.uniform(0.2, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi)) * (
            gaussian_packet(GRID, spec).values
        )
    return ComplexField(GRID, values)


def test_collapse_projection_replaces_state():
    det = DetectorSpec("d1", GaussianSpec(40.0, 0.0, 10.0, 0.4, 0.0))
    psi = _mode_a()
    collapsed = collapse_project(psi, det)
    expected = gaussian_packet(GRID, det.final_packet)
    assert np.array_equal(collapsed.values, expected.values)
    twice = collapse_project(collapsed, det)
    assert np.array_equal(twice.values, collapsed.values)
    assert collapsed.norm() == pytest.approx(1.0, abs=1e-12)


def test_default_corridor_geometry():
    s = SplitterSpec(position=(400.0, 0.0), event_time=1000.0)
    d1 = DetectorSpec("d1", GaussianSpec(800.0, 0.0, 20.0, 0.4, 0.0))
    d2 = DetectorSpec("d2", GaussianSpec(400.0, 400.0, 20.0, 0.0, 0.4))
    r1 = default_corridor(s, d1)
    assert (r1.x_min, r1.x_max, r1.y_min, r1.y_max) == (500.0, 700.0, -60.0, 60.0)
    r2 = default_corridor(s, d2)
    assert (r2.x_min, r2.x_max, r2.y_min, r2.y_max) == (340.0, 460.0, 100.0, 300.0)
    with pytest.raises(ConfigError):
        default_corridor(s, DetectorSpec("d1", GaussianSpec(800.0, 300.0, 20.0)))
