"""Experiment orchestration: forward/backward passes, reports, and artifacts.

A run walks the forward wave from the source through the (optional) splitter
event to the final time, and, in two-wave mode, walks the conjugate backward
wave from the configured detector's final packet down to the initial time,
applying the transposed splitter on the way. Snapshots, amplitudes,
conservation diagnostics, and path observables are collected at the
configured snapshot times; a time equal to the splitter event yields a
``pre``/``post`` pair straddling the instantaneous event.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .density import (
    corridor_mass,
    ct_density_current,
    global_amplitude,
    local_conservation_residual,
    marginal_moments,
    nonfactorization_values,
    st_density_current,
    strip_marginal,
    support_component_count,
    transition_amplitude_ct,
)
from .errors import GeometryError
from .evolve import EvolutionSpec, _free_propagate, evolve_advanced, evolve_retarded
from .grid import (
    BOUNDARY_MASS_LIMIT,
    ComplexField,
    boundary_mass_fraction,
    cone_mass_fraction,
    gaussian_packet,
)
from .io import complex_dict, export_snapshot, write_yaml
from .oracle import oracle_field, oracle_free_gaussian
from .splitter import apply_splitter_backward, apply_splitter_forward, collapse_project

ST_SNAPSHOT_SCALE = 1.0 / math.sqrt(2.0)


@dataclass
class Snapshot:
    """One exported density snapshot (values already carry ``scale``)."""

    time: float
    phase: str
    kind: str
    values: np.ndarray
    scale: float
    meta: dict


@dataclass
class RunReport:
    """All scalar outputs of one run."""

    mode: str
    branch: str
    splitter_convention: str
    config_hash: str
    port_balance: dict | None = None
    residuals: list = field(default_factory=list)
    observables: list = field(default_factory=list)
    # single-wave quantities
    amplitudes: dict | None = None
    probabilities: dict | None = None
    norm_series: list | None = None
    # two-wave quantities
    amplitude_series: list | None = None
    amplitude: dict | None = None
    amplitude_center_referenced: dict | None = None
    probability: float | None = None
    max_relative_amplitude_deviation: float | None = None
    max_relative_re_volume_deviation: float | None = None
    max_relative_im_volume_deviation: float | None = None
    equivalence: dict | None = None
    nonfactorization: dict | None = None

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "branch": self.branch,
            "splitter_convention": self.splitter_convention,
            "config_hash": self.config_hash,
            "port_balance": self.port_balance,
            "residuals": self.residuals,
            "observables": self.observables,
        }
        if self.mode == "ct":
            out["amplitudes"] = self.amplitudes
            out["amplitudes_center_referenced"] = self.amplitude_center_referenced
            out["probabilities"] = self.probabilities
            out["norm_series"] = self.norm_series
        else:
            out["amplitude_series"] = self.amplitude_series
            out["amplitude"] = self.amplitude
            out["amplitude_center_referenced"] = self.amplitude_center_referenced
            out["probability"] = self.probability
            out["max_relative_amplitude_deviation"] = self.max_relative_amplitude_deviation
            out["max_relative_re_volume_deviation"] = self.max_relative_re_volume_deviation
            out["max_relative_im_volume_deviation"] = self.max_relative_im_volume_deviation
            out["equivalence"] = self.equivalence
            out["nonfactorization"] = self.nonfactorization
        return out


@dataclass
class RunArtifacts:
    config: ExperimentConfig
    report: RunReport
    snapshots: list[Snapshot]
    provenance: dict


# ---------------------------------------------------------------------------
# wave walkers


def _walk_forward(cfg: ExperimentConfig) -> tuple[dict, ComplexField]:
    """Forward fields at every schedule point, plus the field at ``t_final``."""
    psi = gaussian_packet(cfg.grid, cfg.source)
    t_cur = 0.0
    split_done = cfg.splitter is None
    event = cfg.splitter.event_time if cfg.splitter else None
    fields: dict[tuple[float, str], ComplexField] = {}

    def advance_to(t: float) -> None:
        nonlocal psi, t_cur, split_done
        if not split_done and t_cur <= event < t:
            if event > t_cur:
                psi = evolve_retarded(psi, EvolutionSpec(t_cur, event, cfg.dt))
            psi = apply_splitter_forward(psi, cfg.splitter, cfg.splitter_convention)
            split_done = True
            t_cur = event
        if t > t_cur:
            psi = evolve_retarded(psi, EvolutionSpec(t_cur, t, cfg.dt))
            t_cur = t

    for t, phase in cfg.schedule():
        if phase == "post":
            if not split_done:
                psi = apply_splitter_forward(psi, cfg.splitter, cfg.splitter_convention)
                split_done = True
        else:
            advance_to(t)
        fields[(t, phase)] = psi
    advance_to(cfg.t_final)
    return fields, psi


def _final_condition_field(cfg: ExperimentConfig) -> ComplexField:
    if cfg.final_condition == "evolved-source":
        return oracle_field(oracle_free_gaussian(cfg.source, cfg.t_final), cfg.grid)
    return gaussian_packet(cfg.grid, cfg.detector().final_packet)


def _walk_backward(cfg: ExperimentConfig) -> dict:
    """Backward conjugate-wave fields at every schedule point.

    The boundary guard is disabled on the raw backward legs: the component
    exiting the unused splitter port legitimately leaves the experiment
    region, and its periodic wraparound is inert in every reported quantity
    (pre-validated analytically at config time; density snapshots are still
    guarded).
    """
    phi_star = _final_condition_field(cfg).conjugate()
    t_cur = cfg.t_final
    split_done = cfg.splitter is None
    event = cfg.splitter.event_time if cfg.splitter else None
    fields: dict[tuple[float, str], ComplexField] = {}

    def retreat_to(t: float) -> None:
        nonlocal phi_star, t_cur, split_done
        if not split_done and t < event <= t_cur:
            if event < t_cur:
                phi_star = evolve_advanced(
                    phi_star, EvolutionSpec(t_cur, event, cfg.dt), check_boundary=False
                )
            phi_star = apply_splitter_backward(phi_star, cfg.splitter, cfg.splitter_convention)
            split_done = True
            t_cur = event
        if t < t_cur:
            phi_star = evolve_advanced(
                phi_star, EvolutionSpec(t_cur, t, cfg.dt), check_boundary=False
            )
            t_cur = t

    for t, phase in reversed(cfg.schedule()):
        if phase == "pre":
            if not split_done:
                phi_star = apply_splitter_backward(
                    phi_star, cfg.splitter, cfg.splitter_convention
                )
                split_done = True
        else:
            retreat_to(t)
        fields[(t, phase)] = phi_star
    return fields


# ---------------------------------------------------------------------------
# observables


def _axis_for(cfg: ExperimentConfig, t: float) -> tuple[str, float]:
    """Propagation axis and transverse line for the leg active at time ``t``."""
    if cfg.splitter is not None and t > cfg.splitter.event_time:
        det = cfg.detector()
        bx, by = cfg.splitter.position
        if abs(det.final_packet.cy - by) <= abs(det.final_packet.cx - bx):
            return "x", by
        return "y", bx
    if abs(cfg.source.ky) > abs(cfg.source.kx):
        return "y", cfg.source.cx
    return "x", cfg.source.cy


def _observables_record(
    cfg: ExperimentConfig, t: float, phase: str, density_abs: np.ndarray
) -> dict:
    axis, line = _axis_for(cfg, t)
    half_width = 3.0 * cfg.detector().final_packet.sigma
    coords, weights = strip_marginal(density_abs, cfg.grid, axis, line, half_width)
    mean, width, skew = marginal_moments(coords, weights)
    record = {
        "time": t,
        "phase": phase,
        "axis": axis,
        "center": mean,
        "width": width,
        "skewness": skew,
        "modality": support_component_count(density_abs, cfg.modality_threshold),
    }
    if cfg.splitter is not None:
        for name, det in cfg.detectors.items():
            record[f"corridor_mass_{name}"] = corridor_mass(density_abs, cfg.grid, det.corridor)
    return record


def _residual_times(cfg: ExperimentConfig) -> set[float]:
    """Interior snapshot times whose centered window avoids the splitter event."""
    event = cfg.splitter.event_time if cfg.splitter else None
    times = set()
    for t, _ in cfg.schedule():
        if t <= 0.0 or t >= cfg.t_final:
            continue
        if event is not None and abs(t - event) <= cfg.dt + 1e-9:
            continue
        times.add(t)
    return times


def _midflight_time(cfg: ExperimentConfig) -> float | None:
    event = cfg.splitter.event_time if cfg.splitter else None
    target = (event if event is not None else cfg.t_final) / 2.0
    candidates = [t for t in _residual_times(cfg) if event is None or t < event]
    if not candidates:
        candidates = sorted(_residual_times(cfg))
    if not candidates:
        return None
    return min(candidates, key=lambda t: abs(t - target))


def _guard_density(values: np.ndarray, cfg: ExperimentConfig, t: float) -> None:
    # band fraction weighted by |density| mass
    frac = boundary_mass_fraction(np.sqrt(np.abs(values)), cfg.grid)
    if frac > BOUNDARY_MASS_LIMIT:
        raise GeometryError(
            f"density snapshot at t={t:g} has boundary-band fraction {frac:.3e}"
        )


# ---------------------------------------------------------------------------
# report assembly


def _center_referenced(amplitude: complex, packet) -> complex:
    """Rebase the amplitude to a carrier phase referenced at the packet center."""
    return amplitude * np.exp(1j * (packet.kx * packet.cx + packet.ky * packet.cy))


def _assemble_ct(cfg: ExperimentConfig, fwd: dict, psi_final: ComplexField) -> RunArtifacts:
    report = RunReport(
        mode="ct",
        branch=cfg.branch,
        splitter_convention=cfg.splitter_convention,
        config_hash=cfg.config_hash(),
    )
    snapshots: list[Snapshot] = []
    norm_series = []
    residual_times = _residual_times(cfg)

    for t, phase in cfg.schedule():
        psi = fwd[(t, phase)]
        rho = (np.conj(psi.values) * psi.values).real
        _guard_density(rho, cfg, t)
        norm_series.append({"time": t, "phase": phase, "norm": psi.norm()})
        report.observables.append(_observables_record(cfg, t, phase, rho))
        if t in residual_times and phase == "at":
            pair_m = ct_density_current(_free_propagate(psi, -cfg.dt))
            pair_p = ct_density_current(_free_propagate(psi, +cfg.dt))
            report.residuals.append(
                {"time": t, "value": local_conservation_residual(pair_m, pair_p, cfg.dt)}
            )
        snapshots.append(
            Snapshot(
                time=t, phase=phase, kind="probability-density",
                values=rho, scale=1.0, meta={"norm": psi.norm()},
            )
        )

    amplitudes, probabilities, rebased = {}, {}, {}
    for name, det in cfg.detectors.items():
        xi = gaussian_packet(cfg.grid, det.final_packet)
        a = transition_amplitude_ct(psi_final, xi)
        amplitudes[name] = complex_dict(a)
        probabilities[name] = float(abs(a) ** 2)
        rebased[name] = complex_dict(_center_referenced(a, det.final_packet))
    report.amplitudes = amplitudes
    report.probabilities = probabilities
    report.amplitude_center_referenced = rebased
    report.norm_series = norm_series

    if cfg.splitter is not None:
        post = fwd.get((cfg.splitter.event_time, "post"))
        if post is not None:
            s = cfg.splitter
            report.port_balance = {
                "straight": cone_mass_fraction(post, s.in_axis, s.cone_half_angle),
                "turned": cone_mass_fraction(post, s.out_axis, s.cone_half_angle),
            }
        collapsed = collapse_project(psi_final, cfg.detector())
        rho_c = (np.conj(collapsed.values) * collapsed.values).real
        snapshots.append(
            Snapshot(
                time=cfg.t_final, phase="collapse", kind="probability-density",
                values=rho_c, scale=1.0,
                meta={"norm": collapsed.norm(), "branch": cfg.branch},
            )
        )
    return RunArtifacts(cfg, report, snapshots, _provenance(cfg))


def _assemble_st(cfg: ExperimentConfig, fwd: dict, psi_final: ComplexField) -> RunArtifacts:
    report = RunReport(
        mode="st",
        branch=cfg.branch,
        splitter_convention=cfg.splitter_convention,
        config_hash=cfg.config_hash(),
    )
    bwd = _walk_backward(cfg)
    snapshots: list[Snapshot] = []
    scale = ST_SNAPSHOT_SCALE if cfg.splitter is not None else 1.0
    residual_times = _residual_times(cfg)

    series: list[tuple[float, str, complex]] = []
    for t, phase in cfg.schedule():
        psi = fwd[(t, phase)]
        phi_star = bwd[(t, phase)]
        rho_s = phi_star.values * psi.values
        _guard_density(rho_s, cfg, t)
        a_s = global_amplitude(phi_star, psi)
        series.append((t, phase, a_s))
        report.observables.append(_observables_record(cfg, t, phase, np.abs(rho_s)))
        if t in residual_times and phase == "at":
            pair_m = st_density_current(
                _free_propagate(phi_star, +cfg.dt), _free_propagate(psi, -cfg.dt)
            )
            pair_p = st_density_current(
                _free_propagate(phi_star, -cfg.dt), _free_propagate(psi, +cfg.dt)
            )
            report.residuals.append(
                {"time": t, "value": local_conservation_residual(pair_m, pair_p, cfg.dt)}
            )
        snapshots.append(
            Snapshot(
                time=t, phase=phase, kind="amplitude-density",
                values=rho_s * scale, scale=scale,
                meta={"amplitude": complex_dict(a_s)},
            )
        )

    a0 = series[0][2]
    ref = abs(a0)
    report.amplitude_series = [
        {"time": t, "phase": ph, **complex_dict(a)} for t, ph, a in series
    ]
    report.amplitude = complex_dict(a0)
    report.amplitude_center_referenced = complex_dict(
        _center_referenced(a0, cfg.detector().final_packet)
    )
    report.probability = float(abs(a0) ** 2)
    if ref > 0:
        report.max_relative_amplitude_deviation = max(
            abs(a - a0) / ref for _, _, a in series
        )
        report.max_relative_re_volume_deviation = max(
            abs(a.real - a0.real) / ref for _, _, a in series
        )
        report.max_relative_im_volume_deviation = max(
            abs(a.imag - a0.imag) / ref for _, _, a in series
        )

    xi = _final_condition_field(cfg) if cfg.final_condition == "evolved-source" \
        else gaussian_packet(cfg.grid, cfg.detector().final_packet)
    a_ct = transition_amplitude_ct(psi_final, xi)
    report.equivalence = {
        "ct_amplitude": complex_dict(a_ct),
        "st_amplitude_t0": complex_dict(a0),
        "abs_difference": float(abs(a_ct - a0)),
    }

    t_mid = _midflight_time(cfg)
    if t_mid is not None:
        lhs, rhs = nonfactorization_values(bwd[(t_mid, "at")], fwd[(t_mid, "at")])
        ratio = float("inf") if min(lhs, rhs) == 0 else float(max(lhs, rhs) / min(lhs, rhs))
        report.nonfactorization = {"time": t_mid, "lhs": lhs, "rhs": rhs, "ratio": ratio}

    if cfg.splitter is not None:
        post = fwd.get((cfg.splitter.event_time, "post"))
        if post is not None:
            s = cfg.splitter
            report.port_balance = {
                "straight": cone_mass_fraction(post, s.in_axis, s.cone_half_angle),
                "turned": cone_mass_fraction(post, s.out_axis, s.cone_half_angle),
            }
    return RunArtifacts(cfg, report, snapshots, _provenance(cfg))


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "artifact_version": __version__,
        "config_hash": cfg.config_hash(),
        "solver": {"method": "split-step-spectral", "dt": cfg.dt},
        "config": cfg.to_dict(),
    }


# ---------------------------------------------------------------------------
# public entry points


def run_experiment(cfg: ExperimentConfig) -> RunArtifacts:
    """Run one configured experiment and return its in-memory artifacts."""
    fwd, psi_final = _walk_forward(cfg)
    if cfg.mode == "ct":
        return _assemble_ct(cfg, fwd, psi_final)
    return _assemble_st(cfg, fwd, psi_final)


def run_both(cfg: ExperimentConfig) -> dict[str, RunArtifacts]:
    """Run both analyses sharing a single forward evolution."""
    fwd, psi_final = _walk_forward(cfg)
    ct = _assemble_ct(dataclasses.replace(cfg, mode="ct"), fwd, psi_final)
    st = _assemble_st(dataclasses.replace(cfg, mode="st"), fwd, psi_final)
    return {"ct": ct, "st": st}


def equivalence_check_st_ct(cfg: ExperimentConfig) -> tuple[complex, complex]:
    """Return the final-time overlap amplitude and the t=0 global amplitude."""
    art = run_experiment(dataclasses.replace(cfg, mode="st"))
    eq = art.report.equivalence
    return (
        complex(eq["ct_amplitude"]["re"], eq["ct_amplitude"]["im"]),
        complex(eq["st_amplitude_t0"]["re"], eq["st_amplitude_t0"]["im"]),
    )


def write_artifacts(artifacts: RunArtifacts, out_dir: str) -> dict:
    """Write snapshots, sidecars, and the report; return written paths."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = artifacts.config
    paths = {"snapshots": []}
    for i, snap in enumerate(artifacts.snapshots):
        name = f"snapshot_{i:02d}_t{snap.time:.3f}_{snap.phase}.csv"
        path = os.path.join(out_dir, name)
        meta = {
            "time": snap.time,
            "phase": snap.phase,
            "kind": snap.kind,
            "mode": cfg.mode,
            "branch": cfg.branch,
            "scale": snap.scale,
            "grid": artifacts.provenance["config"]["grid"],
            "config_hash": artifacts.provenance["config_hash"],
        }
        meta.update(snap.meta)
        export_snapshot(snap.values, cfg.grid, path, meta)
        paths["snapshots"].append(path)
    report_path = os.path.join(out_dir, "report.yaml")
    write_yaml(
        {"report": artifacts.report.as_dict(), "provenance": artifacts.provenance},
        report_path,
    )
    paths["report"] = report_path
    return paths
