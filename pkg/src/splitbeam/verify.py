"""Machine-readable verification suite covering the package invariants.

Each check compares a measured quantity against its pinned threshold and
reports pass/fail; failed checks are results, not errors. The suite can run
on any valid configuration, though the thresholds assume the defaults' scale
separation (packet width well above grid spacing, carriers well below the
Nyquist wavenumber).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .density import ct_density_current, local_conservation_residual, st_density_current
from .evolve import EvolutionSpec, _free_propagate, evolve_retarded
from .grid import gaussian_packet
from .oracle import dispersed_width, oracle_field, oracle_free_gaussian, oracle_overlap, product_width
from .runner import RunArtifacts, run_experiment


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: str
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "threshold": self.threshold,
            "detail": self.detail,
        }


def _observable(report, time: float, key: str, phase: str = "at"):
    for rec in report.observables:
        if abs(rec["time"] - time) < 1e-9 and rec["phase"] == phase:
            return rec[key]
    raise KeyError(f"no observable record at t={time} ({phase})")


def _unrotated_detector_packet(cfg: ExperimentConfig, det) -> "object":
    """Map a detector on the turned splitter leg back onto the straight leg.

    Rotating the turned branch by -90 degrees about the splitter turns its
    geometry into the straight-leg problem, so one free-evolution overlap
    formula covers both ports.
    """
    import dataclasses as _dc

    s = cfg.splitter
    if s is None:
        return det.final_packet
    p = det.final_packet
    bx, by = s.position
    dxp, dyp = p.cx - bx, p.cy - by
    if math.hypot(dxp, dyp) < 1e-12:
        return p
    angle = math.atan2(dyp, dxp)
    diff = (angle - s.out_axis + math.pi) % (2.0 * math.pi) - math.pi
    if abs(diff) > s.cone_half_angle:
        return p
    # -90 degree rotation about the splitter position
    return _dc.replace(
        p,
        cx=bx + dyp,
        cy=by - dxp,
        kx=p.ky,
        ky=-p.kx,
    )


def oracle_predictions(cfg: ExperimentConfig) -> dict:
    """Analytic predictions for a configuration (used by the CLI and tests)."""
    src = cfg.source
    t_f = cfg.t_final
    out = {
        "source_width_series": [
            {"time": t, "width": float(dispersed_width(src.sigma, t))}
            for t, ph in cfg.schedule()
            if ph != "post"
        ],
        "detectors": {},
    }
    split_factor = 1.0 / math.sqrt(2.0) if cfg.splitter is not None else 1.0
    for name, det in cfg.detectors.items():
        packet = _unrotated_detector_packet(cfg, det)
        overlap = oracle_overlap(
            oracle_free_gaussian(packet, 0.0),
            oracle_free_gaussian(src, t_f),
        )
        amp = split_factor * abs(overlap)
        out["detectors"][name] = {
            "free_overlap_modulus": float(abs(overlap)),
            "expected_amplitude_modulus": float(amp),
            "expected_probability": float(amp**2),
        }
    if cfg.splitter is not None:
        te = cfg.splitter.event_time
        mid_pre, mid_post = te / 2.0, (te + t_f) / 2.0
        w_pre = dispersed_width(src.sigma, mid_pre)
        w_post = dispersed_width(src.sigma, mid_post)
        b_pre = dispersed_width(src.sigma, t_f - mid_pre)
        b_post = dispersed_width(src.sigma, t_f - mid_post)
        out["widths"] = {
            "ct_ratio_post_over_pre": float(w_post / w_pre),
            "st_width_pre": product_width(w_pre, b_pre),
            "st_width_post": product_width(w_post, b_post),
            "st_ratio_post_over_pre": float(
                product_width(w_post, b_post) / product_width(w_pre, b_pre)
            ),
        }
    return out


def run_verification(
    cfg: ExperimentConfig,
    ct_art: RunArtifacts | None = None,
    st_d1: RunArtifacts | None = None,
    st_d2: RunArtifacts | None = None,
) -> list[CheckResult]:
    """Execute the full invariant suite; precomputed artifacts may be reused."""
    checks: list[CheckResult] = []
    grid = cfg.grid
    src = cfg.source
    predictions = oracle_predictions(cfg)

    # --- solver vs closed-form oracle ------------------------------------
    psi0 = gaussian_packet(grid, src)
    half_leg = cfg.splitter.event_time / 2.0 if cfg.splitter else cfg.t_final / 4.0
    psi = psi0
    t_prev = 0.0
    along_x = abs(src.kx) >= abs(src.ky)
    for t in (half_leg, cfg.t_final):
        psi = evolve_retarded(psi, EvolutionSpec(t_prev, t, cfg.dt))
        t_prev = t
        exact = oracle_field(oracle_free_gaussian(src, t), grid, images=1)
        err = (psi - exact).norm()
        checks.append(
            CheckResult(f"oracle_agreement_t{t:g}", err < 1e-8, err, "< 1e-8 L2 error")
        )
        rho = (np.conj(psi.values) * psi.values).real
        coords = grid.x() if along_x else grid.y()
        marg = rho.sum(axis=1) if along_x else rho.sum(axis=0)
        mean = (coords * marg).sum() / marg.sum()
        width = float(np.sqrt(((coords - mean) ** 2 * marg).sum() / marg.sum()))
        expected = dispersed_width(src.sigma, t)
        tol = 0.05 if t < cfg.t_final else 0.1
        checks.append(
            CheckResult(
                f"dispersed_width_t{t:g}",
                abs(width - expected) < tol,
                width,
                f"{expected:.5f} +/- {tol}",
            )
        )

    # --- unitarity ---------------------------------------------------------
    drift = 0.0
    f = psi0
    for _ in range(10):
        f = evolve_retarded(f, EvolutionSpec(0.0, cfg.dt, cfg.dt))
        drift = max(drift, abs(f.norm() - 1.0))
    checks.append(CheckResult("per_step_norm_drift", drift < 1e-12, drift, "< 1e-12"))

    step_a = evolve_retarded(psi0, EvolutionSpec(0.0, 16 * cfg.dt, 16 * cfg.dt))
    step_b = evolve_retarded(psi0, EvolutionSpec(0.0, 16 * cfg.dt, cfg.dt))
    step_err = float(np.max(np.abs(step_a.values - step_b.values)))
    checks.append(
        CheckResult("step_size_independence", step_err < 1e-10, step_err, "< 1e-10 node-wise")
    )

    # --- full runs ----------------------------------------------------------
    if ct_art is None:
        ct_art = run_experiment(dataclasses.replace(cfg, mode="ct", branch="d1"))
    if st_d1 is None:
        st_d1 = run_experiment(dataclasses.replace(cfg, mode="st", branch="d1"))
    if st_d2 is None:
        st_d2 = run_experiment(dataclasses.replace(cfg, mode="st", branch="d2"))

    ct = ct_art.report
    norm_dev = max(abs(rec["norm"] ** 2 - 1.0) for rec in ct.norm_series)
    checks.append(CheckResult("ct_norm_invariance", norm_dev < 1e-9, norm_dev, "< 1e-9"))

    for name in ("d1", "d2"):
        p = ct.probabilities[name]
        expected = predictions["detectors"][name]["expected_probability"]
        checks.append(
            CheckResult(f"ct_probability_{name}", abs(p - 0.20) < 0.01, p, "0.20 +/- 0.01")
        )
        checks.append(
            CheckResult(
                f"ct_probability_vs_oracle_{name}",
                abs(p - expected) < 0.005,
                p,
                f"{expected:.5f} +/- 0.005",
            )
        )

    if ct.port_balance is not None:
        for port, frac in ct.port_balance.items():
            checks.append(
                CheckResult(f"port_balance_{port}", abs(frac - 0.5) < 1e-4, frac, "0.5 +/- 1e-4")
            )

    st = st_d1.report
    checks.append(
        CheckResult(
            "st_amplitude_invariance",
            st.max_relative_amplitude_deviation < 1e-6,
            st.max_relative_amplitude_deviation,
            "< 1e-6 relative",
        )
    )
    checks.append(
        CheckResult(
            "st_re_volume_conservation",
            st.max_relative_re_volume_deviation < 1e-6,
            st.max_relative_re_volume_deviation,
            "< 1e-6 relative",
        )
    )
    checks.append(
        CheckResult(
            "st_im_volume_conservation",
            st.max_relative_im_volume_deviation < 1e-6,
            st.max_relative_im_volume_deviation,
            "< 1e-6 relative",
        )
    )
    amp = abs(complex(st.amplitude["re"], st.amplitude["im"]))
    expected_amp = predictions["detectors"]["d1"]["expected_amplitude_modulus"]
    checks.append(
        CheckResult(
            "st_amplitude_modulus", abs(amp - expected_amp) < 0.005, amp,
            f"{expected_amp:.5f} +/- 0.005",
        )
    )
    checks.append(
        CheckResult("st_probability", abs(st.probability - 0.20) < 0.01, st.probability,
                    "0.20 +/- 0.01")
    )
    checks.append(
        CheckResult(
            "ct_st_equivalence",
            st.equivalence["abs_difference"] < 1e-6,
            st.equivalence["abs_difference"],
            "< 1e-6",
        )
    )
    if st.nonfactorization is not None:
        ratio = st.nonfactorization["ratio"]
        checks.append(
            CheckResult("nonfactorization_inequality", ratio > 1.5, ratio, "> 1.5")
        )

    # --- conservation order --------------------------------------------------
    if cfg.splitter is not None:
        t_mid = cfg.splitter.event_time / 2.0
    else:
        t_mid = cfg.t_final / 4.0
    psi_mid = evolve_retarded(psi0, EvolutionSpec(0.0, t_mid, cfg.dt))
    det = cfg.detector("d1")
    phi_mid = oracle_field(
        oracle_free_gaussian(det.final_packet, t_mid - cfg.t_final), grid
    ).conjugate()
    for label, make_pair in (
        ("ct", lambda f, tau: ct_density_current(_free_propagate(f[0], tau))),
        (
            "st",
            lambda f, tau: st_density_current(
                _free_propagate(f[1], -tau), _free_propagate(f[0], tau)
            ),
        ),
    ):
        fields = (psi_mid, phi_mid)
        r_coarse = local_conservation_residual(
            make_pair(fields, -cfg.dt), make_pair(fields, +cfg.dt), cfg.dt
        )
        r_fine = local_conservation_residual(
            make_pair(fields, -cfg.dt / 2), make_pair(fields, +cfg.dt / 2), cfg.dt / 2
        )
        ratio = r_coarse / r_fine if r_fine > 0 else float("inf")
        checks.append(
            CheckResult(
                f"conservation_order_{label}", ratio >= 3.9, ratio, ">= 3.9 when dt halved"
            )
        )

    # --- discriminating observables ------------------------------------------
    if cfg.splitter is not None:
        te = cfg.splitter.event_time
        mid_pre, mid_post = te / 2.0, (te + cfg.t_final) / 2.0
        try:
            st_ratio = _observable(st, mid_post, "width") / _observable(st, mid_pre, "width")
            ct_ratio = _observable(ct, mid_post, "width") / _observable(ct, mid_pre, "width")
            checks.append(
                CheckResult("st_width_ratio", abs(st_ratio - 1.0) < 0.01, st_ratio,
                            "1.00 +/- 0.01")
            )
            checks.append(
                CheckResult("ct_width_ratio", abs(ct_ratio - 1.80) < 0.05, ct_ratio,
                            "1.80 +/- 0.05")
            )
            skew = abs(_observable(st, te, "skewness", phase="pre"))
            checks.append(CheckResult("st_skewness_at_splitter", skew < 0.01, skew, "< 0.01"))
            st_modality = _observable(st, mid_post, "modality")
            ct_modality = _observable(ct, mid_post, "modality")
            checks.append(
                CheckResult("st_modality_post", st_modality == 1, st_modality, "== 1")
            )
            checks.append(
                CheckResult("ct_modality_post", ct_modality == 2, ct_modality, "== 2")
            )
            straight = cfg.branch if cfg.branch == "d1" else "d2"
            other = "d2" if straight == "d1" else "d1"
            st_corr = _observable(st, mid_post, f"corridor_mass_{straight}") / max(
                _observable(st, mid_post, f"corridor_mass_{other}"), 1e-300
            )
            ct_corr = _observable(ct, mid_post, "corridor_mass_d1") / _observable(
                ct, mid_post, "corridor_mass_d2"
            )
            checks.append(
                CheckResult("st_corridor_ratio", st_corr > 1e4, st_corr, "> 1e4")
            )
            checks.append(
                CheckResult("ct_corridor_ratio", abs(ct_corr - 1.0) < 0.01, ct_corr,
                            "1.0 +/- 0.01")
            )
        except KeyError:
            pass

        # --- branch symmetry --------------------------------------------------
        a1 = abs(complex(st_d1.report.amplitude["re"], st_d1.report.amplitude["im"]))
        a2 = abs(complex(st_d2.report.amplitude["re"], st_d2.report.amplitude["im"]))
        amp_dev = abs(a1 - a2) / a1 if a1 > 0 else float("inf")
        checks.append(
            CheckResult("branch_amplitude_symmetry", amp_dev < 1e-3, amp_dev, "< 1e-3 relative")
        )
        p_dev = abs(st_d1.report.probability - st_d2.report.probability) / st_d1.report.probability
        checks.append(
            CheckResult("branch_probability_symmetry", p_dev < 1e-3, p_dev, "< 1e-3 relative")
        )
        w_dev = 0.0
        for rec1, rec2 in zip(st_d1.report.observables, st_d2.report.observables):
            if np.isfinite(rec1["width"]) and np.isfinite(rec2["width"]):
                w_dev = max(w_dev, abs(rec1["width"] - rec2["width"]) / rec1["width"])
        checks.append(
            CheckResult("branch_width_symmetry", w_dev < 1e-3, w_dev, "< 1e-3 relative")
        )

    return checks


def verification_summary(checks: list[CheckResult]) -> dict:
    return {
        "all_passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }
