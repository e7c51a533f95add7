"""Spectral simulator for a 2-D beam-splitter experiment with forward and
backward wave evolution, transition-amplitude bookkeeping, and conservation
diagnostics."""

__version__ = "0.1.0"

from .errors import ConfigError, GeometryError, SplitbeamError
from .grid import (
    ComplexField,
    GaussianSpec,
    Grid2D,
    gaussian_packet,
    inner_product,
    make_grid,
    momentum_cone_split,
    rotate_field_90,
)
from .evolve import EvolutionSpec, evolve_advanced, evolve_retarded
from .oracle import PacketState, oracle_field, oracle_free_gaussian, oracle_overlap
from .splitter import (
    DetectorSpec,
    Rect,
    SplitterSpec,
    apply_splitter_backward,
    apply_splitter_forward,
    collapse_project,
)
from .density import (
    DensityPair,
    ct_density_current,
    global_amplitude,
    local_conservation_residual,
    nonfactorization_values,
    st_density_current,
    transition_amplitude_ct,
)
from .config import ExperimentConfig, config_from_dict, default_config, load_config
from .runner import (
    RunArtifacts,
    RunReport,
    Snapshot,
    equivalence_check_st_ct,
    run_both,
    run_experiment,
    write_artifacts,
)
from .verify import CheckResult, oracle_predictions, run_verification

__all__ = [
    "__version__",
    "SplitbeamError", "ConfigError", "GeometryError",
    "Grid2D", "ComplexField", "GaussianSpec",
    "make_grid", "gaussian_packet", "inner_product",
    "momentum_cone_split", "rotate_field_90",
    "EvolutionSpec", "evolve_retarded", "evolve_advanced",
    "PacketState", "oracle_free_gaussian", "oracle_field", "oracle_overlap",
    "SplitterSpec", "DetectorSpec", "Rect",
    "apply_splitter_forward", "apply_splitter_backward", "collapse_project",
    "DensityPair", "ct_density_current", "st_density_current",
    "local_conservation_residual", "global_amplitude",
    "transition_amplitude_ct", "nonfactorization_values",
    "ExperimentConfig", "config_from_dict", "default_config", "load_config",
    "RunArtifacts", "RunReport", "Snapshot",
    "run_experiment", "run_both", "equivalence_check_st_ct", "write_artifacts",
    "CheckResult", "run_verification", "oracle_predictions",
]
