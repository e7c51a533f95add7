"""Snapshot, metadata, and report serialization.

Snapshots are CSV files with header ``x,y,re,im,abs``, row-major over the
grid (x index outer, y index inner), 17 significant digits. Each snapshot
carries a YAML sidecar with its time, mode, branch, norm or amplitude, grid
parameters, and the config hash. Reports and verification summaries are
YAML. All writers are deterministic: same inputs, same bytes.
"""
from __future__ import annotations

import os

import numpy as np
import pandas as pd
import yaml

from .grid import Grid2D, position_meshes

FLOAT_FORMAT = "%.17g"


def _wrap_io(exc: OSError, path: str) -> OSError:
    return OSError(f"failed writing {path}: {exc}")


def write_yaml(data: dict, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(data, fh, sort_keys=False, default_flow_style=False)
    except OSError as exc:
        raise _wrap_io(exc, path) from exc


def read_yaml(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return yaml.safe_load(fh)


def export_snapshot(values: np.ndarray, grid: Grid2D, path: str, metadata: dict) -> None:
    """Write one density or field snapshot plus its metadata sidecar.

    ``values`` may be real or complex; columns are the node coordinates, the
    real and imaginary parts, and the modulus.
    """
    X, Y = position_meshes(grid)
    v = np.asarray(values)
    frame = pd.DataFrame(
        {
            "x": X.ravel(order="C"),
            "y": Y.ravel(order="C"),
            "re": v.real.ravel(order="C"),
            "im": v.imag.ravel(order="C") if np.iscomplexobj(v) else np.zeros(v.size),
            "abs": np.abs(v).ravel(order="C"),
        }
    )
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise _wrap_io(exc, path) from exc
    write_yaml(metadata, sidecar_path(path))


def sidecar_path(csv_path: str) -> str:
    base, _ = os.path.splitext(csv_path)
    return base + ".meta.yaml"


def read_snapshot(path: str) -> np.ndarray:
    """Load a snapshot CSV back as an ``(n_rows, 5)`` float array."""
    return np.genfromtxt(path, delimiter=",", skip_header=1)


def complex_dict(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}
