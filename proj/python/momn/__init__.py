"""Multi-objective matrix normalization for second-order pooled features."""

import json

from ._core import (
    CompensationMode,
    MomnError,
    SolverConfig,
    SparsityMode,
    approx_rank,
    grad_check,
    normalize,
    normalize_covariance,
    spectral_sqrt,
    synth_spd,
)
from ._core import run_experiment as _run_experiment


def run_experiment(spec):
    """Run an experiment described by a dict and return the report as a dict."""
    return json.loads(_run_experiment(json.dumps(spec)))


__all__ = [
    "CompensationMode",
    "MomnError",
    "SolverConfig",
    "SparsityMode",
    "approx_rank",
    "grad_check",
    "normalize",
    "normalize_covariance",
    "run_experiment",
    "spectral_sqrt",
    "synth_spd",
]
