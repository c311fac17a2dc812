"""Renormalization-based detection, refinement, and tracking of (near-)
singular solutions of the 1D periodic Burgers equation.

A full pseudospectral system and a reduced closure (t-model or Galerkin)
are evolved side by side; the 2x2 renormalization matrix built from
their quantity rates drives singularity detection, |det B|-triggered
mesh refinement, and the eventual hand-over to the reduced model.
"""

from .integrate import IntegratorSettings, StepUnderflow
from .models import (
    BurgersSystem,
    CoefficientVector,
    ModelKind,
    term1,
    term2,
)
from .oracle import CharacteristicSolution, energy, eval_velocity
from .renorm import (
    RenormState,
    build_matrices,
    digits_agreement,
    quantities,
    solve_M,
)
from .spectral import (
    Band,
    ModePartition,
    SpectralField,
    field_from_sine,
    restrict,
    spectral_interpolate,
)
from .tracker import (
    CalibrationError,
    ExperimentConfig,
    Trace,
    TraceRecord,
    TurningPointReport,
    calibrate_tol,
    detect_turning_point,
    run_case1_detect,
    run_case2_detect,
    run_detect,
    run_follow,
    run_refine,
    second_eigenvalue_crossing,
    solve_coefficients,
    turning_point_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "Band",
    "BurgersSystem",
    "CalibrationError",
    "CharacteristicSolution",
    "CoefficientVector",
    "ExperimentConfig",
    "IntegratorSettings",
    "ModelKind",
    "ModePartition",
    "RenormState",
    "SpectralField",
    "StepUnderflow",
    "Trace",
    "TraceRecord",
    "TurningPointReport",
    "build_matrices",
    "calibrate_tol",
    "detect_turning_point",
    "digits_agreement",
    "energy",
    "eval_velocity",
    "field_from_sine",
    "quantities",
    "restrict",
    "run_case1_detect",
    "run_case2_detect",
    "run_detect",
    "run_follow",
    "run_refine",
    "second_eigenvalue_crossing",
    "solve_M",
    "solve_coefficients",
    "spectral_interpolate",
    "term1",
    "term2",
    "turning_point_sweep",
]
