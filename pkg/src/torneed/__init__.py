"""Needlet frames on the d-torus and thresholded density-derivative estimation.

The pieces compose bottom-up: `harmonics` (Fourier basis, frequency shells),
`frame` (window, cubature, needlets, analysis/synthesis), `estimation`
(empirical coefficients, thresholds, truncation), `densities` (test densities
with exact derivatives and samplers), `bench` (seeded Monte Carlo risk
experiments), `cli` (command-line front end).
"""

from .bench import (
    ConfigError,
    ExperimentConfig,
    RiskReport,
    child_seed,
    config_from_dict,
    emit_report,
    load_config,
    load_report,
    lp_distance,
    run_experiment,
)
from .densities import (
    TestDensity,
    density_from_name,
    product_density,
    uniform_density,
    wrapped_normal,
)
from .estimation import (
    DerivativeEstimator,
    ThresholdRule,
    apply_threshold,
    calibrated_rule,
    diagnostic_bandwidth,
    empirical_coefficients,
    estimate,
    read_estimator_csv,
    threshold_value,
    truncation_level,
    write_estimator_csv,
    write_estimator_meta,
)
from .frame import (
    CoefficientArray,
    CubatureLevel,
    NeedletFrame,
    NeedletWindow,
    analyze,
    besov_sequence_norm,
    build_frame,
    build_window,
    check_structure,
    localization_profile,
    needlet_eval,
    needlet_l2_norm,
    needlet_lp_norm,
    needlet_matrix,
    synthesize,
    uniform_grid,
    window_moment,
)
from .harmonics import (
    TWO_PI,
    derivative_multiplier,
    eigenvalue,
    fourier_basis,
    frequency_shell,
    geodesic_distance,
    wrap_angles,
)

__version__ = "0.1.0"

__all__ = [
    "TWO_PI",
    "CoefficientArray",
    "ConfigError",
    "CubatureLevel",
    "DerivativeEstimator",
    "ExperimentConfig",
    "NeedletFrame",
    "NeedletWindow",
    "RiskReport",
    "TestDensity",
    "ThresholdRule",
    "analyze",
    "apply_threshold",
    "besov_sequence_norm",
    "build_frame",
    "build_window",
    "calibrated_rule",
    "check_structure",
    "child_seed",
    "config_from_dict",
    "density_from_name",
    "derivative_multiplier",
    "diagnostic_bandwidth",
    "eigenvalue",
    "emit_report",
    "empirical_coefficients",
    "estimate",
    "fourier_basis",
    "frequency_shell",
    "geodesic_distance",
    "load_config",
    "load_report",
    "localization_profile",
    "lp_distance",
    "needlet_eval",
    "needlet_l2_norm",
    "needlet_lp_norm",
    "needlet_matrix",
    "product_density",
    "read_estimator_csv",
    "run_experiment",
    "synthesize",
    "write_estimator_csv",
    "write_estimator_meta",
    "threshold_value",
    "truncation_level",
    "uniform_density",
    "uniform_grid",
    "window_moment",
    "wrap_angles",
    "wrapped_normal",
    "__version__",
]
