"""shotqsd: stochastic trajectories of a dissipative two-level system whose
dissipation is suppressed by Poissonian white shot noise.

The package is organized as a numpy library:

* :mod:`shotqsd.noise` -- shot trains and complex Ornstein-Uhlenbeck paths
  with statistical validators;
* :mod:`shotqsd.dynamics` -- the impulsive Riccati integrator, fidelity
  functionals, linear-unraveling trajectories and ensemble density
  matrices;
* :mod:`shotqsd.analysis` -- figure-level experiments (fidelity curve
  comparisons, (J, W) sweeps, memory scans, the washout diagnostic);
* :mod:`shotqsd.config` / :mod:`shotqsd.runner` / :mod:`shotqsd.cli` --
  config parsing, presets, execution and CSV/JSON serialization.
"""

from .analysis import (
    CurveSet,
    IntegrandSeries,
    MarkovScan,
    SweepGrid,
    default_sweep_axes,
    fidelity_curves,
    markov_scan,
    shot_params_for,
    sweep_jw,
    washout_diagnostic,
)
from .dynamics import (
    ConventionReport,
    DensityCurve,
    FidelityCurve,
    QTrajectory,
    StateTrajectory,
    SystemParams,
    TrainPolicy,
    crosscheck_conventions,
    ensemble_density,
    fidelity_from_q,
    free_log_fidelity_exact,
    free_q_exact,
    integrate_q,
    propagate_trajectory,
)
from .errors import (
    ConfigError,
    DivergenceBudgetError,
    DivergenceError,
    GridMismatchError,
    InvalidParameterError,
    ShotQsdError,
)
from .noise import (
    MomentsReport,
    OUParams,
    OUPath,
    OUStatsReport,
    ShotNoiseParams,
    ShotTrain,
    ou_statistics,
    sample_ou_path,
    sample_ou_paths,
    sample_shot_train,
    shot_train_moments,
)
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "RngStream",
    "ShotNoiseParams",
    "ShotTrain",
    "MomentsReport",
    "OUParams",
    "OUPath",
    "OUStatsReport",
    "sample_shot_train",
    "shot_train_moments",
    "sample_ou_path",
    "sample_ou_paths",
    "ou_statistics",
    "SystemParams",
    "QTrajectory",
    "FidelityCurve",
    "StateTrajectory",
    "DensityCurve",
    "TrainPolicy",
    "ConventionReport",
    "integrate_q",
    "fidelity_from_q",
    "free_q_exact",
    "free_log_fidelity_exact",
    "propagate_trajectory",
    "ensemble_density",
    "crosscheck_conventions",
    "CurveSet",
    "SweepGrid",
    "MarkovScan",
    "IntegrandSeries",
    "fidelity_curves",
    "sweep_jw",
    "default_sweep_axes",
    "markov_scan",
    "washout_diagnostic",
    "shot_params_for",
    "ShotQsdError",
    "InvalidParameterError",
    "GridMismatchError",
    "DivergenceError",
    "DivergenceBudgetError",
    "ConfigError",
]
