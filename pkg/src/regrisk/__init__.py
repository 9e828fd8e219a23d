"""Asymptotic risk characterizations of min-norm, ridge and least-squares
regression under correlated Gaussian designs, with a Monte Carlo oracle."""

from .covariance import (
    CovSpec,
    NoiseProfile,
    SpectralProfile,
    build_cov,
    noise_profile,
    q_profile,
    sigma_bar,
    sigma_bar_rowcorr,
    spectral_profile,
)
from .errors import RegriskError
from .fixed_point import SolveOptions, solve_gls_gamma, solve_ridge_gamma, solve_rowcorr_gamma
from .simulate import SimConfig, run_monte_carlo
from .sweep import SweepSpec, compare_report, run_sweep
from .theory import (
    Regime,
    TheoryOutput,
    characterize,
    gls_characterization,
    ls_characterization,
    ridge_characterization,
    rowcorr_gls_characterization,
    rowcorr_ridge_characterization,
)

__version__ = "0.1.0"
