"""Closed-form asymptotic characterizations of min-norm, ridge and LS fits.

Each function evaluates the large-n limit formulas at a finite spectral
profile. Plain sums stay plain sums (with ``||c|| = 1`` they are O(1)), and
``(1/n)``-normalized sums become means.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .covariance import RANK_CUTOFF, NoiseProfile, SpectralProfile
from .errors import (
    DegenerateDenominatorError,
    InfeasibleRegimeError,
    InvalidParameterError,
    InvalidSpecError,
)
from .fixed_point import (
    DEFAULT_OPTIONS,
    SolveOptions,
    solve_gls_gamma,
    solve_ridge_gamma,
    solve_rowcorr_gamma,
)

ESTIMATORS = ("gls", "ridge", "ls")
OBJECTIVE_FORMS = ("consistent", "printed")


@dataclass(frozen=True)
class Regime:
    estimator: str
    row_correlated: bool = False
    lam: float = 0.0

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise InvalidParameterError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "ridge" and not self.lam > 0:
            raise InvalidParameterError(f"ridge requires lambda > 0, got {self.lam}")

    @property
    def label(self) -> str:
        return self.estimator


@dataclass(frozen=True)
class TheoryOutput:
    gamma_hat: float
    a2: float
    risk: float
    objective: float
    nu1: float
    bias_part: float
    variance_part: float
    a3: Optional[float] = None
    residual: Optional[float] = None
    beta_norm_sq: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def _ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape, dtype=float)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _check_alpha_sigma(alpha: float, sigma_like: float, name: str = "sigma_bar"):
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if sigma_like < 0:
        raise InvalidParameterError(f"{name} must be nonnegative, got {sigma_like}")


def _split(bias_num: float, noise_num: float, denom: float):
    if not denom > 0:
        raise DegenerateDenominatorError(f"1 - alpha*a2 = {denom:.3e} is not positive")
    bias = bias_num / denom
    variance = noise_num / denom
    return bias, variance, bias + variance


def gls_characterization(
    profile: SpectralProfile,
    alpha: float,
    sigma_bar: float,
    opts: SolveOptions = DEFAULT_OPTIONS,
) -> TheoryOutput:
    """Min-norm interpolator (over-parameterized, ``alpha < kappa``).

    ``objective`` is the limiting ``||beta_gls||^2``, so ``beta_norm_sq`` repeats it;
    the fit interpolates, hence no residual is reported.
    """
    _check_alpha_sigma(alpha, sigma_bar)
    gamma = solve_gls_gamma(profile.s, alpha, opts).gamma_hat
    s2 = profile.s**2
    c2 = profile.c**2
    d = 1.0 + gamma * s2
    a2 = gamma**2 / alpha**2 * float(np.mean(s2**2 / d**2))
    bias, variance, risk = _split(
        float(np.sum(s2 * c2 / d**2)), alpha * sigma_bar**2 * a2, 1.0 - alpha * a2
    )
    objective = float(np.sum(gamma * s2 * c2 / d)) + gamma * sigma_bar**2
    nu1 = 2.0 * gamma * np.sqrt(risk + sigma_bar**2) / np.sqrt(alpha)
    return TheoryOutput(
        gamma_hat=gamma,
        a2=a2,
        risk=risk,
        objective=objective,
        nu1=float(nu1),
        bias_part=bias,
        variance_part=variance,
        beta_norm_sq=objective,
    )


def rowcorr_gls_characterization(
    profile: SpectralProfile,
    sigma_bar_rc: float,
    alpha: float,
    opts: SolveOptions = DEFAULT_OPTIONS,
) -> TheoryOutput:
    """Row correlation only enters the min-norm fit through the effective noise scale."""
    return gls_characterization(profile, alpha, sigma_bar_rc, opts)


def ridge_characterization(
    profile: SpectralProfile,
    alpha: float,
    lam: float,
    sigma_bar: float,
    objective_form: str = "consistent",
    opts: SolveOptions = DEFAULT_OPTIONS,
) -> TheoryOutput:
    """Ridge estimator ``argmin lam*||b||^2 + (1/m)||y - Xb||^2`` for ``lam > 0``.

    ``objective_form="printed"`` drops the factor ``lam`` from the signal term of
    the objective; only useful for showing that Monte Carlo rejects it.
    """
    _check_alpha_sigma(alpha, sigma_bar)
    if not lam > 0:
        raise InvalidParameterError(f"ridge requires lambda > 0 (use ls_characterization for 0), got {lam}")
    if objective_form not in OBJECTIVE_FORMS:
        raise InvalidParameterError(f"objective_form must be one of {OBJECTIVE_FORMS}")
    gamma = solve_ridge_gamma(profile.s, alpha, lam, opts).gamma_hat
    s2 = profile.s**2
    c2 = profile.c**2
    d = lam + gamma * s2
    a2 = gamma**2 / alpha**2 * float(np.mean(s2**2 / d**2))
    bias, variance, risk = _split(
        float(np.sum(lam**2 * s2 * c2 / d**2)), alpha * sigma_bar**2 * a2, 1.0 - alpha * a2
    )
    signal = float(np.sum(gamma * s2 * c2 / d))
    if objective_form == "consistent":
        signal *= lam
    objective = signal + gamma * sigma_bar**2
    nu1 = float(2.0 * gamma * np.sqrt(risk + sigma_bar**2) / np.sqrt(alpha))
    residual = gamma**2 * (risk + sigma_bar**2)
    beta_norm_sq = nu1**2 / 4.0 * float(np.mean(s2 / d**2)) + float(
        np.sum(gamma**2 * s2**2 * c2 / d**2)
    )
    return TheoryOutput(
        gamma_hat=gamma,
        a2=a2,
        risk=risk,
        objective=objective,
        nu1=nu1,
        bias_part=bias,
        variance_part=variance,
        residual=residual,
        beta_norm_sq=beta_norm_sq,
    )


def ls_characterization(
    profile: SpectralProfile,
    alpha: float,
    sigma_bar: float,
    objective_form: str = "consistent",
) -> TheoryOutput:
    """Plain least squares (``alpha > 1``); every quantity is closed form.

    ``beta_norm_sq`` is ``None`` when the design spectrum has a zero singular value.
    """
    _check_alpha_sigma(alpha, sigma_bar)
    if not alpha > 1:
        raise InfeasibleRegimeError(f"least squares requires alpha > 1, got {alpha}")
    if objective_form not in OBJECTIVE_FORMS:
        raise InvalidParameterError(f"objective_form must be one of {OBJECTIVE_FORMS}")
    gamma = 1.0 - 1.0 / alpha
    a2 = 1.0 / alpha**2
    sb2 = sigma_bar**2
    risk = sb2 / (alpha - 1.0)
    objective = gamma * sb2
    if objective_form == "printed":
        objective += profile.signal_norm_sq
    s = profile.s
    beta_norm_sq = None
    if s.size and s.min() > RANK_CUTOFF * s.max():
        beta_norm_sq = profile.signal_norm_sq + risk * float(np.mean(1.0 / s**2))
    return TheoryOutput(
        gamma_hat=gamma,
        a2=a2,
        risk=risk,
        objective=objective,
        nu1=2.0 * sigma_bar * np.sqrt(alpha - 1.0) / alpha,
        bias_part=0.0,
        variance_part=risk,
        residual=sb2 * (alpha - 1.0) / alpha,
        beta_norm_sq=beta_norm_sq,
    )


def rowcorr_ridge_characterization(
    profile: SpectralProfile,
    q: np.ndarray,
    os_: np.ndarray,
    alpha: float,
    lam: float,
    sigma: float,
    opts: SolveOptions = DEFAULT_OPTIONS,
) -> TheoryOutput:
    """Ridge (or LS at ``lam == 0``, ``alpha > 1``) with correlated sample rows.

    ``q`` and ``os_`` must be aligned entrywise (see :func:`regrisk.covariance.q_profile`).
    """
    _check_alpha_sigma(alpha, sigma, "sigma")
    q = np.asarray(q, dtype=float)
    os_ = np.asarray(os_, dtype=float)
    if q.shape != os_.shape or q.ndim != 1:
        raise InvalidSpecError(f"q {q.shape} and os {os_.shape} must be equal-length vectors")
    if np.any(q < 0):
        raise InvalidSpecError("q entries must be nonnegative")
    n = profile.n
    if abs(q.size - alpha * n) > 1.0:
        raise InvalidSpecError(f"row spectra have length {q.size}, expected alpha*n = {alpha * n:g}")
    gamma = solve_rowcorr_gamma(profile.s, os_, alpha, lam, opts).gamma_hat
    s2 = profile.s**2
    c2 = profile.c**2
    d = lam + gamma * s2
    T = float(np.sum(_ratio(s2, d))) / (alpha * n)
    B = 1.0 / (1.0 / os_**2 + T)
    spec4 = float(np.mean(_ratio(s2**2, d**2)))
    a2 = spec4 * float(np.mean(B**2)) / alpha**2
    a3 = spec4 * float(np.mean(q * B**2)) / alpha**2
    bias, variance, risk = _split(
        float(np.sum(_ratio(lam**2 * s2 * c2, d**2))), alpha * sigma**2 * a3, 1.0 - alpha * a2
    )
    objective = float(np.sum(_ratio(lam * gamma * s2 * c2, d))) + sigma**2 * float(np.mean(q * B))
    theta2 = risk + sigma**2 * q
    nu1 = float(2.0 / np.sqrt(alpha) * np.sqrt(np.mean(theta2 * B**2)))
    residual = float(np.mean(B**2 * theta2 / os_**2))
    beta_norm_sq = None
    if lam > 0 or s2.min() > (RANK_CUTOFF * profile.s.max()) ** 2:
        beta_norm_sq = nu1**2 / 4.0 * float(np.mean(s2 / d**2)) + float(
            np.sum(_ratio(gamma**2 * s2**2 * c2, d**2))
        )
    return TheoryOutput(
        gamma_hat=gamma,
        a2=a2,
        a3=a3,
        risk=risk,
        objective=objective,
        nu1=nu1,
        bias_part=bias,
        variance_part=variance,
        residual=residual,
        beta_norm_sq=beta_norm_sq,
    )


def characterize(
    regime: Regime,
    profile: SpectralProfile,
    noise: NoiseProfile,
    alpha: float,
    objective_form: str = "consistent",
    opts: SolveOptions = DEFAULT_OPTIONS,
) -> TheoryOutput:
    """Dispatch to the right characterization for ``regime``."""
    rc = noise.row_corr if regime.row_correlated else None
    if regime.row_correlated and rc is None:
        raise InvalidSpecError("row-correlated regime needs a noise profile with row correlation")
    if regime.estimator == "gls":
        if rc is not None:
            return rowcorr_gls_characterization(profile, noise.sigma_bar, alpha, opts)
        return gls_characterization(profile, alpha, noise.sigma_bar, opts)
    lam = regime.lam if regime.estimator == "ridge" else 0.0
    if rc is not None:
        return rowcorr_ridge_characterization(profile, rc.q, rc.os_spectrum, alpha, lam, noise.sigma, opts)
    if regime.estimator == "ridge":
        return ridge_characterization(profile, alpha, lam, noise.sigma_bar, objective_form, opts)
    return ls_characterization(profile, alpha, noise.sigma_bar, objective_form)
