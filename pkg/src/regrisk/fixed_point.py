"""Scalar fixed-point solvers for gamma-hat.

All three maps are monotone on their brackets, so plain bisection is used:
slow but unconditional, and each solution carries its own residual.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .covariance import RANK_CUTOFF, rank_fraction
from .errors import InfeasibleRegimeError, InvalidParameterError, NumericalError


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-12
    max_iter: int = 200
    bracket_growth: float = 2.0

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameterError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.bracket_growth > 1:
            raise InvalidParameterError(f"bracket_growth must exceed 1, got {self.bracket_growth}")


DEFAULT_OPTIONS = SolveOptions()


@dataclass(frozen=True)
class GammaSolution:
    gamma_hat: float
    residual: float
    iterations: int
    bracket_width: float


def _bisect(f: Callable[[float], float], lo: float, hi: float, opts: SolveOptions) -> GammaSolution:
    """Root of an increasing ``f`` with ``f(lo) < 0 <= f(hi)``."""
    flo, fhi = f(lo), f(hi)
    if not (flo < 0 <= fhi):
        raise NumericalError(f"no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")
    best, fbest = (hi, fhi) if abs(fhi) <= abs(flo) else (lo, flo)
    it = 0
    while it < opts.max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if abs(fmid) < abs(fbest):
            best, fbest = mid, fmid
        if fmid == 0.0:
            break
        if fmid < 0:
            lo = mid
        else:
            hi = mid
    if abs(fbest) > opts.tol:
        raise NumericalError(
            f"bisection stalled at gamma={best!r} with residual {fbest:.3e} > tol {opts.tol:.1e}"
        )
    return GammaSolution(gamma_hat=float(best), residual=float(fbest), iterations=it, bracket_width=hi - lo)


def gls_equation(s: np.ndarray, alpha: float) -> Callable[[float], float]:
    s2 = np.asarray(s, dtype=float) ** 2

    def F(gamma: float) -> float:
        return float(np.mean(gamma * s2 / (1.0 + gamma * s2)) - alpha)

    return F


def ridge_equation(s: np.ndarray, alpha: float, lam: float) -> Callable[[float], float]:
    s2 = np.asarray(s, dtype=float) ** 2

    def G(gamma: float) -> float:
        return float(np.mean(_ratio(gamma * s2, lam + gamma * s2)) - alpha * (1.0 - gamma))

    return G


def rowcorr_equation(s: np.ndarray, os_: np.ndarray, alpha: float, lam: float) -> Callable[[float], float]:
    s2 = np.asarray(s, dtype=float) ** 2
    inv_os2 = 1.0 / np.asarray(os_, dtype=float) ** 2
    n = s2.shape[0]

    def H(gamma: float) -> float:
        if gamma == 0.0 and lam == 0.0:
            return 0.0
        T = float(np.sum(_ratio(s2, lam + gamma * s2))) / (alpha * n)
        return gamma - float(np.mean(1.0 / (inv_os2 + T)))

    return H


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 terms come from zero singular values at lambda == 0; their limit is 0
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=den != 0)
    return out


def solve_gls_gamma(s, alpha: float, opts: SolveOptions = DEFAULT_OPTIONS) -> GammaSolution:
    s = np.asarray(s, dtype=float)
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    kappa = rank_fraction(s, RANK_CUTOFF)
    if alpha >= kappa:
        raise InfeasibleRegimeError(
            f"min-norm interpolation needs alpha < kappa; got alpha={alpha}, kappa={kappa}"
        )
    F = gls_equation(s, alpha)
    hi = 1.0
    for _ in range(opts.max_iter):
        if F(hi) >= 0:
            break
        hi *= opts.bracket_growth
    else:
        raise NumericalError(f"could not bracket the GLS root (last upper bound {hi})")
    return _bisect(F, 0.0, hi, opts)


def solve_ridge_gamma(s, alpha: float, lam: float, opts: SolveOptions = DEFAULT_OPTIONS) -> GammaSolution:
    s = np.asarray(s, dtype=float)
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if lam < 0:
        raise InvalidParameterError(f"lambda must be nonnegative, got {lam}")
    if lam == 0:
        if alpha <= 1:
            raise InfeasibleRegimeError(f"lambda = 0 requires alpha > 1, got alpha={alpha}")
        gamma = 1.0 - 1.0 / alpha
        return GammaSolution(gamma_hat=gamma, residual=0.0, iterations=0, bracket_width=0.0)
    return _bisect(ridge_equation(s, alpha, lam), 0.0, 1.0, opts)


def solve_rowcorr_gamma(s, os_, alpha: float, lam: float, opts: SolveOptions = DEFAULT_OPTIONS) -> GammaSolution:
    s = np.asarray(s, dtype=float)
    os_ = np.asarray(os_, dtype=float)
    if np.any(os_ <= 0):
        raise InvalidParameterError("row spectrum entries must be positive")
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if lam < 0:
        raise InvalidParameterError(f"lambda must be nonnegative, got {lam}")
    if lam == 0 and alpha <= 1:
        raise InfeasibleRegimeError(f"lambda = 0 requires alpha > 1, got alpha={alpha}")
    H = rowcorr_equation(s, os_, alpha, lam)
    upper = float(np.mean(os_**2))
    lo = 0.0
    if lam == 0:
        # H(0) is 0/0 here; start just above zero where H < 0 for alpha > 1
        lo = upper * 1e-300
        if not H(lo) < 0:
            lo = upper * 1e-12
    return _bisect(H, lo, upper, opts)
