"""Monte Carlo oracle: sample the correlated model, fit in closed form, aggregate.

Randomness is drawn from counter-based Philox streams keyed by
``(seed, trial_index, substream)``, so any trial can be recomputed in
isolation and results do not depend on how trials are scheduled.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .covariance import RANK_CUTOFF, CovSpec, build_cov
from .errors import InvalidParameterError, RankError, RegriskError
from .theory import Regime

DISTS = ("gaussian", "rademacher", "uniform_scaled")
BETA_MODES = ("random_unit", "deterministic_uniform")
QUANTITIES = ("risk", "objective", "residual_over_m", "beta_norm_sq")

_Z_STREAM, _V_STREAM = 0, 1
_BETA_KEY = (0xB37A,)
WORKERS_ENV = "REGRISK_WORKERS"


@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int
    trials: int = 50
    seed: int = 20240601
    dist: str = "gaussian"
    regime: Regime = field(default_factory=lambda: Regime("gls"))
    cov_A: Optional[CovSpec] = None
    cov_noise: Optional[CovSpec] = None
    cov_rows: Optional[CovSpec] = None
    sigma: float = 1.0
    beta_mode: str = "random_unit"
    beta_seed: Optional[int] = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InvalidParameterError(f"n and m must be >= 1, got n={self.n}, m={self.m}")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")
        if self.sigma < 0:
            raise InvalidParameterError(f"sigma must be nonnegative, got {self.sigma}")
        if self.dist not in DISTS:
            raise InvalidParameterError(f"dist must be one of {DISTS}, got {self.dist!r}")
        if self.beta_mode not in BETA_MODES:
            raise InvalidParameterError(f"beta_mode must be one of {BETA_MODES}, got {self.beta_mode!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def alpha(self) -> float:
        return self.m / self.n


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    trials: int


@dataclass
class EmpiricalSummary:
    estimates: dict
    records: np.ndarray  # shape (trials, 1 + len(QUANTITIES)), first column = trial index

    def __getitem__(self, quantity: str) -> Estimate:
        return self.estimates[quantity]


@dataclass(frozen=True)
class ModelMatrices:
    A: np.ndarray
    noise_A: np.ndarray
    rows_A: Optional[np.ndarray]
    beta_bar: np.ndarray


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def draw_entries(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "rademacher":
        return 2.0 * rng.integers(0, 2, size=shape).astype(float) - 1.0
    return np.sqrt(12.0) * (rng.random(shape) - 0.5)


def make_beta(cfg: SimConfig) -> np.ndarray:
    if cfg.beta_mode == "deterministic_uniform":
        return np.full(cfg.n, 1.0 / np.sqrt(cfg.n))
    seed = cfg.seed if cfg.beta_seed is None else cfg.beta_seed
    b = _stream(seed, *_BETA_KEY).standard_normal(cfg.n)
    return b / np.linalg.norm(b)


def model_matrices(cfg: SimConfig) -> ModelMatrices:
    cov_A = cfg.cov_A or CovSpec("identity", dim=cfg.n)
    cov_noise = cfg.cov_noise or CovSpec("identity", dim=cfg.m)
    if cov_A.dim != cfg.n or cov_noise.dim != cfg.m:
        raise InvalidParameterError(
            f"covariance dims ({cov_A.dim}, {cov_noise.dim}) do not match (n, m) = ({cfg.n}, {cfg.m})"
        )
    rows = None
    if cfg.cov_rows is not None:
        if cfg.cov_rows.dim != cfg.m:
            raise InvalidParameterError(f"row covariance dim {cfg.cov_rows.dim} != m = {cfg.m}")
        rows = build_cov(cfg.cov_rows)
    return ModelMatrices(build_cov(cov_A), build_cov(cov_noise), rows, make_beta(cfg))


def sample_instance(cfg: SimConfig, trial_index: int, mats: Optional[ModelMatrices] = None):
    """Draw ``(X, y, beta_bar)`` for one trial; ``mats`` may be passed to skip rebuilding."""
    if mats is None:
        mats = model_matrices(cfg)
    Z = draw_entries(_stream(cfg.seed, trial_index, _Z_STREAM), cfg.dist, (cfg.m, cfg.n))
    v = draw_entries(_stream(cfg.seed, trial_index, _V_STREAM), cfg.dist, cfg.m)
    X = Z @ mats.A
    if mats.rows_A is not None:
        X = mats.rows_A @ X
    y = X @ mats.beta_bar + cfg.sigma * (mats.noise_A @ v)
    return X, y, mats.beta_bar


def _pinv_apply(X: np.ndarray, y: np.ndarray, need_rank: int, what: str) -> np.ndarray:
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    keep = s > RANK_CUTOFF * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    rank = int(np.count_nonzero(keep))
    if rank < need_rank:
        raise RankError(f"{what}: effective rank {rank} < {need_rank}")
    coef = (U[:, keep].T @ y) / s[keep]
    return Vh[keep].T @ coef


def fit_gls(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimum-norm interpolator ``X^T (X X^T)^{-1} y`` via the SVD pseudo-inverse."""
    m, n = X.shape
    if m >= n:
        raise InvalidParameterError(f"min-norm interpolation needs m < n, got {X.shape}")
    beta = _pinv_apply(X, y, m, "interpolation impossible")
    ynorm = np.linalg.norm(y)
    if np.linalg.norm(X @ beta - y) > 1e-8 * max(ynorm, 1.0):
        raise RankError("min-norm solution fails to interpolate")
    return beta


def fit_ls(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    m, n = X.shape
    if m <= n:
        raise InvalidParameterError(f"least squares needs m > n, got {X.shape}")
    return _pinv_apply(X, y, n, "X^T X not invertible")


def fit_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Solve ``(lam*m*I + X^T X) beta = X^T y``."""
    if not lam > 0:
        raise InvalidParameterError(f"ridge requires lambda > 0, got {lam}")
    m, n = X.shape
    G = X.T @ X
    G[np.diag_indices(n)] += lam * m
    return np.linalg.solve(G, X.T @ y)


def empirical_risk(beta_bar: np.ndarray, beta_hat: np.ndarray, A: np.ndarray) -> float:
    """Exact prediction risk ``(b - bh)^T A^T A (b - bh)`` for test rows ``z^T A``."""
    r = A @ (beta_bar - beta_hat)
    return float(r @ r)


def fit_regime(regime: Regime, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if regime.estimator == "gls":
        return fit_gls(X, y)
    if regime.estimator == "ls":
        return fit_ls(X, y)
    return fit_ridge(X, y, regime.lam)


def trial_record(regime: Regime, X, y, beta_bar, A) -> tuple:
    beta_hat = fit_regime(regime, X, y)
    m = X.shape[0]
    resid = y - X @ beta_hat
    res_m = float(resid @ resid) / m
    norm_sq = float(beta_hat @ beta_hat)
    if regime.estimator == "gls":
        objective = norm_sq
    else:
        lam = regime.lam if regime.estimator == "ridge" else 0.0
        objective = lam * norm_sq + res_m
    return empirical_risk(beta_bar, beta_hat, A), objective, res_m, norm_sq


def _run_chunk(cfg: SimConfig, regimes: Sequence[Regime], indices: Sequence[int]):
    mats = model_matrices(cfg)
    out = np.empty((len(regimes), len(indices), 1 + len(QUANTITIES)))
    for k, t in enumerate(indices):
        X, y, beta_bar = sample_instance(cfg, t, mats)
        for r, regime in enumerate(regimes):
            try:
                out[r, k] = (t, *trial_record(regime, X, y, beta_bar, mats.A))
            except RegriskError as exc:
                raise type(exc)(f"trial {t} ({regime.estimator}): {exc}") from exc
    return out


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def summarize(records: np.ndarray) -> EmpiricalSummary:
    trials = records.shape[0]
    estimates = {}
    for j, name in enumerate(QUANTITIES, start=1):
        col = records[:, j]
        se = float(np.std(col, ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
        estimates[name] = Estimate(mean=float(np.mean(col)), stderr=se, trials=trials)
    return EmpiricalSummary(estimates=estimates, records=records)


def run_trials(cfg: SimConfig, regimes: Sequence[Regime], workers: Optional[int] = None) -> list:
    """Run every trial once and fit all ``regimes`` on the same samples.

    Returns one :class:`EmpiricalSummary` per regime, in order.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    indices = list(range(cfg.trials))
    if workers == 1 or cfg.trials == 1:
        blocks = [_run_chunk(cfg, regimes, indices)]
    else:
        chunks = [c for c in np.array_split(indices, min(workers, cfg.trials)) if len(c)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_chunk, [cfg] * len(chunks), [regimes] * len(chunks), [list(map(int, c)) for c in chunks]))
    data = np.concatenate(blocks, axis=1)
    data = data[:, np.argsort(data[0, :, 0], kind="stable")]
    return [summarize(data[r]) for r in range(len(regimes))]


def run_monte_carlo(cfg: SimConfig, workers: Optional[int] = None) -> EmpiricalSummary:
    return run_trials(cfg, [cfg.regime], workers)[0]


def write_trial_csv(summary: EmpiricalSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("trial",) + QUANTITIES)
        for row in summary.records:
            w.writerow([int(row[0])] + [format(float(v), ".17g") for v in row[1:]])
