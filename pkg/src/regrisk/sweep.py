"""Theory/simulation sweeps over n/m, lambda or row-correlation strength.

A sweep produces one row per grid point. Theory columns are computed first
and never depend on the Monte Carlo settings; MC columns stay empty when
simulation is disabled or the regime is infeasible at that point.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .covariance import CovSpec, noise_profile, spectral_profile
from .errors import InfeasibleRegimeError, InvalidSpecError, RegriskError
from .simulate import BETA_MODES, SimConfig, model_matrices, run_trials
from .theory import ESTIMATORS, OBJECTIVE_FORMS, Regime, characterize

log = logging.getLogger(__name__)

AXES = ("overparam_ratio", "lambda", "q_rows")
THEORY_FIELDS = ("risk", "objective", "residual", "beta_norm_sq")
MC_KEYS = {"risk": "risk", "objective": "objective", "residual": "residual_over_m", "beta_norm_sq": "beta_norm_sq"}
BASE_COLUMNS = ("grid_index", "axis", "axis_value", "n", "m", "alpha", "ratio", "lambda", "q_rows")
Z_FAIL = 5.0
Z_OK = 3.0


@dataclass(frozen=True)
class ModelSpec:
    """Everything held fixed along a sweep."""

    n: int
    cov_A: CovSpec
    cov_noise: CovSpec
    cov_rows: Optional[CovSpec] = None
    sigma: float = 1.0
    regimes: tuple = ESTIMATORS
    lam: float = 0.5
    m: Optional[int] = None
    ratio: Optional[float] = None
    beta_mode: str = "random_unit"
    beta_seed: int = 7
    objective_form: str = "consistent"

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSpecError(f"n must be >= 1, got {self.n}")
        if self.sigma < 0:
            raise InvalidSpecError(f"sigma must be nonnegative, got {self.sigma}")
        if not self.regimes:
            raise InvalidSpecError("at least one regime is required")
        if "ridge" in self.regimes and not self.lam > 0:
            raise InvalidSpecError(f"ridge needs lambda > 0, got {self.lam}")
        if self.beta_mode not in BETA_MODES:
            raise InvalidSpecError(f"beta_mode must be one of {BETA_MODES}, got {self.beta_mode!r}")
        if self.objective_form not in OBJECTIVE_FORMS:
            raise InvalidSpecError(f"objective_form must be one of {OBJECTIVE_FORMS}")
        if self.ratio is not None and not self.ratio > 0:
            raise InvalidSpecError(f"ratio must be positive, got {self.ratio}")


@dataclass(frozen=True)
class MCSettings:
    trials: int = 50
    seed: int = 20240601
    dist: str = "gaussian"


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    model: ModelSpec
    mc: Optional[MCSettings] = field(default_factory=MCSettings)
    out_csv: Optional[str] = None
    out_plot: Optional[str] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidSpecError(f"axis must be one of {AXES}, got {self.axis!r}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise InvalidSpecError("grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidSpecError(f"grid must be strictly increasing, got {grid}")
        if self.axis == "overparam_ratio" and min(grid) <= 0:
            raise InvalidSpecError("over-parametrization ratios must be positive")
        if self.axis == "lambda" and min(grid) <= 0:
            raise InvalidSpecError("lambda grid values must be positive")
        if self.axis == "q_rows" and (min(grid) < 0 or max(grid) > 1):
            raise InvalidSpecError("q_rows grid values must lie in [0, 1]")
        if self.axis != "overparam_ratio" and self.model.m is None and self.model.ratio is None:
            raise InvalidSpecError(f"axis {self.axis!r} needs a fixed m or ratio in the model")
        if self.axis == "q_rows" and self.model.cov_rows is None:
            raise InvalidSpecError("axis 'q_rows' needs a row covariance recipe")
        for r in self.model.regimes:
            if r not in ESTIMATORS:
                raise InvalidSpecError(f"unknown regime {r!r}")
        object.__setattr__(self, "grid", grid)


@dataclass
class SweepTable:
    axis: str
    regimes: tuple
    rows: list

    @property
    def columns(self) -> list:
        return table_columns(self.regimes)


def table_columns(regimes: Sequence[str]) -> list:
    cols = list(BASE_COLUMNS)
    for r in regimes:
        cols += [f"{r}_status", f"{r}_note", f"{r}_gamma_hat", f"{r}_trials"]
        for q in THEORY_FIELDS:
            cols += [f"{r}_{q}_theory", f"{r}_{q}_mc", f"{r}_{q}_se", f"{r}_{q}_z"]
    return cols


@dataclass(frozen=True)
class GridPoint:
    n: int
    m: int
    lam: float
    q_rows: Optional[float]


def grid_point(spec: SweepSpec, value: float) -> GridPoint:
    model = spec.model
    n = model.n
    if spec.axis == "overparam_ratio":
        m = int(round(n / value))
    elif model.m is not None:
        m = int(model.m)
    else:
        m = int(round(n / model.ratio))
    if m < 1:
        raise InvalidSpecError(f"grid value {value} gives m = {m} < 1")
    lam = value if spec.axis == "lambda" else model.lam
    q_rows = value if spec.axis == "q_rows" else (model.cov_rows.q if model.cov_rows else None)
    return GridPoint(n=n, m=m, lam=lam, q_rows=q_rows)


def point_config(spec: SweepSpec, pt: GridPoint) -> SimConfig:
    model = spec.model
    rows = None
    if model.cov_rows is not None:
        rows = model.cov_rows.with_dim(pt.m)
        if spec.axis == "q_rows":
            rows = replace(rows, q=pt.q_rows)
    mc = spec.mc or MCSettings(trials=1)
    return SimConfig(
        n=pt.n,
        m=pt.m,
        trials=mc.trials,
        seed=mc.seed,
        dist=mc.dist,
        cov_A=model.cov_A.with_dim(pt.n),
        cov_noise=model.cov_noise.with_dim(pt.m),
        cov_rows=rows,
        sigma=model.sigma,
        beta_mode=model.beta_mode,
        beta_seed=model.beta_seed,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return format(v, ".17g")


def _evaluate_point(spec: SweepSpec, index: int, value: float, workers: Optional[int]) -> dict:
    pt = grid_point(spec, value)
    cfg = point_config(spec, pt)
    alpha = pt.m / pt.n
    row = {
        "grid_index": index,
        "axis": spec.axis,
        "axis_value": value,
        "n": pt.n,
        "m": pt.m,
        "alpha": alpha,
        "ratio": pt.n / pt.m,
        "lambda": pt.lam,
        "q_rows": pt.q_rows,
    }
    mats = model_matrices(cfg)
    profile = spectral_profile(mats.A, mats.beta_bar)
    noise = noise_profile(mats.noise_A, spec.model.sigma, mats.rows_A)
    row_corr = mats.rows_A is not None

    feasible = []
    for name in spec.model.regimes:
        regime = Regime(name, row_corr, pt.lam if name == "ridge" else 0.0)
        try:
            th = characterize(regime, profile, noise, alpha, spec.model.objective_form)
        except InfeasibleRegimeError as exc:
            row[f"{name}_status"] = "INFEASIBLE"
            row[f"{name}_note"] = str(exc)
            continue
        except RegriskError as exc:
            row[f"{name}_status"] = "ERROR"
            row[f"{name}_note"] = f"{type(exc).__name__}: {exc}"
            continue
        row[f"{name}_status"] = "OK"
        row[f"{name}_gamma_hat"] = th.gamma_hat
        for q in THEORY_FIELDS:
            row[f"{name}_{q}_theory"] = getattr(th, q)
        feasible.append(regime)

    if spec.mc is not None and feasible:
        summaries = run_trials(cfg, feasible, workers)
        for regime, summ in zip(feasible, summaries):
            name = regime.estimator
            row[f"{name}_trials"] = cfg.trials
            for q in THEORY_FIELDS:
                est = summ[MC_KEYS[q]]
                row[f"{name}_{q}_mc"] = est.mean
                row[f"{name}_{q}_se"] = est.stderr
                theory = row.get(f"{name}_{q}_theory")
                if theory is not None and est.stderr > 0 and math.isfinite(est.stderr):
                    row[f"{name}_{q}_z"] = (est.mean - theory) / est.stderr
    return row



def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepTable:
    rows = []
    for i, value in enumerate(spec.grid):
        log.info("grid point %d/%d: %s = %g", i + 1, len(spec.grid), spec.axis, value)
        rows.append(_evaluate_point(spec, i, value, workers))
    table = SweepTable(axis=spec.axis, regimes=tuple(spec.model.regimes), rows=rows)
    if spec.out_csv:
        write_csv(table, spec.out_csv)
    return table


def write_csv(table: SweepTable, path) -> None:
    cols = table.columns
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in table.rows:
            w.writerow([_fmt(row.get(c)) for c in cols])


def _parse_cell(col: str, text: str):
    if text == "":
        return None
    if col == "axis" or col.endswith("_status") or col.endswith("_note"):
        return text
    if col in ("grid_index", "n", "m") or col.endswith("_trials"):
        return int(text)
    return float(text)


def read_csv(path) -> SweepTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        regimes = tuple(c[: -len("_status")] for c in fields if c.endswith("_status"))
        rows = [{k: _parse_cell(k, v) for k, v in rec.items()} for rec in reader]
    axis = rows[0]["axis"] if rows else "overparam_ratio"
    return SweepTable(axis=axis, regimes=regimes, rows=rows)


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    max_abs_z: float
    frac_within: float
    n_compared: int
    worst_axis_value: Optional[float]
    worst_quantity: Optional[str]


@dataclass(frozen=True)
class CompareReport:
    regimes: tuple
    exit_status: int

    def lines(self) -> list:
        out = []
        for r in self.regimes:
            if r.n_compared == 0:
                out.append(f"{r.regime}: no Monte Carlo comparisons")
                continue
            out.append(
                f"{r.regime}: max|z|={r.max_abs_z:.3f} within3={r.frac_within:.3f} "
                f"({r.n_compared} comparisons) worst at axis={r.worst_axis_value:g} [{r.worst_quantity}]"
            )
        out.append("status: " + ("FAIL (|z| > 5 present)" if self.exit_status else "ok"))
        return out


def compare_report(table: SweepTable, quantities: Sequence[str] = THEORY_FIELDS) -> CompareReport:
    reports = []
    worst_overall = 0.0
    for r in table.regimes:
        zs = []
        for row in table.rows:
            for q in quantities:
                z = row.get(f"{r}_{q}_z")
                if z is not None and math.isfinite(z):
                    zs.append((abs(z), row["axis_value"], q))
        if not zs:
            reports.append(RegimeReport(r, 0.0, 1.0, 0, None, None))
            continue
        worst = max(zs, key=lambda t: t[0])
        within = sum(1 for z, _, _ in zs if z <= Z_OK) / len(zs)
        reports.append(RegimeReport(r, worst[0], within, len(zs), worst[1], worst[2]))
        worst_overall = max(worst_overall, worst[0])
    return CompareReport(tuple(reports), 1 if worst_overall > Z_FAIL else 0)
