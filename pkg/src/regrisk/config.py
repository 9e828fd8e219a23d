"""INI-style sweep configuration.

Sections and keys (unknown keys are rejected so typos surface early)::

    [model]        n, m | ratio, sigma, regimes, lambda, beta_mode, beta_seed, objective_form
    [cov_features] kind, q, scale, path
    [cov_noise]    kind, q, scale, path
    [cov_rows]     kind, q, scale, path          (optional: enables row correlation)
    [sweep]        axis, grid
    [mc]           enabled, trials, seed, dist
    [output]       csv, plot

Any value can be overridden with ``section.key=value`` strings.
"""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Iterable, Optional

from .covariance import CovSpec, load_matrix_csv, load_spectrum_csv
from .errors import ConfigError, RegriskError
from .sweep import MCSettings, ModelSpec, SweepSpec

ALLOWED = {
    "model": {"n", "m", "ratio", "sigma", "regimes", "lambda", "beta_mode", "beta_seed", "objective_form"},
    "cov_features": {"kind", "q", "scale", "path"},
    "cov_noise": {"kind", "q", "scale", "path"},
    "cov_rows": {"kind", "q", "scale", "path"},
    "sweep": {"axis", "grid"},
    "mc": {"enabled", "trials", "seed", "dist"},
    "output": {"csv", "plot"},
}


def read_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value.strip())
    for section in cp.sections():
        if section not in ALLOWED:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(cp.options(section)) - ALLOWED[section]
        if unknown:
            raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(unknown))}")
    return cp


def _get(cp, section, key, conv, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] {key}: missing required field")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from None


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _names(text: str) -> tuple:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _cov(cp, section: str, dim: int, base_dir: Path, default_kind: str = "identity") -> CovSpec:
    kind = _get(cp, section, "kind", str.strip, default_kind)
    q = _get(cp, section, "q", float, 0.0)
    scale = _get(cp, section, "scale", float, 1.0)
    data = None
    if kind in ("user_matrix", "user_spectrum"):
        path = _get(cp, section, "path", str.strip, required=True)
        path = Path(path)
        if not path.is_absolute():
            path = base_dir / path
        data = load_matrix_csv(path) if kind == "user_matrix" else load_spectrum_csv(path)
        dim = data.shape[0]
    try:
        return CovSpec(kind=kind, q=q, scale=scale, dim=dim, data=data)
    except RegriskError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def sweep_spec_from_config(cp: configparser.ConfigParser, base_dir: Path = Path(".")) -> SweepSpec:
    n = _get(cp, "model", "n", int, required=True)
    m = _get(cp, "model", "m", int)
    ratio = _get(cp, "model", "ratio", float)
    m_hint = m if m is not None else (round(n / ratio) if ratio else n)
    cov_rows = _cov(cp, "cov_rows", m_hint, base_dir, "toeplitz_plus_identity") if cp.has_section("cov_rows") else None
    model_kwargs = dict(
        n=n,
        m=m,
        ratio=ratio,
        cov_A=_cov(cp, "cov_features", n, base_dir),
        cov_noise=_cov(cp, "cov_noise", m_hint, base_dir),
        cov_rows=cov_rows,
        sigma=_get(cp, "model", "sigma", float, 1.0),
        regimes=_get(cp, "model", "regimes", _names, ("gls", "ridge", "ls")),
        lam=_get(cp, "model", "lambda", float, 0.5),
        beta_mode=_get(cp, "model", "beta_mode", str.strip, "random_unit"),
        beta_seed=_get(cp, "model", "beta_seed", int, 7),
        objective_form=_get(cp, "model", "objective_form", str.strip, "consistent"),
    )
    mc = None
    if _get(cp, "mc", "enabled", _bool, True):
        mc = MCSettings(
            trials=_get(cp, "mc", "trials", int, 50),
            seed=_get(cp, "mc", "seed", int, 20240601),
            dist=_get(cp, "mc", "dist", str.strip, "gaussian"),
        )
    try:
        return SweepSpec(
            axis=_get(cp, "sweep", "axis", str.strip, "overparam_ratio"),
            grid=_get(cp, "sweep", "grid", _floats, required=True),
            model=ModelSpec(**model_kwargs),
            mc=mc,
            out_csv=_get(cp, "output", "csv", str.strip),
            out_plot=_get(cp, "output", "plot", str.strip),
        )
    except ConfigError:
        raise
    except RegriskError as exc:
        raise ConfigError(str(exc)) from None


def load_sweep_spec(path: Optional[str] = None, overrides: Iterable[str] = ()) -> SweepSpec:
    cp = read_config(path, overrides)
    base = Path(path).parent if path else Path(".")
    return sweep_spec_from_config(cp, base)
