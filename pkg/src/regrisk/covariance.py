"""Covariance builders and their reduction to spectral profiles.

Every closed-form characterization in :mod:`regrisk.theory` consumes only
the singular values of the design/noise factors and the rotated signal, so
this module is where full matrices stop and spectra begin.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, InvalidSpecError, RankError

RANK_CUTOFF = 1e-10

KINDS = ("toeplitz_plus_identity", "identity", "user_matrix", "user_spectrum")


@dataclass(frozen=True)
class CovSpec:
    """Recipe for one square factor matrix (A, noise factor, or row factor).

    ``toeplitz_plus_identity`` builds ``scale * (I + T)`` with ``T[i, j] = q**|i-j|``.
    ``user_matrix`` / ``user_spectrum`` carry their values in ``data`` (a full
    matrix, or the diagonal of a diagonal factor).
    """

    kind: str = "toeplitz_plus_identity"
    q: float = 0.0
    scale: float = 1.0
    dim: int = 1
    data: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown covariance kind {self.kind!r}; expected one of {KINDS}")
        if not self.scale > 0:
            raise InvalidSpecError(f"scale must be positive, got {self.scale}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidSpecError(f"dim must be a positive integer, got {self.dim}")
        if self.kind == "toeplitz_plus_identity" and not 0.0 <= self.q <= 1.0:
            raise InvalidSpecError(f"q must lie in [0, 1], got {self.q}")
        if self.kind in ("user_matrix", "user_spectrum"):
            if self.data is None:
                raise InvalidSpecError(f"{self.kind} requires data")
            data = np.asarray(self.data, dtype=float)
            expected = (self.dim, self.dim) if self.kind == "user_matrix" else (self.dim,)
            if data.shape != expected:
                raise InvalidSpecError(
                    f"{self.kind} data has shape {data.shape}, expected {expected}"
                )

    def with_dim(self, dim: int) -> "CovSpec":
        """Same recipe at another size (only meaningful for the parametric kinds)."""
        if self.kind in ("user_matrix", "user_spectrum") and dim != self.dim:
            raise InvalidSpecError(
                f"cannot resize {self.kind} covariance from {self.dim} to {dim}"
            )
        return CovSpec(self.kind, self.q, self.scale, dim, self.data)


@dataclass(frozen=True)
class SpectralProfile:
    """Singular values ``s`` of A (descending) and the rotated signal ``c = V^T beta``."""

    s: np.ndarray
    c: np.ndarray
    kappa: float

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @property
    def signal_norm_sq(self) -> float:
        return float(self.c @ self.c)


@dataclass(frozen=True)
class RowCorrelation:
    os_spectrum: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class NoiseProfile:
    sigma: float
    sbar_spectrum: np.ndarray
    sigma_bar: float
    row_corr: Optional[RowCorrelation] = None

    @property
    def m(self) -> int:
        return self.sbar_spectrum.shape[0]


def toeplitz_block(q: float, dim: int) -> np.ndarray:
    idx = np.arange(dim)
    lag = np.abs(idx[:, None] - idx[None, :])
    # 0**0 == 1 keeps the diagonal at one when q == 0
    return np.power(float(q), lag)


def build_cov(spec: CovSpec) -> np.ndarray:
    if spec.kind == "toeplitz_plus_identity":
        mat = np.eye(spec.dim) + toeplitz_block(spec.q, spec.dim)
    elif spec.kind == "identity":
        mat = np.eye(spec.dim)
    elif spec.kind == "user_matrix":
        mat = np.array(spec.data, dtype=float)
    else:
        mat = np.diag(np.asarray(spec.data, dtype=float))
    return spec.scale * mat


def _oriented_svd(A: np.ndarray):
    """SVD with each right singular vector flipped so its largest |entry| is positive."""
    U, s, Vh = np.linalg.svd(A)
    pivot = np.argmax(np.abs(Vh), axis=1)
    signs = np.sign(Vh[np.arange(Vh.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return U * signs, s, Vh * signs[:, None]


def rank_fraction(s: np.ndarray, rank_cutoff: float = RANK_CUTOFF) -> float:
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return 0.0
    top = float(np.max(s))
    if top <= 0:
        return 0.0
    return float(np.count_nonzero(s > rank_cutoff * top)) / s.size


def spectral_profile(A: np.ndarray, beta_bar: np.ndarray, rank_cutoff: float = RANK_CUTOFF) -> SpectralProfile:
    A = np.asarray(A, dtype=float)
    beta_bar = np.asarray(beta_bar, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidSpecError(f"A must be square, got shape {A.shape}")
    if beta_bar.shape != (A.shape[1],):
        raise InvalidSpecError(
            f"beta_bar has shape {beta_bar.shape}, expected ({A.shape[1]},)"
        )
    if not 0.0 <= rank_cutoff < 1.0:
        raise InvalidParameterError(f"rank_cutoff must lie in [0, 1), got {rank_cutoff}")
    _, s, Vh = _oriented_svd(A)
    return SpectralProfile(s=s, c=Vh @ beta_bar, kappa=rank_fraction(s, rank_cutoff))


def profile_from_spectrum(s: np.ndarray, c: np.ndarray, rank_cutoff: float = RANK_CUTOFF) -> SpectralProfile:
    """Build a profile directly from a spectrum and rotated signal (diagonal A)."""
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    if s.shape != c.shape or s.ndim != 1:
        raise InvalidSpecError(f"s and c must be equal-length vectors, got {s.shape} and {c.shape}")
    if np.any(s < 0):
        raise InvalidSpecError("spectrum entries must be nonnegative")
    order = np.argsort(-s, kind="stable")
    return SpectralProfile(s=s[order], c=c[order], kappa=rank_fraction(s, rank_cutoff))


def _check_square(name: str, M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidSpecError(f"{name} must be square, got shape {M.shape}")
    return M


def sigma_bar(noise_A: np.ndarray, sigma: float) -> float:
    noise_A = _check_square("noise_A", noise_A)
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    m = noise_A.shape[0]
    return float(sigma * np.linalg.norm(noise_A, "fro") / np.sqrt(m))


def _row_factor_svd(rowcov_A: np.ndarray, rank_cutoff: float):
    U, s, _ = np.linalg.svd(rowcov_A)
    if s[-1] <= rank_cutoff * s[0]:
        raise RankError(
            f"row covariance factor is singular (smallest singular value {s[-1]:.3e})"
        )
    return U, s


def q_profile(noise_A: np.ndarray, rowcov_A: np.ndarray, rank_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Per-sample noise weights ``q_j = (1/os_j^2) sum_l Ucal_jl^2 sbar_l^2``.

    ``Ucal = Ubarbar^T Ubar`` pairs the left singular vectors of the row factor
    with those of the noise factor. Entries are ordered like the descending
    singular values of ``rowcov_A``.
    """
    noise_A = _check_square("noise_A", noise_A)
    rowcov_A = _check_square("rowcov_A", rowcov_A)
    if noise_A.shape != rowcov_A.shape:
        raise InvalidSpecError(
            f"noise_A {noise_A.shape} and rowcov_A {rowcov_A.shape} must match"
        )
    U_row, os_ = _row_factor_svd(rowcov_A, rank_cutoff)
    U_noise, sbar, _ = np.linalg.svd(noise_A)
    weighted = (U_row.T @ U_noise) * sbar[None, :]
    return np.sum(weighted**2, axis=1) / os_**2


def sigma_bar_rowcorr(
    noise_A: np.ndarray,
    rowcov_A: np.ndarray,
    sigma: float,
    form: str = "derived",
    rank_cutoff: float = RANK_CUTOFF,
) -> float:
    """Effective noise scale for the min-norm interpolator with correlated rows.

    ``form="derived"`` returns ``sigma * ||Abarbar^{-1} Abar||_F / sqrt(m)``, i.e. the
    whitened noise the interpolation constraint actually sees; it equals
    ``sigma * sqrt(mean(q))``. ``form="printed"`` weights by the row spectrum
    squared instead of its inverse (kept for comparison; Monte Carlo rejects it).
    """
    noise_A = _check_square("noise_A", noise_A)
    rowcov_A = _check_square("rowcov_A", rowcov_A)
    if noise_A.shape != rowcov_A.shape:
        raise InvalidSpecError(
            f"noise_A {noise_A.shape} and rowcov_A {rowcov_A.shape} must match"
        )
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    m = noise_A.shape[0]
    U_row, os_ = _row_factor_svd(rowcov_A, rank_cutoff)
    U_noise, sbar, _ = np.linalg.svd(noise_A)
    if form == "derived":
        weight = 1.0 / os_
    elif form == "printed":
        weight = os_
    else:
        raise InvalidParameterError(f"form must be 'derived' or 'printed', got {form!r}")
    M = weight[:, None] * (U_row.T @ U_noise) * sbar[None, :]
    return float(sigma * np.sqrt(np.sum(M**2) / m))


def noise_profile(
    noise_A: np.ndarray,
    sigma: float,
    rowcov_A: Optional[np.ndarray] = None,
    rank_cutoff: float = RANK_CUTOFF,
) -> NoiseProfile:
    """Collect everything the theory needs about noise (and row correlation)."""
    noise_A = _check_square("noise_A", noise_A)
    sbar = np.linalg.svd(noise_A, compute_uv=False)
    if rowcov_A is None:
        return NoiseProfile(sigma=float(sigma), sbar_spectrum=sbar, sigma_bar=sigma_bar(noise_A, sigma))
    q = q_profile(noise_A, rowcov_A, rank_cutoff)
    os_ = np.linalg.svd(_check_square("rowcov_A", rowcov_A), compute_uv=False)
    return NoiseProfile(
        sigma=float(sigma),
        sbar_spectrum=sbar,
        sigma_bar=sigma_bar_rowcorr(noise_A, rowcov_A, sigma, rank_cutoff=rank_cutoff),
        row_corr=RowCorrelation(os_spectrum=os_, q=q),
    )


def _read_numeric_rows(path: Path) -> list[list[float]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise InvalidSpecError(f"{path}: empty CSV")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    out = []
    for lineno, row in enumerate(rows, start=1):
        try:
            out.append([float(cell) for cell in row if cell.strip()])
        except ValueError as exc:
            raise InvalidSpecError(f"{path}: non-numeric data row {lineno}: {exc}") from None
    return out


def load_matrix_csv(path) -> np.ndarray:
    """Read a square matrix, one CSV row per matrix row; a header row is skipped."""
    path = Path(path)
    rows = _read_numeric_rows(path)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidSpecError(f"{path}: ragged rows (widths {sorted(widths)})")
    mat = np.array(rows)
    return _check_square(str(path), mat)


def load_spectrum_csv(path) -> np.ndarray:
    path = Path(path)
    rows = _read_numeric_rows(path)
    if any(len(r) != 1 for r in rows):
        raise InvalidSpecError(f"{path}: spectrum CSV must have a single column")
    spec = np.array([r[0] for r in rows])
    if np.any(spec < 0):
        raise InvalidSpecError(f"{path}: spectrum entries must be nonnegative")
    return spec
