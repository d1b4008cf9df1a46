"""Isotropy diagnostics over an embedding matrix.

Two measurements: the distribution of row-to-mean cosines, and the sampled
isotropy ratio — the min/max ratio of the partition function
F(u) = sum_j exp(e_j . u) over random unit directions u, where e_j are the
unit-normalized rows. A perfectly isotropic cloud gives a ratio near 1;
embeddings huddled around a common direction push it toward 0.

F is evaluated in the log domain: at realistic n a direct sum of exponentials
is fine, but log-sum-exp keeps the ratio well-defined for any n without
overflow, and exp(min logF - max logF) never exceeds 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import DegenerateMean, LengthMismatch, ZeroRow

_NORM_FLOOR = 1e-12


@dataclass
class IsotropyReport:
    """Summary of both diagnostics for one matrix."""

    mean_cos_to_mean: float
    std_cos_to_mean: float
    i_iso: float
    k_directions: int
    n: int
    dim: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "mean_cos_to_mean": self.mean_cos_to_mean,
            "std_cos_to_mean": self.std_cos_to_mean,
            "i_iso": self.i_iso,
            "k_directions": self.k_directions,
            "n": self.n,
            "dim": self.dim,
            "seed": self.seed,
        }


def cos_to_mean_stats(E: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Cosine of every row against the mean row.

    Returns the population mean and standard deviation of those cosines plus
    the per-row values.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] < 2:
        raise LengthMismatch(f"need an n x d matrix with n >= 2, got shape {E.shape}")
    mu = E.mean(axis=0)
    mu_norm = float(np.linalg.norm(mu))
    if mu_norm < _NORM_FLOOR:
        raise DegenerateMean()
    row_norms = np.linalg.norm(E, axis=1)
    zero = np.where(row_norms < _NORM_FLOOR)[0]
    if zero.size:
        raise ZeroRow(int(zero[0]))
    per_row = (E @ mu) / (row_norms * mu_norm)
    per_row = np.clip(per_row, -1.0, 1.0)
    return float(per_row.mean()), float(per_row.std()), per_row


def _unit_rows(E: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(E, axis=1)
    zero = np.where(norms < _NORM_FLOOR)[0]
    if zero.size:
        raise ZeroRow(int(zero[0]))
    return E / norms[:, None]


def sample_directions(dim: int, k: int, seed: int) -> np.ndarray:
    """k unit vectors: seeded standard normals, normalized (uniform on sphere)."""
    rng = _rng.philox(seed, _rng.LANE_DIRECTIONS)
    U = rng.standard_normal((k, dim))
    return _unit_rows(U)


def _log_partition(E_unit: np.ndarray, U: np.ndarray) -> np.ndarray:
    """logF per direction: log sum_j exp(e_j . u) via log-sum-exp."""
    dots = E_unit @ U.T  # n x k
    peak = dots.max(axis=0)
    return peak + np.log(np.sum(np.exp(dots - peak[None, :]), axis=0))


def i_iso(E: np.ndarray, k: int = 1000, seed: int = 0) -> float:
    """Sampled isotropy ratio exp(min logF - max logF) in (0, 1]."""
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] < 1:
        raise LengthMismatch(f"need a non-empty n x d matrix, got shape {E.shape}")
    if k < 1:
        raise LengthMismatch(f"need at least one direction, got k={k}")
    E_unit = _unit_rows(E)
    U = sample_directions(E.shape[1], k, seed)
    logF = _log_partition(E_unit, U)
    return float(np.exp(logF.min() - logF.max()))


def report(E: np.ndarray, k: int = 1000, seed: int = 0) -> IsotropyReport:
    """Run both diagnostics and bundle the results."""
    E = np.asarray(E, dtype=np.float64)
    mean_cos, std_cos, _ = cos_to_mean_stats(E)
    ratio = i_iso(E, k=k, seed=seed)
    return IsotropyReport(
        mean_cos_to_mean=mean_cos,
        std_cos_to_mean=std_cos,
        i_iso=ratio,
        k_directions=k,
        n=E.shape[0],
        dim=E.shape[1],
        seed=seed,
    )


def compare_subtraction(
    E_with: np.ndarray, E_without: np.ndarray, k: int = 1000, seed: int = 0
) -> dict:
    """Diagnose two matrices under the same direction sample.

    ``E_with`` is the matrix after condition subtraction, ``E_without`` the
    one before; delta_i_iso > 0 means subtraction spread the directions out.
    """
    E_with = np.asarray(E_with, dtype=np.float64)
    E_without = np.asarray(E_without, dtype=np.float64)
    if E_with.shape[0] != E_without.shape[0]:
        raise LengthMismatch(
            f"row counts differ: {E_with.shape[0]} vs {E_without.shape[0]}"
        )
    report_with = report(E_with, k=k, seed=seed)
    report_without = report(E_without, k=k, seed=seed)
    return {
        "delta_i_iso": report_with.i_iso - report_without.i_iso,
        "report_with": report_with,
        "report_without": report_without,
    }
