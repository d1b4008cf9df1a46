"""Cosine similarity, tie-aware Spearman correlation, and batch evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import ConstantInput, DimMismatch, LengthMismatch, ZeroVector

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .compose import ComposedPair, CompositionVariant
    from .projection import ProjectionModel

#: Norm guard shared with the training loss so that an identity projection
#: scores pairs bit-identically to the unsupervised path.
EPS_NORM = 1e-12


def _cosine_eps(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine with norms clamped below at EPS_NORM, clipped to [-1, 1]."""
    na = max(float(np.linalg.norm(a)), EPS_NORM)
    nb = max(float(np.linalg.norm(b)), EPS_NORM)
    value = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, value))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a||b|), clamped to [-1, 1] against rounding.

    Zero-norm inputs are rejected: a zero vector has no direction, and
    silently returning 0 would hide degenerate compositions.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise DimMismatch(f"vectors of dim {a.shape[0]} and {b.shape[0]}")
    if float(np.linalg.norm(a)) == 0.0:
        raise ZeroVector("a")
    if float(np.linalg.norm(b)) == 0.0:
        raise ZeroVector("b")
    return _cosine_eps(a, b)


def _fractional_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the average of their positions."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        # positions i..j (0-based) share rank mean of (i+1)..(j+1)
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of the fractional-rank transforms of x and y."""
    xa = np.asarray(x, dtype=np.float64).reshape(-1)
    ya = np.asarray(y, dtype=np.float64).reshape(-1)
    if xa.shape[0] != ya.shape[0] or xa.shape[0] < 2:
        raise LengthMismatch(
            f"need two equal-length lists of n >= 2, got {xa.shape[0]} and {ya.shape[0]}"
        )
    rx = _fractional_ranks(xa)
    ry = _fractional_ranks(ya)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0:
        raise ConstantInput("x")
    if sy == 0.0:
        raise ConstantInput("y")
    rho = float(np.dot(dx, dy)) / (sx * sy)
    return min(1.0, max(-1.0, rho))


@dataclass
class EvalReport:
    """Spearman of model scores against ratings over one pair set."""

    spearman: float
    n: int
    variant: "CompositionVariant"
    model_id: str = "unsupervised"

    def to_dict(self) -> dict:
        return {
            "spearman": self.spearman,
            "n": self.n,
            "variant": {
                "base": self.variant.base,
                "subtract_condition": self.variant.subtract_condition,
            },
            "model_id": self.model_id,
        }


def score_pairs(
    pairs: Sequence["ComposedPair"], model: Optional["ProjectionModel"] = None
) -> np.ndarray:
    """Cosine score per pair, after projecting through ``model`` when given.

    Projection runs in eval mode (no dropout). Norms are guarded at EPS_NORM
    rather than rejected, matching the training loss, so trained heads that
    collapse a stray pair to zero still evaluate.
    """
    scores = np.empty(len(pairs), dtype=np.float64)
    for i, pair in enumerate(pairs):
        e1 = np.asarray(pair.e1, dtype=np.float64)
        e2 = np.asarray(pair.e2, dtype=np.float64)
        if model is not None:
            if model.d != e1.shape[0]:
                raise DimMismatch(
                    f"model expects dim {model.d}, pairs have dim {e1.shape[0]}"
                )
            e1 = model.forward(e1, mode="eval")
            e2 = model.forward(e2, mode="eval")
        scores[i] = _cosine_eps(e1, e2)
    return scores


def evaluate(
    pairs: Sequence["ComposedPair"],
    model: Optional["ProjectionModel"] = None,
    model_id: Optional[str] = None,
) -> EvalReport:
    """Score every pair and rank-correlate against the human ratings."""
    if len(pairs) < 2:
        raise LengthMismatch(f"need at least 2 pairs to evaluate, got {len(pairs)}")
    scores = score_pairs(pairs, model)
    ratings = [pair.rating for pair in pairs]
    rho = spearman(scores, ratings)
    if model_id is None:
        model_id = "unsupervised" if model is None else model.describe()
    return EvalReport(
        spearman=rho, n=len(pairs), variant=pairs[0].variant, model_id=model_id
    )
