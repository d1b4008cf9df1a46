"""Seeded synthetic benchmark with a planted recoverable projection.

Construction per record: two latent "answer" vectors a1, a2 are drawn in
the non-negative orthant so that cosine(a1, a2) equals a target t sampled
uniformly from [0, 1]; the rating is the linear image of t in [1, 5]
(optionally quantized to half points, which plants rating ties on purpose).
Two properties are deliberate. First, targets live in [0, 1] so the
normalized rating of a record equals its planted cosine exactly, making the
planted projection the global optimum of the trainer's squared-error loss,
not merely a rank-perfect scorer. Second, the answers are componentwise
non-negative (a1 and the orthogonal direction of a2 get disjoint
coordinate supports, which keeps the cosine exact), so LeakyReLU acts as
the identity on them and the planted solution is representable by every
head kind. The stored conditional rows embed the answers through a fixed
orthonormal matrix R (d x latent) and add a per-condition bias plus
optional Gaussian noise:

    cond_given_si     = R a_i + b_c + noise_sigma * eps_i
    cond_unconditional = b_c

Subtracting the unconditional row therefore recovers R a_i (+ noise), and
the ground-truth projection W = R^T maps it back to the latent answer, so a
trained head has an exact target to find: in the noiseless, unquantized
case W scores the pairs in perfect rank agreement with the ratings.

The per-condition bias is shared by every record with that condition. All
biases share one dominant common offset direction (drawn once per seed at
scale ``bias_scale``) plus a smaller per-condition jitter, so unsubtracted
rows huddle around the common direction regardless of condition — exactly
the anisotropic failure mode the subtraction variant exists to fix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng, embstore
from .dataset import CstsRecord
from .embstore import EmbeddingStore, RowKey
from .errors import ConfigInvalid


@dataclass
class SynthConfig:
    """Knobs of the synthetic generator."""

    n_records: int
    d: int
    latent: int
    noise_sigma: float = 0.0
    n_conditions: int = 1
    seed: int = 0
    bias_scale: float = 3.0
    quantize_ratings: bool = True

    def validate(self) -> None:
        if self.n_records < 1:
            raise ConfigInvalid(f"n_records must be >= 1, got {self.n_records}")
        if self.latent < 2:
            raise ConfigInvalid("latent must be >= 2 (cosine targets need a plane)")
        if self.latent > self.d:
            raise ConfigInvalid(f"latent {self.latent} exceeds embedding dim {self.d}")
        if not 1 <= self.n_conditions <= self.n_records:
            raise ConfigInvalid(
                f"n_conditions must be in [1, n_records], got {self.n_conditions}"
            )
        if self.noise_sigma < 0:
            raise ConfigInvalid("noise_sigma must be non-negative")
        if self.bias_scale < 0:
            raise ConfigInvalid("bias_scale must be non-negative")


def _orthonormal_columns(rng: np.random.Generator, d: int, latent: int) -> np.ndarray:
    """Seeded d x latent matrix with orthonormal columns (QR, signs fixed)."""
    gauss = rng.standard_normal((d, latent))
    q, r = np.linalg.qr(gauss)
    # canonicalize: positive diagonal of r so the factorization is unique
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]


def _pair_with_cosine(
    rng: np.random.Generator, latent: int, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Draw non-negative (a1, a2) with cosine(a1, a2) = t up to rounding.

    a1 lives on a random half of the coordinates and the orthogonal part of
    a2 on the other half; disjoint supports make the two unit directions
    exactly orthogonal while keeping every component >= 0 (t is in [0, 1]).
    """
    slots = rng.permutation(latent)
    half = latent // 2
    a1 = np.zeros(latent)
    a1[slots[:half]] = np.abs(rng.standard_normal(half))
    u1 = a1 / np.linalg.norm(a1)
    v = np.zeros(latent)
    v[slots[half:]] = np.abs(rng.standard_normal(latent - half))
    u_perp = v / np.linalg.norm(v)
    scale = float(np.linalg.norm(rng.standard_normal(latent)))
    a2 = scale * (t * u1 + math.sqrt(max(0.0, 1.0 - t * t)) * u_perp)
    return a1, a2


def rating_from_target(t: float, quantize: bool) -> float:
    """Map t in [0, 1] linearly onto [1, 5]; optionally snap to half points."""
    raw = 1.0 + 4.0 * t
    if quantize:
        raw = float(np.round(raw * 2.0) / 2.0)
    return min(5.0, max(1.0, raw))


def generate(config: SynthConfig) -> tuple[list[CstsRecord], EmbeddingStore, np.ndarray]:
    """Build (records, store, ground_truth) from one seeded stream.

    ground_truth is the latent x d matrix W = R^T; applying it to a
    subtracted row recovers the latent answer vector.
    """
    config.validate()
    rng = _rng.philox(config.seed, _rng.LANE_SYNTH)
    R = _orthonormal_columns(rng, config.d, config.latent)
    common_offset = rng.standard_normal(config.d)
    jitter = rng.standard_normal((config.n_conditions, config.d))
    biases = config.bias_scale * (common_offset[None, :] + 0.25 * jitter)

    records: list[CstsRecord] = []
    rows: list[tuple[RowKey, np.ndarray, str]] = []
    for i in range(config.n_records):
        cond_index = i % config.n_conditions
        condition = f"condition {cond_index}"
        t = float(rng.uniform(0.0, 1.0))
        a1, a2 = _pair_with_cosine(rng, config.latent, t)
        noise1 = rng.standard_normal(config.d)
        noise2 = rng.standard_normal(config.d)
        e1 = R @ a1 + biases[cond_index] + config.noise_sigma * noise1
        e2 = R @ a2 + biases[cond_index] + config.noise_sigma * noise2
        record = CstsRecord(
            id=str(i),
            sentence1=f"synthetic sentence {i}a",
            sentence2=f"synthetic sentence {i}b",
            condition=condition,
            rating=rating_from_target(t, config.quantize_ratings),
        )
        records.append(record)
        chash = embstore.condition_hash(condition)
        rows.append((RowKey(record.id, "cond_given_s1", chash), e1, condition))
        rows.append((RowKey(record.id, "cond_given_s2", chash), e2, condition))
    for j in range(config.n_conditions):
        condition = f"condition {j}"
        key = RowKey("", "cond_unconditional", embstore.condition_hash(condition))
        rows.append((key, biases[j], condition))
    store = embstore.build_store(config.d, rows)
    return records, store, R.T.copy()
