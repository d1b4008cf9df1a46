"""Projection heads, their analytic gradients, Adam, and the Siamese trainer.

Three head shapes over a shared input dimension d and output dimension k:

* ``linear``     — z = W e
* ``nonlinear``  — z = Dropout(LeakyReLU(W e))
* ``nonlinear2`` — z = Dropout(LeakyReLU(W2 Dropout(LeakyReLU(W1 e)))),
                   intermediate width ``hidden`` (default 1024)

No bias terms anywhere. Dropout is inverted: surviving units are scaled by
1/(1-p) at train time so eval mode applies the raw activations. Both Siamese
branches share the same weights but draw independent dropout masks.

The training objective per pair is (yhat - r)^2 where yhat is the cosine of
the two projected vectors with norms clamped below at 1e-12, and r is the
normalized rating. All training arithmetic runs in 64-bit floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _rng, embstore, metrics
from .errors import (
    BadMagic,
    ConfigInvalid,
    DimMismatch,
    EmptyTrainSet,
    IoFailure,
    ShapeMismatch,
)

KINDS = ("linear", "nonlinear", "nonlinear2")

#: Norm clamp in the cosine of the loss; shared with metrics.EPS_NORM.
EPS = metrics.EPS_NORM


def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, x, slope * x)


def _dleaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, 1.0, slope)


class ProjectionModel:
    """A projection head with one or two weight matrices (64-bit internal)."""

    def __init__(
        self,
        kind: str,
        weights: list[np.ndarray],
        leaky_slope: float = 0.01,
        dropout_rate: float = 0.15,
        seed: int = 0,
    ):
        if kind not in KINDS:
            raise ConfigInvalid(f"unknown projection kind {kind!r}")
        expected = 2 if kind == "nonlinear2" else 1
        if len(weights) != expected:
            raise ShapeMismatch(f"{kind} head takes {expected} matrices, got {len(weights)}")
        self.kind = kind
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.leaky_slope = float(leaky_slope)
        self.dropout_rate = float(dropout_rate)
        self.seed = int(seed)
        for w in self.weights:
            if w.ndim != 2 or not np.all(np.isfinite(w)):
                raise ShapeMismatch("weight matrices must be finite and 2-D")
        if kind == "nonlinear2" and self.weights[1].shape[1] != self.weights[0].shape[0]:
            raise ShapeMismatch(
                f"W2 columns {self.weights[1].shape[1]} != W1 rows {self.weights[0].shape[0]}"
            )
        self._mask_counter = 0  # for unseeded train-mode forward calls

    @property
    def d(self) -> int:
        return int(self.weights[0].shape[1])

    @property
    def k(self) -> int:
        return int(self.weights[-1].shape[0])

    @property
    def hidden(self) -> Optional[int]:
        return int(self.weights[0].shape[0]) if self.kind == "nonlinear2" else None

    @property
    def W(self) -> np.ndarray:
        """The single weight matrix of the one-layer kinds."""
        if self.kind == "nonlinear2":
            raise AttributeError("nonlinear2 has weights W1/W2, not a single W")
        return self.weights[0]

    def mask_widths(self) -> tuple[int, ...]:
        """Dropout mask widths per layer, outermost last. Empty for linear."""
        if self.kind == "linear":
            return ()
        if self.kind == "nonlinear":
            return (self.k,)
        return (self.weights[0].shape[0], self.k)

    def copy(self) -> "ProjectionModel":
        clone = ProjectionModel(
            self.kind,
            [w.copy() for w in self.weights],
            leaky_slope=self.leaky_slope,
            dropout_rate=self.dropout_rate,
            seed=self.seed,
        )
        return clone

    def describe(self) -> str:
        return f"{self.kind}:d{self.d}:k{self.k}:seed{self.seed}"

    def _own_masks(self) -> tuple[np.ndarray, ...]:
        """Fallback mask draw for train-mode forward without explicit masks."""
        rng = _rng.philox(self.seed, _rng.LANE_DROPOUT, c0=self._mask_counter)
        self._mask_counter += 1
        return tuple(rng.random(w) >= self.dropout_rate for w in self.mask_widths())

    def forward(
        self,
        e: np.ndarray,
        mode: str = "eval",
        dropout_mask: Optional[Sequence[np.ndarray]] = None,
    ) -> np.ndarray:
        """Project one vector. Train mode applies inverted dropout.

        ``dropout_mask`` is a per-layer tuple of keep masks (a bare array is
        accepted for the single-layer kinds). When omitted in train mode,
        masks come from the model's own seeded stream, advancing an internal
        counter per call.
        """
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        x = np.asarray(e, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.d:
            raise DimMismatch(f"input has dim {x.shape[0]}, model expects {self.d}")
        if self.kind == "linear":
            return self.weights[0] @ x
        drop = mode == "train" and self.dropout_rate > 0.0
        masks: tuple[np.ndarray, ...] = ()
        if drop:
            if dropout_mask is None:
                masks = self._own_masks()
            elif isinstance(dropout_mask, np.ndarray):
                masks = (dropout_mask,)
            else:
                masks = tuple(dropout_mask)
        inv_keep = 1.0 / (1.0 - self.dropout_rate)
        h = x
        for layer, w in enumerate(self.weights):
            h = _leaky(w @ h, self.leaky_slope)
            if drop:
                h = h * masks[layer] * inv_keep
        return h


def init_model(
    kind: str,
    d: int,
    k: int,
    seed: int,
    hidden: int = 1024,
    leaky_slope: float = 0.01,
    dropout_rate: float = 0.15,
) -> ProjectionModel:
    """Seeded uniform init: each matrix ~ U[-sqrt(1/fan_in), +sqrt(1/fan_in)]."""
    if k > d:
        raise ConfigInvalid(f"output dim k={k} must not exceed input dim d={d}")
    if k < 1 or d < 1 or hidden < 1:
        raise ConfigInvalid("dimensions must be positive")
    rng = _rng.philox(seed, _rng.LANE_INIT)
    if kind == "nonlinear2":
        shapes = [(hidden, d), (k, hidden)]
    else:
        shapes = [(k, d)]
    weights = []
    for rows, cols in shapes:
        bound = math.sqrt(1.0 / cols)
        weights.append(rng.uniform(-bound, bound, size=(rows, cols)))
    return ProjectionModel(
        kind, weights, leaky_slope=leaky_slope, dropout_rate=dropout_rate, seed=seed
    )


# --- loss and gradient -------------------------------------------------------


def _batch_forward(
    model: ProjectionModel,
    X: np.ndarray,
    train: bool,
    masks: tuple[np.ndarray, ...],
) -> tuple[np.ndarray, list]:
    """Vectorized forward over rows of X; returns (Z, per-layer cache)."""
    inv_keep = 1.0 / (1.0 - model.dropout_rate)
    cache = []
    h = X
    for layer, w in enumerate(model.weights):
        pre = h @ w.T
        if model.kind == "linear":
            cache.append((h, pre, None))
            h = pre
            continue
        act = _leaky(pre, model.leaky_slope)
        if train and model.dropout_rate > 0.0:
            mask = masks[layer]
            out = act * mask * inv_keep
        else:
            mask = None
            out = act
        cache.append((h, pre, mask))
        h = out
    return h, cache


def _batch_backward(
    model: ProjectionModel, dZ: np.ndarray, cache: list
) -> list[np.ndarray]:
    """Backprop dZ (batch x k) through the cache; returns per-matrix grads."""
    inv_keep = 1.0 / (1.0 - model.dropout_rate)
    grads: list[Optional[np.ndarray]] = [None] * len(model.weights)
    g = dZ
    for layer in range(len(model.weights) - 1, -1, -1):
        x_in, pre, mask = cache[layer]
        if model.kind != "linear":
            if mask is not None:
                g = g * mask * inv_keep
            g = g * _dleaky(pre, model.leaky_slope)
        grads[layer] = g.T @ x_in
        if layer > 0:
            g = g @ model.weights[layer]
    return grads  # type: ignore[return-value]


def _cosine_batch(Z1: np.ndarray, Z2: np.ndarray) -> tuple[np.ndarray, ...]:
    """Row-wise guarded cosine; returns (yhat, a, b, n1, n2, dot)."""
    n1 = np.sqrt(np.sum(Z1 * Z1, axis=1))
    n2 = np.sqrt(np.sum(Z2 * Z2, axis=1))
    a = np.maximum(n1, EPS)
    b = np.maximum(n2, EPS)
    dot = np.sum(Z1 * Z2, axis=1)
    yhat = dot / (a * b)
    return yhat, a, b, n1, n2, dot


def _pair_batch_loss_grads(
    model: ProjectionModel,
    X1: np.ndarray,
    X2: np.ndarray,
    ratings: np.ndarray,
    masks1: tuple[np.ndarray, ...],
    masks2: tuple[np.ndarray, ...],
    train: bool = True,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-pair losses and summed (not averaged) weight gradients."""
    Z1, cache1 = _batch_forward(model, X1, train, masks1)
    Z2, cache2 = _batch_forward(model, X2, train, masks2)
    yhat, a, b, n1, n2, _ = _cosine_batch(Z1, Z2)
    resid = yhat - ratings
    losses = resid * resid
    dLdy = 2.0 * resid  # per pair

    # d(yhat)/dZ1 = Z2/(a b) - yhat Z1/a^2, second term gated on n1 > EPS
    # (below the clamp the norm is treated as the constant EPS)
    gate1 = (n1 > EPS).astype(np.float64)
    gate2 = (n2 > EPS).astype(np.float64)
    ab = (a * b)[:, None]
    dZ1 = (Z2 / ab - (yhat / (a * a) * gate1)[:, None] * Z1) * dLdy[:, None]
    dZ2 = (Z1 / ab - (yhat / (b * b) * gate2)[:, None] * Z2) * dLdy[:, None]

    grads1 = _batch_backward(model, dZ1, cache1)
    grads2 = _batch_backward(model, dZ2, cache2)
    grads = [g1 + g2 for g1, g2 in zip(grads1, grads2)]
    return losses, grads


def loss_and_grad(
    model: ProjectionModel,
    pair,
    mode: str = "train",
    masks1: Optional[Sequence[np.ndarray]] = None,
    masks2: Optional[Sequence[np.ndarray]] = None,
) -> tuple[float, list[np.ndarray]]:
    """Squared-error loss of one pair and its exact gradient in the weights.

    Both branches share the weights; the returned gradient sums the two
    branch contributions (one matrix per model weight matrix). In train mode
    with a dropout kind, masks may be passed per branch as per-layer tuples;
    omitted masks draw from the model's own stream.
    """
    X1 = np.asarray(pair.e1, dtype=np.float64).reshape(1, -1)
    X2 = np.asarray(pair.e2, dtype=np.float64).reshape(1, -1)
    if X1.shape[1] != model.d or X2.shape[1] != model.d:
        raise DimMismatch(
            f"pair dims ({X1.shape[1]}, {X2.shape[1]}) != model dim {model.d}"
        )
    train = mode == "train"
    need_masks = train and model.kind != "linear" and model.dropout_rate > 0.0
    if need_masks:
        m1 = _as_mask_tuple(model, masks1) if masks1 is not None else model._own_masks()
        m2 = _as_mask_tuple(model, masks2) if masks2 is not None else model._own_masks()
        m1 = tuple(m[None, :] for m in m1)
        m2 = tuple(m[None, :] for m in m2)
    else:
        m1 = m2 = ()
    ratings = np.asarray([pair.rating], dtype=np.float64)
    losses, grads = _pair_batch_loss_grads(model, X1, X2, ratings, m1, m2, train=train)
    return float(losses[0]), grads


def _as_mask_tuple(
    model: ProjectionModel, masks: Sequence[np.ndarray] | np.ndarray
) -> tuple[np.ndarray, ...]:
    if isinstance(masks, np.ndarray):
        masks = (masks,)
    out = tuple(np.asarray(m, dtype=np.float64).reshape(-1) for m in masks)
    widths = model.mask_widths()
    if len(out) != len(widths) or any(m.shape[0] != w for m, w in zip(out, widths)):
        raise ShapeMismatch(
            f"expected masks of widths {widths}, got {tuple(m.shape[0] for m in out)}"
        )
    return out


# --- optimizer ---------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moment estimates for one weight matrix."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_weight(w: np.ndarray, lr: float = 1e-3) -> "AdamState":
        return AdamState(m=np.zeros_like(w), v=np.zeros_like(w), lr=lr)


def adam_step(
    state: AdamState, W: np.ndarray, grad: np.ndarray
) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update. Pure: inputs are left untouched."""
    if W.shape != grad.shape or state.m.shape != W.shape:
        raise ShapeMismatch(
            f"shapes differ: W {W.shape}, grad {grad.shape}, m {state.m.shape}"
        )
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grad * grad)
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    new_w = W - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(
        m=m, v=v, step=step, lr=state.lr, beta1=state.beta1,
        beta2=state.beta2, eps=state.eps,
    )
    return new_state, new_w


# --- training loop -----------------------------------------------------------


@dataclass
class TrainConfig:
    """Hyperparameters of the Siamese training loop."""

    k: int
    lr: float = 1e-3
    batch_size: int = 512
    dropout_rate: float = 0.15
    max_epochs: int = 50
    seed: int = 0
    early_stop_patience: int = 20
    hidden: int = 1024
    leaky_slope: float = 0.01

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigInvalid(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigInvalid(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigInvalid(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.max_epochs < 0:
            raise ConfigInvalid("max_epochs must be non-negative")
        if self.early_stop_patience < 1:
            raise ConfigInvalid("early_stop_patience must be >= 1")
        if self.k < 1 or self.hidden < 1:
            raise ConfigInvalid("k and hidden must be positive")


def _epoch_masks(
    model: ProjectionModel, n: int, seed: int, epoch: int, branch: int
) -> tuple[np.ndarray, ...]:
    """Keep-masks for all n pairs of one epoch and branch.

    Row i of each matrix is the mask of the pair at position i in the
    original (unshuffled) training list, so results do not depend on batch
    composition. branch is 1 or 2.
    """
    rng = _rng.philox(seed, _rng.LANE_DROPOUT, c0=epoch, c1=branch)
    return tuple(
        rng.random((n, width)) >= model.dropout_rate for width in model.mask_widths()
    )


def _stack_pairs(pairs: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X1 = np.asarray([np.asarray(p.e1, dtype=np.float64) for p in pairs])
    X2 = np.asarray([np.asarray(p.e2, dtype=np.float64) for p in pairs])
    r = np.asarray([p.rating for p in pairs], dtype=np.float64)
    return X1, X2, r


def train(
    pairs_train: Sequence,
    pairs_val: Sequence,
    config: TrainConfig,
    kind: str = "nonlinear",
) -> tuple[ProjectionModel, list[dict]]:
    """Mini-batch Adam over the Siamese cosine-regression loss.

    Each epoch shuffles deterministically, averages the gradient within each
    batch, then scores the validation pairs in eval mode. Returns the weights
    of the best validation epoch (ties resolve to the earliest) plus a
    per-epoch history of train_loss and val_spearman. Training stops early
    after ``early_stop_patience`` epochs without improvement. Everything is
    a pure function of (pairs, config, kind).
    """
    config.validate()
    if kind not in KINDS:
        raise ConfigInvalid(f"unknown projection kind {kind!r}")
    if not pairs_train:
        raise EmptyTrainSet()
    if not pairs_val:
        raise ConfigInvalid("validation pair list is empty")
    X1, X2, ratings = _stack_pairs(pairs_train)
    d = X1.shape[1]
    if X2.shape[1] != d:
        raise DimMismatch("e1/e2 dimension disagreement in training pairs")
    for p in pairs_val:
        if np.asarray(p.e1).shape[0] != d:
            raise DimMismatch("validation pairs differ in dimension from training pairs")

    model = init_model(
        kind, d, config.k, config.seed,
        hidden=config.hidden,
        leaky_slope=config.leaky_slope,
        dropout_rate=config.dropout_rate,
    )
    states = [AdamState.for_weight(w, lr=config.lr) for w in model.weights]
    n = len(pairs_train)
    history: list[dict] = []
    best_model = model.copy()
    best_spearman = -np.inf
    best_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        perm = _rng.philox(config.seed, _rng.LANE_SHUFFLE, c0=epoch).permutation(n)
        if model.kind != "linear" and model.dropout_rate > 0.0:
            masks1 = _epoch_masks(model, n, config.seed, epoch, branch=1)
            masks2 = _epoch_masks(model, n, config.seed, epoch, branch=2)
        else:
            masks1 = masks2 = ()
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            bm1 = tuple(m[idx] for m in masks1)
            bm2 = tuple(m[idx] for m in masks2)
            losses, grads = _pair_batch_loss_grads(
                model, X1[idx], X2[idx], ratings[idx], bm1, bm2, train=True
            )
            loss_sum += float(np.sum(losses))
            scale = 1.0 / idx.shape[0]
            for j, (state, w, g) in enumerate(zip(states, model.weights, grads)):
                states[j], model.weights[j] = adam_step(state, w, g * scale)
        val_scores = metrics.score_pairs(pairs_val, model)
        val_spearman = metrics.spearman(val_scores, [p.rating for p in pairs_val])
        history.append(
            {"epoch": epoch, "train_loss": loss_sum / n, "val_spearman": val_spearman}
        )
        if val_spearman > best_spearman:
            best_spearman = val_spearman
            best_epoch = epoch
            best_model = model.copy()
        elif epoch - best_epoch >= config.early_stop_patience:
            break
    return best_model, history


# --- checkpoint IO -----------------------------------------------------------


def save_model(
    model: ProjectionModel,
    path: str | Path,
    epoch: int = 0,
    val_spearman: Optional[float] = None,
) -> None:
    """One file: a JSON header line, then one float32 blob per weight matrix."""
    header = {
        "kind": model.kind,
        "d": model.d,
        "k": model.k,
        "leaky_slope": model.leaky_slope,
        "dropout_rate": model.dropout_rate,
        "seed": model.seed,
        "epoch": epoch,
        "val_spearman": val_spearman,
    }
    if model.kind == "nonlinear2":
        header["hidden"] = model.hidden
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8") + b"\n"
    for w in model.weights:
        blob += embstore.pack_matrix(w)
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint to {path}: {exc}") from exc


def load_model(path: str | Path) -> tuple[ProjectionModel, dict]:
    """Inverse of save_model; weights come back upcast to 64-bit."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint from {path}: {exc}") from exc
    newline = raw.find(b"\n")
    if newline < 0:
        raise BadMagic(str(path), "checkpoint lacks a header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadMagic(str(path), f"checkpoint header is not JSON: {exc}") from exc
    offset = newline + 1
    count = 2 if header.get("kind") == "nonlinear2" else 1
    weights = []
    for _ in range(count):
        mat, offset = embstore.unpack_matrix(raw, offset)
        weights.append(mat.astype(np.float64))
    model = ProjectionModel(
        header["kind"],
        weights,
        leaky_slope=header.get("leaky_slope", 0.01),
        dropout_rate=header.get("dropout_rate", 0.15),
        seed=header.get("seed", 0),
    )
    return model, header
