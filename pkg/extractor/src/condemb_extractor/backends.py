"""Encoder backends behind one tiny interface.

``hash://<dim>`` is a dependency-free deterministic stand-in: every
whitespace token maps to a fixed pseudo-random vector (counter-based, so
identical across runs and platforms) and pooling combines token vectors the
way real encoders combine hidden states. It exists so extraction, dump
layout, and the downstream toolkit can be exercised without model weights.

``st://<name>`` wraps sentence-transformers when that library is installed;
anything else is reported as unloadable rather than guessed at.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .cembio import fnv1a64
from .errors import ModelLoadFailure, OutOfMemory

POOLING_MODES = ("model_default", "last", "mean")


class HashBackend:
    """Deterministic token-hash encoder for tests and plumbing work."""

    def __init__(self, dim: int):
        self.dim = dim
        self.name = f"hash://{dim}"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            gen = np.random.Generator(np.random.Philox(key=fnv1a64(token)))
            vec = gen.standard_normal(self.dim)
            self._token_cache[token] = vec
        return vec

    def _encode_one(self, instruction: str, text: str, pooling: str) -> np.ndarray:
        full = instruction + " " + text if instruction else text
        tokens = full.split()
        stack = np.stack([self._token_vector(t) for t in tokens])
        if pooling == "last":
            return stack[-1]
        mean = stack.mean(axis=0)
        if pooling == "mean":
            return mean
        return mean / np.linalg.norm(mean)  # model_default: unit output

    def encode(
        self, prompts: Sequence[tuple[str, str]], pooling: str, batch: int
    ) -> np.ndarray:
        if pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}, got {pooling!r}")
        if batch < 1:
            raise ValueError(f"batch must be positive, got {batch}")
        out = np.empty((len(prompts), self.dim), dtype=np.float32)
        try:
            for start in range(0, len(prompts), batch):
                chunk = prompts[start : start + batch]
                for offset, (instruction, text) in enumerate(chunk):
                    out[start + offset] = self._encode_one(instruction, text, pooling)
        except MemoryError as exc:
            raise OutOfMemory(batch) from exc
        return out


class SentenceTransformerBackend:
    """Thin wrapper over a sentence-transformers model's own encode API."""

    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelLoadFailure(
                name,
                "sentence-transformers is not installed; use hash://<dim> "
                "for offline work",
            ) from exc
        try:
            self._model = SentenceTransformer(name)
        except Exception as exc:  # model resolution is the library's domain
            raise ModelLoadFailure(name, str(exc)) from exc
        self.name = name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(
        self, prompts: Sequence[tuple[str, str]], pooling: str, batch: int
    ) -> np.ndarray:
        if pooling != "model_default":
            raise ValueError(
                "this wrapper delegates pooling to the model; only "
                "model_default is supported"
            )
        if batch < 1:
            raise ValueError(f"batch must be positive, got {batch}")
        texts = [
            instruction + "\n" + text if instruction else text
            for instruction, text in prompts
        ]
        try:
            vectors = self._model.encode(
                texts, batch_size=batch, convert_to_numpy=True,
                normalize_embeddings=False,
            )
        except MemoryError as exc:
            raise OutOfMemory(batch) from exc
        return np.asarray(vectors, dtype=np.float32)


def resolve_backend(model_id: str):
    """Instantiate the backend a model id names."""
    if model_id.startswith("hash://"):
        tail = model_id[len("hash://") :]
        try:
            dim = int(tail)
        except ValueError as exc:
            raise ModelLoadFailure(model_id, f"bad dimension {tail!r}") from exc
        if dim < 1:
            raise ModelLoadFailure(model_id, "dimension must be positive")
        return HashBackend(dim)
    if model_id.startswith("st://"):
        return SentenceTransformerBackend(model_id[len("st://") :])
    raise ModelLoadFailure(
        model_id, "unknown scheme; expected hash://<dim> or st://<model-name>"
    )
