"""Conditional-similarity dataset loading, validation, and splitting.

A record pairs two sentences with a condition phrase and a human rating in
[1, 5]. The JSONL ingest format is one object per line with keys
``sentence1``, ``sentence2``, ``condition``, ``label`` (numeric) and an
optional string ``id``; a missing id becomes the zero-based line index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import _rng
from .errors import (
    DuplicateId,
    EmptyDataset,
    MalformedLine,
    RatingOutOfRange,
)

_REQUIRED_KEYS = ("sentence1", "sentence2", "condition", "label")


@dataclass(frozen=True)
class CstsRecord:
    """One labeled instance: a sentence pair, a condition, and a rating."""

    id: str
    sentence1: str
    sentence2: str
    condition: str
    rating: float


@dataclass
class DatasetSplit:
    """Disjoint record subsets produced by a seeded shuffle."""

    train: list[CstsRecord] = field(default_factory=list)
    validation: list[CstsRecord] = field(default_factory=list)
    test: list[CstsRecord] = field(default_factory=list)
    seed: int = 0


def load_dataset(path: str | Path, format: str = "jsonl") -> list[CstsRecord]:
    """Read and validate records from ``path``, preserving file order.

    Text fields are kept verbatim (validation only checks that they are
    non-empty after trimming), so a load/write cycle round-trips them.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    records: list[CstsRecord] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            lineno = index + 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise MalformedLine(lineno, "line is not a JSON object")
            for key in _REQUIRED_KEYS:
                if key not in obj:
                    raise MalformedLine(lineno, f"missing key {key!r}")
            label = obj["label"]
            if isinstance(label, bool) or not isinstance(label, (int, float)):
                raise MalformedLine(lineno, "label must be numeric")
            record_id = obj.get("id", str(index))
            if not isinstance(record_id, str):
                raise MalformedLine(lineno, "id must be a string")
            texts = {}
            for key in ("sentence1", "sentence2", "condition"):
                value = obj[key]
                if not isinstance(value, str) or not value.strip():
                    raise MalformedLine(lineno, f"{key} must be non-empty text")
                texts[key] = value
            rating = float(label)
            if not 1.0 <= rating <= 5.0 or math.isnan(rating):
                raise RatingOutOfRange(record_id, rating)
            if record_id in seen_ids:
                raise DuplicateId(record_id)
            seen_ids.add(record_id)
            records.append(CstsRecord(id=record_id, rating=rating, **texts))
    return records


def write_dataset(records: Iterable[CstsRecord], path: str | Path) -> None:
    """Serialize records back to the JSONL ingest format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            label = int(rec.rating) if rec.rating == int(rec.rating) else rec.rating
            obj = {
                "id": rec.id,
                "sentence1": rec.sentence1,
                "sentence2": rec.sentence2,
                "condition": rec.condition,
                "label": label,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def split_dataset(records: Sequence[CstsRecord], ratio: float, seed: int) -> DatasetSplit:
    """Shuffle deterministically and cut validation/test at ceil(ratio * n).

    Ceiling convention: a 2834-record input at ratio 0.7 yields 1984
    validation and 850 test rows. Identical (records, ratio, seed) inputs
    always produce identical splits.
    """
    if not records:
        raise EmptyDataset()
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(records)
    perm = _rng.philox(seed, _rng.LANE_SPLIT).permutation(n)
    n_validation = math.ceil(ratio * n)
    shuffled = [records[i] for i in perm]
    return DatasetSplit(
        validation=shuffled[:n_validation],
        test=shuffled[n_validation:],
        seed=seed,
    )


def split_three_way(
    items: Sequence, train_frac: float, val_ratio: float, seed: int
) -> tuple[list, list, list]:
    """One seeded shuffle cut into train / validation / test.

    The first ceil(train_frac * n) shuffled items form the training set; the
    remainder is cut at ceil(val_ratio * rest) into validation and test,
    mirroring the two-way convention of split_dataset. Works on any indexable
    sequence (records or composed pairs).
    """
    if not items:
        raise EmptyDataset()
    if not 0.0 < train_frac < 1.0 or not 0.0 < val_ratio < 1.0:
        raise ValueError("train_frac and val_ratio must be in (0, 1)")
    n = len(items)
    perm = _rng.philox(seed, _rng.LANE_SPLIT).permutation(n)
    shuffled = [items[i] for i in perm]
    n_train = math.ceil(train_frac * n)
    rest = shuffled[n_train:]
    n_val = math.ceil(val_ratio * len(rest))
    return shuffled[:n_train], rest[:n_val], rest[n_val:]


def normalize_rating(rating: float) -> float:
    """Map a [1, 5] rating linearly onto [0, 1]."""
    if not 1.0 <= rating <= 5.0 or math.isnan(rating):
        raise RatingOutOfRange("<direct>", rating)
    return (rating - 1.0) / 4.0
