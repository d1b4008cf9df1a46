"""Condition-aware vector composition for sentence pairs.

Four settings, chosen by (base, subtract_condition):

* ``cond``        — the condition encoded given each sentence.
* ``cond - c``    — the same minus the unconditionally-encoded condition,
                    i.e. the offset the condition picks up from the sentence.
* ``sent``        — each sentence encoded given the condition.
* ``sent - c``    — the sentence encoding minus the unconditional condition.

All arithmetic stays in float32 so the no-subtraction path reproduces stored
rows bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import embstore
from .dataset import CstsRecord, normalize_rating
from .embstore import EmbeddingStore, RowKey
from .errors import LengthMismatch, MissingRows, ZeroVector
from .metrics import cosine


@dataclass(frozen=True)
class CompositionVariant:
    """Which stored rows form the pair, and whether to subtract the condition."""

    base: str  # "cond" | "sent"
    subtract_condition: bool = False

    def __post_init__(self) -> None:
        if self.base not in ("cond", "sent"):
            raise ValueError(f"base must be 'cond' or 'sent', got {self.base!r}")

    @property
    def name(self) -> str:
        return self.base + ("-c" if self.subtract_condition else "")

    @staticmethod
    def parse(name: str) -> "CompositionVariant":
        base, _, tail = name.partition("-")
        if tail not in ("", "c"):
            raise ValueError(f"unknown variant {name!r}")
        return CompositionVariant(base=base, subtract_condition=tail == "c")


@dataclass
class ComposedPair:
    """A record's two composed vectors and its normalized rating."""

    record_id: str
    e1: np.ndarray
    e2: np.ndarray
    rating: float
    variant: CompositionVariant


def _required_keys(record: CstsRecord, variant: CompositionVariant) -> list[RowKey]:
    chash = embstore.condition_hash(record.condition)
    if variant.base == "cond":
        roles = ("cond_given_s1", "cond_given_s2")
    else:
        roles = ("sent1_given_c", "sent2_given_c")
    keys = [RowKey(record.id, role, chash) for role in roles]
    if variant.subtract_condition:
        keys.append(RowKey("", "cond_unconditional", chash))
    return keys


def compose_record(
    record: CstsRecord, store: EmbeddingStore, variant: CompositionVariant
) -> ComposedPair:
    """Build one pair: base rows, minus the unconditional row when requested."""
    keys = _required_keys(record, variant)
    rows = [embstore.lookup(store, key) for key in keys]
    e1, e2 = rows[0], rows[1]
    if variant.subtract_condition:
        e1 = e1 - rows[2]
        e2 = e2 - rows[2]
    return ComposedPair(
        record_id=record.id,
        e1=e1,
        e2=e2,
        rating=normalize_rating(record.rating),
        variant=variant,
    )


def compose_dataset(
    records: Sequence[CstsRecord], store: EmbeddingStore, variant: CompositionVariant
) -> list[ComposedPair]:
    """Order-preserving map of compose_record; atomic on missing rows.

    All records are checked before any pair is built, so a failure reports
    the complete set of absent keys instead of the first one hit.
    """
    missing: list[RowKey] = []
    for record in records:
        for key in _required_keys(record, variant):
            if not store.has(key):
                missing.append(key)
    if missing:
        raise MissingRows(missing)
    return [compose_record(record, store, variant) for record in records]


def unsupervised_score(pair: ComposedPair) -> float:
    """Raw cosine between the two composed vectors (zero-shot scoring)."""
    try:
        return cosine(pair.e1, pair.e2)
    except ZeroVector as exc:
        raise ZeroVector(f"record {pair.record_id}: {exc.which}") from exc


def write_pairs(pairs: Sequence[ComposedPair], prefix: str | Path) -> None:
    """Persist pairs as two vector files plus a ratings/variant sidecar.

    Layout: ``<prefix>.e1.cemb`` and ``<prefix>.e2.cemb`` hold the vectors
    (manifest roles reuse the base roles of the variant), and
    ``<prefix>.pairs.json`` carries record ids, normalized ratings, and the
    variant so evaluation can run without the original dataset.
    """
    prefix = str(prefix)
    if not pairs:
        raise ValueError("cannot write an empty pair list")
    variant = pairs[0].variant
    dim = int(np.asarray(pairs[0].e1).shape[0])
    role1, role2 = (
        ("cond_given_s1", "cond_given_s2")
        if variant.base == "cond"
        else ("sent1_given_c", "sent2_given_c")
    )
    rows1 = []
    rows2 = []
    for pair in pairs:
        # composed rows no longer correspond to a stored condition text;
        # hash the record id instead so row keys stay unique
        chash = embstore.condition_hash(pair.record_id)
        rows1.append((RowKey(pair.record_id, role1, chash), pair.e1, ""))
        rows2.append((RowKey(pair.record_id, role2, chash), pair.e2, ""))
    embstore.write_store(embstore.build_store(dim, rows1), prefix + ".e1.cemb")
    embstore.write_store(embstore.build_store(dim, rows2), prefix + ".e2.cemb")
    meta = {
        "variant": {"base": variant.base, "subtract_condition": variant.subtract_condition},
        "records": [
            {"record_id": pair.record_id, "rating": pair.rating} for pair in pairs
        ],
    }
    Path(prefix + ".pairs.json").write_text(
        json.dumps(meta, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )


def read_pairs(prefix: str | Path) -> list[ComposedPair]:
    """Load pairs written by write_pairs."""
    prefix = str(prefix)
    store1 = embstore.read_store(prefix + ".e1.cemb")
    store2 = embstore.read_store(prefix + ".e2.cemb")
    meta = json.loads(Path(prefix + ".pairs.json").read_text(encoding="utf-8"))
    variant = CompositionVariant(
        base=meta["variant"]["base"],
        subtract_condition=meta["variant"]["subtract_condition"],
    )
    if store1.count != len(meta["records"]) or store2.count != store1.count:
        raise LengthMismatch("pair stores and sidecar disagree on record count")
    pairs = []
    for i, entry in enumerate(meta["records"]):
        pairs.append(
            ComposedPair(
                record_id=entry["record_id"],
                e1=store1.data[i],
                e2=store2.data[i],
                rating=float(entry["rating"]),
                variant=variant,
            )
        )
    return pairs
