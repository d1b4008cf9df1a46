"""Composition variants, subtraction arithmetic, and pair-file round-trips."""

import numpy as np
import pytest

from condemb.compose import (
    ComposedPair,
    CompositionVariant,
    compose_dataset,
    compose_record,
    read_pairs,
    unsupervised_score,
    write_pairs,
)
from condemb.dataset import CstsRecord
from condemb.embstore import RowKey, build_store, condition_hash
from condemb.errors import MissingRows, ZeroVector


def _record(rid="r0", condition="the condition", rating=3.0):
    return CstsRecord(
        id=rid, sentence1="s one", sentence2="s two", condition=condition, rating=rating
    )


def _store_for(record, e1, e2, uncond=None, base="cond"):
    chash = condition_hash(record.condition)
    roles = ("cond_given_s1", "cond_given_s2") if base == "cond" else ("sent1_given_c", "sent2_given_c")
    rows = [
        (RowKey(record.id, roles[0], chash), np.asarray(e1, dtype=np.float64), record.condition),
        (RowKey(record.id, roles[1], chash), np.asarray(e2, dtype=np.float64), record.condition),
    ]
    if uncond is not None:
        rows.append(
            (RowKey("", "cond_unconditional", chash), np.asarray(uncond, dtype=np.float64), record.condition)
        )
    return build_store(len(e1), rows)


def test_variant_names():
    assert CompositionVariant("cond", True).name == "cond-c"
    assert CompositionVariant("sent", False).name == "sent"
    assert CompositionVariant.parse("cond-c") == CompositionVariant("cond", True)
    with pytest.raises(ValueError):
        CompositionVariant("both", False)


def test_no_subtraction_returns_rows_bit_exactly():
    record = _record()
    store = _store_for(record, [1.5, -2.25, 3.0], [0.5, 0.5, 0.5])
    pair = compose_record(record, store, CompositionVariant("cond", False))
    assert np.array_equal(pair.e1, store.data[0])
    assert np.array_equal(pair.e2, store.data[1])
    assert pair.rating == 0.5  # rating 3 normalized


def test_componentwise_subtraction():
    record = _record()
    store = _store_for(record, [1.0, 2.0, 3.0], [2.0, 2.0, 2.0], uncond=[0.5, 0.5, 0.5])
    pair = compose_record(record, store, CompositionVariant("cond", True))
    assert np.allclose(pair.e1, [0.5, 1.5, 2.5])
    assert np.allclose(pair.e2, [1.5, 1.5, 1.5])


def test_self_subtraction_gives_zero_vector():
    record = _record()
    v = [0.25, -1.0, 4.0]
    store = _store_for(record, v, [1.0, 1.0, 1.0], uncond=v)
    pair = compose_record(record, store, CompositionVariant("cond", True))
    assert np.all(pair.e1 == 0.0)
    # composition allows the zero vector; scoring rejects it
    with pytest.raises(ZeroVector):
        unsupervised_score(pair)


def test_sent_base_uses_sentence_rows():
    record = _record()
    store = _store_for(record, [1.0, 0.0], [0.0, 1.0], base="sent")
    pair = compose_record(record, store, CompositionVariant("sent", False))
    assert np.array_equal(pair.e1, store.data[0])


def test_unsupervised_score_values():
    variant = CompositionVariant("cond", False)
    p = ComposedPair("x", np.array([1.0, 0.0]), np.array([1.0, 1.0]), 0.5, variant)
    assert abs(unsupervised_score(p) - 0.70710678) < 1e-8
    same = ComposedPair("y", np.array([2.0, 1.0]), np.array([2.0, 1.0]), 0.5, variant)
    assert abs(unsupervised_score(same) - 1.0) < 1e-12
    orth = ComposedPair("z", np.array([1.0, 0.0]), np.array([0.0, 3.0]), 0.5, variant)
    assert unsupervised_score(orth) == 0.0


def test_compose_dataset_atomic_on_missing_rows():
    r1, r2 = _record("a"), _record("b")
    store = _store_for(r1, [1.0, 2.0], [3.0, 4.0])  # no rows for r2, no uncond
    with pytest.raises(MissingRows) as exc:
        compose_dataset([r1, r2], store, CompositionVariant("cond", True))
    # every absent key is listed: r1's uncond + r2's three keys
    assert len(exc.value.keys) == 4


def test_compose_dataset_preserves_order_and_commutes_with_permutation():
    rng = np.random.default_rng(9)
    records = [_record(f"r{i}", condition=f"cond {i % 3}", rating=1 + (i % 5)) for i in range(12)]
    rows = []
    for rec in records:
        chash = condition_hash(rec.condition)
        rows.append((RowKey(rec.id, "cond_given_s1", chash), rng.normal(size=4), rec.condition))
        rows.append((RowKey(rec.id, "cond_given_s2", chash), rng.normal(size=4), rec.condition))
    for j in range(3):
        condition = f"cond {j}"
        rows.append(
            (RowKey("", "cond_unconditional", condition_hash(condition)), rng.normal(size=4), condition)
        )
    store = build_store(4, rows)
    variant = CompositionVariant("cond", True)
    pairs = compose_dataset(records, store, variant)
    assert [p.record_id for p in pairs] == [r.id for r in records]
    perm = list(np.random.default_rng(1).permutation(len(records)))
    permuted = compose_dataset([records[i] for i in perm], store, variant)
    for slot, i in enumerate(perm):
        assert np.array_equal(permuted[slot].e1, pairs[i].e1)
        assert np.array_equal(permuted[slot].e2, pairs[i].e2)


def test_write_read_pairs_round_trip(tmp_path):
    rng = np.random.default_rng(21)
    variant = CompositionVariant("cond", True)
    pairs = [
        ComposedPair(str(i), rng.normal(size=5).astype(np.float32),
                     rng.normal(size=5).astype(np.float32), float(rng.uniform()), variant)
        for i in range(8)
    ]
    prefix = tmp_path / "pairs"
    write_pairs(pairs, prefix)
    loaded = read_pairs(prefix)
    assert len(loaded) == len(pairs)
    for got, want in zip(loaded, pairs):
        assert got.record_id == want.record_id
        assert got.variant == variant
        assert got.rating == want.rating
        assert np.array_equal(got.e1, want.e1)
        assert np.array_equal(got.e2, want.e2)
