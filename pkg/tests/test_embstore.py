"""Binary vector store: header layout, round-trips, dedup lookups."""

import json
import struct

import numpy as np
import pytest

from condemb.embstore import (
    EmbeddingStore,
    RowKey,
    build_store,
    condition_hash,
    lookup,
    pack_matrix,
    read_store,
    unpack_matrix,
    write_store,
)
from condemb.errors import (
    BadMagic,
    DimMismatch,
    DuplicateId,
    MissingRow,
    NonFiniteVector,
)


def _key(record_id, role, condition="the condition"):
    return RowKey(record_id, role, condition_hash(condition))


def _toy_store(dim=3):
    rng = np.random.default_rng(11)
    rows = [
        (_key("r1", "cond_given_s1"), rng.normal(size=dim), "the condition"),
        (_key("r1", "cond_given_s2"), rng.normal(size=dim), "the condition"),
        (_key("", "cond_unconditional"), rng.normal(size=dim), "the condition"),
    ]
    return build_store(dim, rows)


def test_round_trip_is_bit_exact(tmp_path):
    store = _toy_store()
    path = tmp_path / "vectors.cemb"
    write_store(store, path)
    loaded = read_store(path)
    assert loaded.dim == store.dim
    assert loaded.manifest == store.manifest
    assert loaded.data.dtype == np.float32
    assert np.array_equal(loaded.data, store.data)
    # a second write of the loaded store produces identical bytes
    path2 = tmp_path / "vectors2.cemb"
    write_store(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_empty_store_is_just_a_header(tmp_path):
    store = EmbeddingStore(dim=4096)
    path = tmp_path / "empty.cemb"
    write_store(store, path)
    assert path.stat().st_size == 20
    magic, version, count, dim = struct.unpack("<4sIQI", path.read_bytes())
    assert magic == b"CEMB"
    assert version == 1
    assert count == 0
    assert dim == 4096
    loaded = read_store(path)
    assert loaded.count == 0 and loaded.dim == 4096


def test_nan_vector_rejected_before_write(tmp_path):
    store = _toy_store()
    store.data[1, 0] = np.nan
    with pytest.raises(NonFiniteVector) as exc:
        write_store(store, tmp_path / "bad.cemb")
    assert exc.value.row == 1


def test_bad_magic_and_truncation(tmp_path):
    path = tmp_path / "x.cemb"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagic):
        read_store(path)
    store = _toy_store()
    good = tmp_path / "good.cemb"
    write_store(store, good)
    good.write_bytes(good.read_bytes()[:-4])  # chop one float
    with pytest.raises(BadMagic):
        read_store(good)


def test_manifest_count_disagreement(tmp_path):
    store = _toy_store()
    path = tmp_path / "v.cemb"
    write_store(store, path)
    manifest_path = str(path) + ".manifest.json"
    entries = json.loads(open(manifest_path).read())
    open(manifest_path, "w").write(json.dumps(entries[:-1]))
    with pytest.raises(DimMismatch):
        read_store(path)


def test_lookup_and_dedup():
    dim = 4
    shared = "same condition"
    vec_uncond = np.arange(dim, dtype=np.float32)
    rows = [
        (_key("a", "cond_given_s1", shared), np.ones(dim), shared),
        (_key("a", "cond_given_s2", shared), 2 * np.ones(dim), shared),
        (_key("b", "cond_given_s1", shared), 3 * np.ones(dim), shared),
        (_key("b", "cond_given_s2", shared), 4 * np.ones(dim), shared),
        (_key("", "cond_unconditional", shared), vec_uncond, shared),
    ]
    store = build_store(dim, rows)
    # both records resolve the same unconditional row by condition hash
    got_for_a = lookup(store, RowKey("", "cond_unconditional", condition_hash(shared)))
    assert np.array_equal(got_for_a, vec_uncond.astype(np.float32))
    uncond_rows = [k for k in store.manifest if k.role == "cond_unconditional"]
    assert len(uncond_rows) == 1
    with pytest.raises(MissingRow):
        lookup(store, _key("zzz", "cond_given_s1", shared))


def test_condition_hash_trims_whitespace():
    assert condition_hash("  number of people ") == condition_hash("number of people")
    assert condition_hash("a") != condition_hash("b")


def test_row_key_invariants():
    with pytest.raises(ValueError):
        RowKey("r1", "cond_unconditional", 1)
    with pytest.raises(ValueError):
        RowKey("", "cond_given_s1", 1)
    with pytest.raises(ValueError):
        RowKey("r1", "not_a_role", 1)


def test_duplicate_key_rejected():
    dim = 2
    rows = [
        (_key("a", "cond_given_s1"), np.ones(dim), "the condition"),
        (_key("a", "cond_given_s1"), np.zeros(dim), "the condition"),
    ]
    with pytest.raises(DuplicateId):
        build_store(dim, rows)


def test_dim_mismatch_on_build():
    with pytest.raises(DimMismatch):
        build_store(3, [(_key("a", "cond_given_s1"), np.ones(5), "the condition")])


def test_pack_unpack_matrix_round_trip():
    mat = np.random.default_rng(0).normal(size=(5, 7)).astype(np.float32)
    blob = pack_matrix(mat)
    out, end = unpack_matrix(blob)
    assert end == len(blob)
    assert np.array_equal(out, mat)
    # two blobs back to back unpack sequentially
    double = blob + pack_matrix(2 * mat)
    first, offset = unpack_matrix(double)
    second, end2 = unpack_matrix(double, offset)
    assert np.array_equal(second, 2 * mat)
    assert end2 == len(double)
