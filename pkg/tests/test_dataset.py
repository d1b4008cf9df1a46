"""Dataset loading, validation, splitting, and rating normalization."""

import json
import math

import pytest

from condemb.dataset import (
    CstsRecord,
    load_dataset,
    normalize_rating,
    split_dataset,
    split_three_way,
    write_dataset,
)
from condemb.errors import (
    DuplicateId,
    EmptyDataset,
    MalformedLine,
    RatingOutOfRange,
)


def _write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _line(s1="a", s2="b", c="c", label=3, **extra):
    obj = {"sentence1": s1, "sentence2": s2, "condition": c, "label": label}
    obj.update(extra)
    return json.dumps(obj)


def test_minimal_line_maps_fields(tmp_path):
    path = tmp_path / "data.jsonl"
    _write_lines(path, [_line()])
    records = load_dataset(path)
    assert len(records) == 1
    rec = records[0]
    assert rec == CstsRecord(id="0", sentence1="a", sentence2="b", condition="c", rating=3.0)


def test_missing_id_becomes_line_index(tmp_path):
    path = tmp_path / "data.jsonl"
    _write_lines(path, [_line(), _line(s1="x"), _line(s1="y", id="named")])
    records = load_dataset(path)
    assert [r.id for r in records] == ["0", "1", "named"]


def test_rating_out_of_range(tmp_path):
    path = tmp_path / "data.jsonl"
    _write_lines(path, [_line(label=5.5)])
    with pytest.raises(RatingOutOfRange):
        load_dataset(path)
    _write_lines(path, [_line(label=0.5)])
    with pytest.raises(RatingOutOfRange):
        load_dataset(path)


@pytest.mark.parametrize(
    "bad",
    [
        "not json at all",
        json.dumps(["a", "list"]),
        json.dumps({"sentence1": "a", "sentence2": "b", "condition": "c"}),  # no label
        _line(label="3"),  # string label
        _line(label=True),  # bool label is not a rating
        _line(s1="   "),  # blank after trim
        _line(c=""),
        _line(id=7),  # non-string id
    ],
)
def test_malformed_lines(tmp_path, bad):
    path = tmp_path / "data.jsonl"
    _write_lines(path, [bad])
    with pytest.raises(MalformedLine):
        load_dataset(path)


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "data.jsonl"
    _write_lines(path, [_line(), _line(), "oops"])
    with pytest.raises(MalformedLine) as exc:
        load_dataset(path)
    assert exc.value.line_number == 3


def test_duplicate_id_rejected(tmp_path):
    path = tmp_path / "data.jsonl"
    _write_lines(path, [_line(id="x"), _line(s1="other", id="x")])
    with pytest.raises(DuplicateId):
        load_dataset(path)


def test_round_trip_preserves_fields(tmp_path):
    path = tmp_path / "data.jsonl"
    _write_lines(
        path,
        [
            _line(s1="The cat  sat", s2="on the mat", c="animal count", label=4),
            _line(s1="x", s2="y", c="z", label=2.5, id="r2"),
        ],
    )
    records = load_dataset(path)
    out = tmp_path / "copy.jsonl"
    write_dataset(records, out)
    assert load_dataset(out) == records
    # ASCII round-trip is byte-stable once in canonical form
    out2 = tmp_path / "copy2.jsonl"
    write_dataset(load_dataset(out), out2)
    assert out.read_bytes() == out2.read_bytes()


def _fake_records(n):
    return [
        CstsRecord(id=str(i), sentence1=f"s{i}", sentence2=f"t{i}", condition="c", rating=3.0)
        for i in range(n)
    ]


def test_split_counts_use_ceiling():
    # 0.7 * 2834 = 1983.8, ceiling 1984
    split = split_dataset(_fake_records(2834), ratio=0.7, seed=42)
    assert len(split.validation) == 1984
    assert len(split.test) == 850


def test_split_is_deterministic_and_disjoint():
    records = _fake_records(10)
    a = split_dataset(records, ratio=0.5, seed=7)
    b = split_dataset(records, ratio=0.5, seed=7)
    assert [r.id for r in a.validation] == [r.id for r in b.validation]
    assert [r.id for r in a.test] == [r.id for r in b.test]
    ids = {r.id for r in a.validation} | {r.id for r in a.test}
    assert len(ids) == 10
    c = split_dataset(records, ratio=0.5, seed=8)
    assert [r.id for r in a.validation] != [r.id for r in c.validation]


def test_split_singleton_goes_to_validation():
    split = split_dataset(_fake_records(1), ratio=0.7, seed=0)
    assert len(split.validation) == 1
    assert len(split.test) == 0


def test_split_empty_raises():
    with pytest.raises(EmptyDataset):
        split_dataset([], ratio=0.5, seed=0)


def test_split_three_way_partitions():
    records = _fake_records(100)
    train, val, test = split_three_way(records, train_frac=0.7, val_ratio=0.7, seed=3)
    assert len(train) == 70
    assert len(val) == math.ceil(0.7 * 30)
    assert len(test) == 100 - 70 - math.ceil(0.7 * 30)
    ids = [r.id for r in train + val + test]
    assert len(set(ids)) == 100


def test_normalize_rating_endpoints_and_midpoint():
    assert normalize_rating(1.0) == 0.0
    assert normalize_rating(5.0) == 1.0
    assert normalize_rating(3.0) == 0.5


def test_normalize_rating_monotone():
    ratings = [1.0, 1.5, 2.0, 3.7, 4.2, 5.0]
    normalized = [normalize_rating(r) for r in ratings]
    assert normalized == sorted(normalized)
    with pytest.raises(RatingOutOfRange):
        normalize_rating(5.01)
