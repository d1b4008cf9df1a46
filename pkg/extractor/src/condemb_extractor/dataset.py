"""Minimal JSONL reader for the sentence-pair-with-condition format.

Kept independent of the main toolkit on purpose: the two packages share
file formats, not code. Record ids follow the same convention (an absent
id becomes the zero-based line index as a string) so that dumped rows key
correctly when the main toolkit composes them against the same file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateId, IoFailure, MalformedLine

_TEXT_KEYS = ("sentence1", "sentence2", "condition")


@dataclass(frozen=True)
class Record:
    """The fields extraction needs; the rating is not one of them."""

    id: str
    sentence1: str
    sentence2: str
    condition: str


def read_records(path: str | Path) -> list[Record]:
    """Load records in file order, validating texts and id uniqueness."""
    path = Path(path)
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read dataset {path}: {exc}") from exc
    records: list[Record] = []
    seen: set[str] = set()
    with fh:
        for index, line in enumerate(fh):
            lineno = index + 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise MalformedLine(lineno, "line is not a JSON object")
            for key in _TEXT_KEYS:
                value = obj.get(key)
                if not isinstance(value, str) or not value.strip():
                    raise MalformedLine(lineno, f"{key} must be non-empty text")
            record_id = obj.get("id", str(index))
            if not isinstance(record_id, str):
                raise MalformedLine(lineno, "id must be a string")
            if record_id in seen:
                raise DuplicateId(record_id)
            seen.add(record_id)
            records.append(
                Record(
                    id=record_id,
                    sentence1=obj["sentence1"],
                    sentence2=obj["sentence2"],
                    condition=obj["condition"],
                )
            )
    return records
