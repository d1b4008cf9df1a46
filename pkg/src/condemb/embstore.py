"""Binary embedding store with a manifest binding rows to records and roles.

File layout: magic ``CEMB`` (4 bytes) | version u32 = 1 | count u64 | dim u32,
all little-endian, followed by ``count * dim`` float32 little-endian values in
row-major order. A sidecar at ``<path>.manifest.json`` holds a JSON array of
``{record_id, role, condition, condition_hash}`` objects in row order; the
condition text rides along so hash collisions stay detectable.

Rows are keyed by (record_id, role, condition_hash). Unconditional condition
rows carry an empty record_id and are shared across every record with the
same condition text.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import fnv1a64
from .errors import (
    BadMagic,
    DimMismatch,
    DuplicateId,
    IoFailure,
    MissingRow,
    NonFiniteVector,
)

MAGIC = b"CEMB"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version, count, dim

ROLES = (
    "cond_given_s1",
    "cond_given_s2",
    "sent1_given_c",
    "sent2_given_c",
    "cond_unconditional",
)


def condition_hash(condition: str) -> int:
    """64-bit FNV-1a over the condition text after trimming outer whitespace."""
    return fnv1a64(condition.strip())


def pack_matrix(matrix: np.ndarray) -> bytes:
    """Serialize a 2-D array as a headered float32 blob (no manifest)."""
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2:
        raise ValueError("pack_matrix expects a 2-D array")
    return _HEADER.pack(MAGIC, VERSION, mat.shape[0], mat.shape[1]) + mat.tobytes()


def unpack_matrix(buffer: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Inverse of pack_matrix; returns (matrix, offset past the blob)."""
    if len(buffer) - offset < _HEADER.size:
        raise BadMagic("<buffer>", "blob shorter than header")
    magic, version, count, dim = _HEADER.unpack_from(buffer, offset)
    if magic != MAGIC:
        raise BadMagic("<buffer>", f"magic {magic!r} != {MAGIC!r}")
    if version != VERSION:
        raise BadMagic("<buffer>", f"unsupported version {version}")
    start = offset + _HEADER.size
    end = start + count * dim * 4
    if len(buffer) < end:
        raise BadMagic("<buffer>", "blob truncated")
    mat = np.frombuffer(buffer, dtype="<f4", count=count * dim, offset=start)
    return mat.reshape(count, dim).copy(), end


@dataclass(frozen=True)
class RowKey:
    """Identity of one store row.

    ``record_id`` is empty exactly when ``role`` is ``cond_unconditional``:
    such rows belong to a condition string, not to a record.
    """

    record_id: str
    role: str
    condition_hash: int

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == "cond_unconditional":
            if self.record_id:
                raise ValueError("cond_unconditional rows must have empty record_id")
        elif not self.record_id:
            raise ValueError(f"role {self.role} requires a record_id")


@dataclass
class EmbeddingStore:
    """Dimension-tagged float32 matrix plus per-row key metadata."""

    dim: int
    data: np.ndarray = None  # type: ignore[assignment]
    manifest: list[RowKey] = field(default_factory=list)
    conditions: list[str] = field(default_factory=list)  # row-aligned text
    _index: dict[RowKey, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.data is None:
            self.data = np.empty((0, self.dim), dtype=np.float32)
        for i, key in enumerate(self.manifest):
            self._index[key] = i

    @property
    def count(self) -> int:
        return int(self.data.shape[0])

    def add_row(self, key: RowKey, vector: np.ndarray, condition: str = "") -> None:
        """Append one row; duplicate keys are rejected."""
        vec = np.asarray(vector, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.dim:
            raise DimMismatch(f"vector has dim {vec.shape[0]}, store expects {self.dim}")
        if not np.all(np.isfinite(vec)):
            raise NonFiniteVector(self.count)
        if key in self._index:
            raise DuplicateId(f"{key.record_id}/{key.role}/{key.condition_hash:016x}")
        self._index[key] = self.count
        self.manifest.append(key)
        self.conditions.append(condition)
        self.data = np.vstack([self.data, vec[None, :]])

    def has(self, key: RowKey) -> bool:
        return key in self._index

    def row_index(self, key: RowKey) -> int:
        if key not in self._index:
            raise MissingRow(key)
        return self._index[key]


def build_store(dim: int, rows: list[tuple[RowKey, np.ndarray, str]]) -> EmbeddingStore:
    """Assemble a store in one shot from (key, vector, condition) triples."""
    keys = [key for key, _, _ in rows]
    if len(set(keys)) != len(keys):
        raise DuplicateId("duplicate row key in store input")
    if rows:
        data = np.stack([np.asarray(v, dtype=np.float32).reshape(-1) for _, v, _ in rows])
    else:
        data = np.empty((0, dim), dtype=np.float32)
    if data.shape[1] != dim:
        raise DimMismatch(f"vectors have dim {data.shape[1]}, expected {dim}")
    bad = np.where(~np.all(np.isfinite(data), axis=1))[0]
    if bad.size:
        raise NonFiniteVector(int(bad[0]))
    return EmbeddingStore(
        dim=dim,
        data=data,
        manifest=list(keys),
        conditions=[cond for _, _, cond in rows],
    )


def write_store(store: EmbeddingStore, path: str | Path) -> None:
    """Persist the matrix and its sidecar manifest. Round-trip is bit-exact."""
    if not np.all(np.isfinite(store.data)):
        bad = np.where(~np.all(np.isfinite(store.data), axis=1))[0]
        raise NonFiniteVector(int(bad[0]))
    path = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, store.count, store.dim)
    payload = np.ascontiguousarray(store.data, dtype="<f4").tobytes()
    manifest = [
        {
            "record_id": key.record_id,
            "role": key.role,
            "condition": store.conditions[i] if i < len(store.conditions) else "",
            "condition_hash": f"{key.condition_hash:016x}",
        }
        for i, key in enumerate(store.manifest)
    ]
    try:
        with path.open("wb") as fh:
            fh.write(header)
            fh.write(payload)
        with Path(str(path) + ".manifest.json").open("w", encoding="utf-8") as fh:
            json.dump(manifest, fh, ensure_ascii=False, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write store to {path}: {exc}") from exc


def read_store(path: str | Path) -> EmbeddingStore:
    """Load a store and validate header, manifest agreement, and finiteness."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read store from {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise BadMagic(str(path), "file shorter than header")
    magic, version, count, dim = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(str(path), f"magic {magic!r} != {MAGIC!r}")
    if version != VERSION:
        raise BadMagic(str(path), f"unsupported version {version}")
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise BadMagic(str(path), f"payload is {len(raw)} bytes, header implies {expected}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim).copy()

    manifest_path = Path(str(path) + ".manifest.json")
    try:
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadMagic(str(manifest_path), f"manifest is not valid JSON: {exc.msg}") from exc
    if len(entries) != count:
        raise DimMismatch(
            f"manifest has {len(entries)} entries, header count is {count}"
        )
    keys: list[RowKey] = []
    conditions: list[str] = []
    for i, entry in enumerate(entries):
        try:
            key = RowKey(
                record_id=entry["record_id"],
                role=entry["role"],
                condition_hash=int(entry["condition_hash"], 16),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BadMagic(str(manifest_path), f"manifest row {i} malformed: {exc}") from exc
        keys.append(key)
        conditions.append(entry.get("condition", ""))
    if len(set(keys)) != len(keys):
        raise DuplicateId("duplicate row key in manifest")
    nonfinite = np.where(~np.all(np.isfinite(data), axis=1))[0]
    if nonfinite.size:
        raise NonFiniteVector(int(nonfinite[0]))
    return EmbeddingStore(dim=dim, data=data, manifest=keys, conditions=conditions)


def lookup(store: EmbeddingStore, key: RowKey) -> np.ndarray:
    """Fetch the row for ``key``; unconditional rows resolve by condition hash."""
    return store.data[store.row_index(key)]
