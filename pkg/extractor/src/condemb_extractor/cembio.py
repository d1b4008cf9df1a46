"""Writer for the CEMB dump format the main toolkit reads.

Layout: magic ``CEMB`` | u32 version = 1 | u64 count | u32 dim, all
little-endian, then count*dim float32 little-endian values row-major.
A sidecar ``<path>.manifest.json`` holds a JSON array of
``{record_id, role, condition, condition_hash}`` objects in row order,
with the hash as 16 lowercase hex digits of 64-bit FNV-1a over the
trimmed condition text.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import IoFailure, NonFiniteVector

MAGIC = b"CEMB"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")

_MASK64 = (1 << 64) - 1


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def condition_digest(condition: str) -> str:
    """Manifest form of the condition hash: trim, hash, 16-hex."""
    return f"{fnv1a64(condition.strip()):016x}"


def write_store_files(
    path: str | Path,
    dim: int,
    rows: Sequence[tuple[str, str, str, np.ndarray]],
) -> None:
    """Write the binary store and its manifest from (record_id, role,
    condition, vector) tuples; vectors are cast to float32."""
    path = Path(path)
    if rows:
        data = np.ascontiguousarray(
            np.stack([np.asarray(v).reshape(-1) for _, _, _, v in rows]), dtype="<f4"
        )
        if data.shape[1] != dim:
            raise ValueError(f"vectors have dim {data.shape[1]}, expected {dim}")
    else:
        data = np.empty((0, dim), dtype="<f4")
    bad = np.where(~np.all(np.isfinite(data), axis=1))[0]
    if bad.size:
        raise NonFiniteVector(int(bad[0]))
    manifest = [
        {
            "record_id": record_id,
            "role": role,
            "condition": condition,
            "condition_hash": condition_digest(condition),
        }
        for record_id, role, condition, _ in rows
    ]
    try:
        with path.open("wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, data.shape[0], dim))
            fh.write(data.tobytes())
        with Path(str(path) + ".manifest.json").open("w", encoding="utf-8") as fh:
            json.dump(manifest, fh, ensure_ascii=False, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write store to {path}: {exc}") from exc
