"""End-to-end extraction: dataset -> prompts -> encoder -> CEMB dump.

Row layout: two conditional rows per record in file order, then one
unconditional row per distinct condition in first-appearance order. The
roles match the dump reader's keying: the condition base writes
``cond_given_s1``/``cond_given_s2`` (concatenation modes reuse these, since
downstream they are ordinary conditional rows), the sentence base writes
``sent1_given_c``/``sent2_given_c``, and unconditional rows always use
``cond_unconditional`` with an empty record id.

No similarity or subtraction happens here; this package only produces rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backends import resolve_backend
from .cembio import write_store_files
from .dataset import read_records
from .errors import IoFailure
from .prompts import PromptSpec, build_prompt, prompt_digest

_CONDITIONAL_ROLES = {
    "cond": ("cond_given_s1", "cond_given_s2"),
    "sent": ("sent1_given_c", "sent2_given_c"),
}


@dataclass(frozen=True)
class ExtractSummary:
    """What an extraction produced; serialized next to the dump."""

    model_id: str
    pooling: str
    dim: int
    prompt_hash: str
    n_records: int
    n_conditions: int
    n_rows: int

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "pooling": self.pooling,
            "dim": self.dim,
            "prompt_hash": self.prompt_hash,
            "n_records": self.n_records,
            "n_conditions": self.n_conditions,
            "n_rows": self.n_rows,
        }


def extract(
    dataset: str | Path,
    model_id: str,
    spec: PromptSpec,
    pooling: str = "model_default",
    out: str | Path = "store.cemb",
    batch: int = 32,
) -> ExtractSummary:
    """Encode every required row of ``dataset`` and write the dump to ``out``.

    Returns the summary, which is also written to ``<out>.extract.json`` so
    reruns can be compared: identical inputs yield byte-identical files.
    """
    spec.validate()
    records = read_records(dataset)
    backend = resolve_backend(model_id)
    role_s1, role_s2 = _CONDITIONAL_ROLES[spec.base if spec.mlm_concat is None else "cond"]

    prompts: list[tuple[str, str]] = []
    keys: list[tuple[str, str, str]] = []  # (record_id, role, condition)
    for rec in records:
        prompts.append(build_prompt(spec, rec, "s1"))
        keys.append((rec.id, role_s1, rec.condition))
        prompts.append(build_prompt(spec, rec, "s2"))
        keys.append((rec.id, role_s2, rec.condition))
    conditions: list[str] = []
    seen: set[str] = set()
    for rec in records:
        marker = rec.condition.strip()
        if marker not in seen:
            seen.add(marker)
            conditions.append(rec.condition)
            prompts.append(build_prompt(spec, rec, "unconditional"))
            keys.append(("", "cond_unconditional", rec.condition))

    vectors = backend.encode(prompts, pooling, batch)
    rows = [
        (record_id, role, condition, vectors[i])
        for i, (record_id, role, condition) in enumerate(keys)
    ]
    write_store_files(out, backend.dim, rows)

    summary = ExtractSummary(
        model_id=model_id,
        pooling=pooling,
        dim=backend.dim,
        prompt_hash=prompt_digest(spec),
        n_records=len(records),
        n_conditions=len(conditions),
        n_rows=len(rows),
    )
    meta_path = Path(str(out) + ".extract.json")
    try:
        with meta_path.open("w", encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write extraction summary {meta_path}: {exc}") from exc
    return summary
