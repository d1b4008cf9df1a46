"""Instruction construction for condition-aware encoding.

A conditional row encodes the condition under an instruction that embeds one
sentence (or, for the sentence-base direction, encodes the sentence under an
instruction that embeds the condition). The unconditional row encodes the
condition under a bare retrieval instruction. Concatenation modes bypass
instructions entirely and join the two texts with a single separator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import PlaceholderMissing

PLACEHOLDER = "[s]"
MLM_SEPARATOR = " "

DEFAULT_TEMPLATE_CONDITIONAL = (
    "Retrieve semantically similar texts to a given Condition, "
    "given the Sentence : [s]"
)
DEFAULT_TEMPLATE_UNCONDITIONAL = "Retrieve semantically similar texts"

_BASES = ("cond", "sent")
_MLM_MODES = ("c_plus_s", "s_plus_c")
_WHICH = ("s1", "s2", "unconditional")


@dataclass(frozen=True)
class PromptSpec:
    """How to turn a record into (instruction, text to encode) pairs."""

    template_conditional: str = DEFAULT_TEMPLATE_CONDITIONAL
    template_unconditional: str = DEFAULT_TEMPLATE_UNCONDITIONAL
    base: str = "cond"
    mlm_concat: Optional[str] = None

    def validate(self) -> None:
        if self.base not in _BASES:
            raise ValueError(f"base must be one of {_BASES}, got {self.base!r}")
        if self.mlm_concat is not None and self.mlm_concat not in _MLM_MODES:
            raise ValueError(
                f"mlm_concat must be one of {_MLM_MODES} or None, got {self.mlm_concat!r}"
            )
        if self.mlm_concat is None:
            found = self.template_conditional.count(PLACEHOLDER)
            if found != 1:
                raise PlaceholderMissing(self.template_conditional, found)


def build_prompt(spec: PromptSpec, record, which: str) -> tuple[str, str]:
    """Return (instruction, text_to_encode) for one row of ``record``.

    ``which`` selects sentence1, sentence2, or the unconditional row. The
    sentence-base direction reuses the conditional template with the
    placeholder roles swapped: the condition goes into the instruction and
    the sentence is the text encoded.
    """
    spec.validate()
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}, got {which!r}")
    if which == "unconditional":
        return spec.template_unconditional, record.condition
    sentence = record.sentence1 if which == "s1" else record.sentence2
    if spec.mlm_concat is not None:
        if spec.mlm_concat == "c_plus_s":
            return "", record.condition + MLM_SEPARATOR + sentence
        return "", sentence + MLM_SEPARATOR + record.condition
    if spec.base == "cond":
        return spec.template_conditional.replace(PLACEHOLDER, sentence), record.condition
    return spec.template_conditional.replace(PLACEHOLDER, record.condition), sentence


def prompt_digest(spec: PromptSpec) -> str:
    """16-hex digest of every spec field; stable across runs and platforms."""
    from .cembio import fnv1a64

    material = "\x1f".join(
        (
            spec.template_conditional,
            spec.template_unconditional,
            spec.base,
            spec.mlm_concat or "",
        )
    )
    return f"{fnv1a64(material):016x}"
