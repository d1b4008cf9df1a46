import pytest

from condemb_extractor.dataset import Record
from condemb_extractor.prompts import (
    DEFAULT_TEMPLATE_CONDITIONAL,
    DEFAULT_TEMPLATE_UNCONDITIONAL,
    PromptSpec,
    build_prompt,
    prompt_digest,
)
from condemb_extractor.errors import PlaceholderMissing

RECORD = Record(
    id="0",
    sentence1="A girl plays.",
    sentence2="Two boys run.",
    condition="name of the game",
)


def test_golden_conditional_instruction():
    instruction, text = build_prompt(PromptSpec(), RECORD, "s1")
    assert instruction == (
        "Retrieve semantically similar texts to a given Condition, "
        "given the Sentence : A girl plays."
    )
    assert text == "name of the game"


def test_golden_unconditional_instruction():
    instruction, text = build_prompt(PromptSpec(), RECORD, "unconditional")
    assert instruction == "Retrieve semantically similar texts"
    assert text == "name of the game"


def test_second_sentence_selection():
    instruction, text = build_prompt(PromptSpec(), RECORD, "s2")
    assert "Two boys run." in instruction
    assert "A girl plays." not in instruction
    assert text == "name of the game"


def test_sentence_base_swaps_roles():
    instruction, text = build_prompt(PromptSpec(base="sent"), RECORD, "s1")
    assert instruction == (
        "Retrieve semantically similar texts to a given Condition, "
        "given the Sentence : name of the game"
    )
    assert text == "A girl plays."


def test_concatenation_modes():
    spec = PromptSpec(mlm_concat="c_plus_s")
    assert build_prompt(spec, RECORD, "s1") == ("", "name of the game A girl plays.")
    spec = PromptSpec(mlm_concat="s_plus_c")
    assert build_prompt(spec, RECORD, "s2") == ("", "Two boys run. name of the game")


def test_concatenation_keeps_unconditional_instruction():
    spec = PromptSpec(mlm_concat="c_plus_s")
    instruction, text = build_prompt(spec, RECORD, "unconditional")
    assert instruction == DEFAULT_TEMPLATE_UNCONDITIONAL
    assert text == "name of the game"


def test_custom_template_substitution():
    spec = PromptSpec(template_conditional="Given [s], find matches")
    instruction, _ = build_prompt(spec, RECORD, "s1")
    assert instruction == "Given A girl plays., find matches"


@pytest.mark.parametrize(
    "template", ["no placeholder here", "two [s] of them [s]", ""]
)
def test_placeholder_count_enforced(template):
    with pytest.raises(PlaceholderMissing):
        PromptSpec(template_conditional=template).validate()


def test_placeholder_not_required_for_concatenation():
    PromptSpec(template_conditional="none", mlm_concat="c_plus_s").validate()


def test_invalid_enums_rejected():
    with pytest.raises(ValueError):
        PromptSpec(base="both").validate()
    with pytest.raises(ValueError):
        PromptSpec(mlm_concat="shuffled").validate()
    with pytest.raises(ValueError):
        build_prompt(PromptSpec(), RECORD, "s3")


def test_prompt_digest_tracks_every_field():
    base = prompt_digest(PromptSpec())
    assert base == prompt_digest(PromptSpec())
    assert len(base) == 16
    assert prompt_digest(PromptSpec(base="sent")) != base
    assert prompt_digest(PromptSpec(mlm_concat="c_plus_s")) != base
    assert prompt_digest(PromptSpec(template_unconditional="x [s] y")) != base


def test_default_templates_exported():
    assert "[s]" in DEFAULT_TEMPLATE_CONDITIONAL
    assert "[s]" not in DEFAULT_TEMPLATE_UNCONDITIONAL
