"""Error hierarchy for the extractor, mapped to CLI exit codes.

Exit codes mirror the main toolkit: 1 unspecified, 2 invalid input,
3 missing data or model, 4 numeric trouble in encoder output.
"""

from __future__ import annotations


class ExtractorError(Exception):
    """Base class; carries the process exit code for the CLI."""

    exit_code = 1


class ValidationError(ExtractorError):
    exit_code = 2


class MissingDataError(ExtractorError):
    exit_code = 3


class NumericError(ExtractorError):
    exit_code = 4


class MalformedLine(ValidationError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class DuplicateId(ValidationError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"duplicate record id {record_id!r}")


class PlaceholderMissing(ValidationError):
    def __init__(self, template: str, found: int):
        self.template = template
        self.found = found
        super().__init__(
            f"conditional template must contain the placeholder [s] exactly once, "
            f"found {found}: {template!r}"
        )


class ModelLoadFailure(MissingDataError):
    def __init__(self, model_id: str, reason: str):
        self.model_id = model_id
        super().__init__(f"cannot load model {model_id!r}: {reason}")


class OutOfMemory(ExtractorError):
    def __init__(self, batch: int):
        self.batch = batch
        super().__init__(
            f"encoder ran out of memory at batch size {batch}; retry with "
            f"--batch {max(1, batch // 2)}"
        )


class IoFailure(MissingDataError):
    pass


class NonFiniteVector(NumericError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"encoder produced a non-finite value in row {row}")
