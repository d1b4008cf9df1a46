"""Exception hierarchy shared by every condemb module.

Three families map onto the CLI exit codes: validation problems (exit 2),
missing data (exit 3), and numeric degeneracies (exit 4).
"""

from __future__ import annotations


class CondembError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ValidationError(CondembError):
    exit_code = 2


class MissingDataError(CondembError):
    exit_code = 3


class NumericError(CondembError):
    exit_code = 4


# --- dataset ---------------------------------------------------------------

class MalformedLine(ValidationError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class RatingOutOfRange(ValidationError):
    def __init__(self, record_id: str, value: float):
        self.record_id = record_id
        self.value = value
        super().__init__(f"record {record_id!r}: rating {value} outside [1, 5]")


class DuplicateId(ValidationError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"duplicate record id {record_id!r}")


class EmptyDataset(ValidationError):
    def __init__(self):
        super().__init__("dataset contains no records")


# --- embedding store -------------------------------------------------------

class IoFailure(MissingDataError):
    pass


class BadMagic(MissingDataError):
    def __init__(self, path: str, detail: str):
        self.path = path
        super().__init__(f"{path}: {detail}")


class DimMismatch(ValidationError):
    pass


class NonFiniteVector(NumericError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} contains NaN or Inf")


class MissingRow(MissingDataError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no row for key {key}")


class MissingRows(MissingDataError):
    def __init__(self, keys):
        self.keys = list(keys)
        preview = ", ".join(str(k) for k in self.keys[:5])
        more = "" if len(self.keys) <= 5 else f" (+{len(self.keys) - 5} more)"
        super().__init__(f"{len(self.keys)} missing rows: {preview}{more}")


# --- metrics ---------------------------------------------------------------

class ZeroVector(NumericError):
    def __init__(self, which: str = "vector"):
        self.which = which
        super().__init__(f"{which} has zero norm")


class LengthMismatch(ValidationError):
    pass


class ConstantInput(NumericError):
    def __init__(self, which: str):
        super().__init__(f"{which} is constant; rank correlation undefined")


# --- projection ------------------------------------------------------------

class ShapeMismatch(ValidationError):
    pass


class EmptyTrainSet(ValidationError):
    def __init__(self):
        super().__init__("training pair list is empty")


# --- isotropy --------------------------------------------------------------

class DegenerateMean(NumericError):
    def __init__(self):
        super().__init__("mean embedding vector is numerically zero")


class ZeroRow(NumericError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has zero norm; cannot normalize")


# --- synthetic generator / config -----------------------------------------

class ConfigInvalid(ValidationError):
    pass
