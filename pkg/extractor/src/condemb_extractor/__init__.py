"""Encoder bridge: build retrieval instructions, pool encoder outputs, and
dump CEMB stores for the condemb toolkit to consume."""

from .backends import HashBackend, SentenceTransformerBackend, resolve_backend
from .cembio import condition_digest, fnv1a64, write_store_files
from .dataset import Record, read_records
from .errors import (
    DuplicateId,
    ExtractorError,
    IoFailure,
    MalformedLine,
    MissingDataError,
    ModelLoadFailure,
    NonFiniteVector,
    NumericError,
    OutOfMemory,
    PlaceholderMissing,
    ValidationError,
)
from .extract import ExtractSummary, extract
from .prompts import (
    DEFAULT_TEMPLATE_CONDITIONAL,
    DEFAULT_TEMPLATE_UNCONDITIONAL,
    MLM_SEPARATOR,
    PLACEHOLDER,
    PromptSpec,
    build_prompt,
    prompt_digest,
)

__version__ = "0.1.0"
