"""Condition-aware sentence embedding toolkit.

Composes condition-aware vectors from precomputed encoder dumps, trains
small projection heads against human similarity ratings, scores conditional
sentence similarity, and measures embedding isotropy.
"""

from .compose import ComposedPair, CompositionVariant, compose_dataset, compose_record, unsupervised_score
from .dataset import CstsRecord, DatasetSplit, load_dataset, normalize_rating, split_dataset
from .embstore import EmbeddingStore, RowKey, lookup, read_store, write_store
from .errors import CondembError
from .isotropy import IsotropyReport, compare_subtraction, cos_to_mean_stats, i_iso
from .metrics import EvalReport, cosine, evaluate, spearman
from .projection import AdamState, ProjectionModel, TrainConfig, adam_step, init_model, loss_and_grad, train
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ComposedPair",
    "CompositionVariant",
    "CondembError",
    "CstsRecord",
    "DatasetSplit",
    "EmbeddingStore",
    "EvalReport",
    "IsotropyReport",
    "ProjectionModel",
    "RowKey",
    "SynthConfig",
    "TrainConfig",
    "adam_step",
    "compare_subtraction",
    "compose_dataset",
    "compose_record",
    "cos_to_mean_stats",
    "cosine",
    "evaluate",
    "generate",
    "i_iso",
    "init_model",
    "load_dataset",
    "lookup",
    "loss_and_grad",
    "normalize_rating",
    "read_store",
    "spearman",
    "split_dataset",
    "train",
    "unsupervised_score",
    "write_store",
    "__version__",
]
