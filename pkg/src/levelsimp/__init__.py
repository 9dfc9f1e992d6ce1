"""Confidence-weighted training for target-level sentence simplification."""

from .classifier import LevelClassifier, PrecisionProfile, per_class_precision
from .corpus import ParallelDataset, ParallelExample, synth_generate
from .errors import LevelSimpError
from .grammar import SyntheticGrammar, load_grammar
from .metrics import average_rank, bleu, delta_fkgl, sari
from .pseudolabel import (
    ParaphrasePair,
    PseudoExample,
    build_pseudo_corpus,
    confidence_weight,
)
from .seq2seq import LevelConditionedSeq2Seq
from .textcore import fkgl, tokenize

__version__ = "0.1.0"

__all__ = [
    "LevelClassifier",
    "PrecisionProfile",
    "per_class_precision",
    "ParallelDataset",
    "ParallelExample",
    "synth_generate",
    "LevelSimpError",
    "SyntheticGrammar",
    "load_grammar",
    "average_rank",
    "bleu",
    "delta_fkgl",
    "sari",
    "ParaphrasePair",
    "PseudoExample",
    "build_pseudo_corpus",
    "confidence_weight",
    "LevelConditionedSeq2Seq",
    "fkgl",
    "tokenize",
    "__version__",
]
