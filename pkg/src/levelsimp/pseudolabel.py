"""Paraphrase filtering, pseudo-labeling, and confidence weighting.

A paraphrase pair survives filtering, gets both sides classified, and each
side receives a confidence weight sqrt(precision[level] * confidence) — the
geometric mean of the classifier's per-class precision and its softmax
confidence.  The example weight is the product of the two side weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .classifier import LevelClassifier, PrecisionProfile
from .errors import EmptyInputError
from .textcore import is_word_token, tokenize

__all__ = [
    "ParaphrasePair",
    "PseudoExample",
    "FILTER_RULES",
    "filter_reason",
    "filter_paraphrases",
    "confidence_weight",
    "label_pair",
    "build_pseudo_corpus",
    "read_pairs_tsv",
    "write_pseudo_corpus",
    "read_pseudo_corpus",
]

# Rules applied in order; the first match is the one reported.
FILTER_RULES = ("identical", "contained", "no_letters", "too_few_words")


@dataclass(frozen=True)
class ParaphrasePair:
    source: str
    target: str


@dataclass(frozen=True)
class PseudoExample:
    """A labeled paraphrase pair with per-side confidences and weights."""

    source: str
    target: str
    src_level: int
    tgt_level: int
    src_conf: float
    tgt_conf: float
    src_weight: float
    tgt_weight: float
    weight: float


def _safe_tokens(text: str) -> tuple[str, ...]:
    try:
        return tokenize(text).tokens
    except EmptyInputError:
        return ()


def _is_contiguous_subsequence(short: tuple, long: tuple) -> bool:
    n = len(short)
    return any(long[i : i + n] == short for i in range(len(long) - n + 1))


def filter_reason(pair: ParaphrasePair) -> str | None:
    """Name of the removal rule this pair trips, or None if it survives.

    Checks run in the order of ``FILTER_RULES``: identical token sequences,
    one side contiguously contained in the other, a side with no alphabetic
    character, a side with fewer than 3 word tokens.
    """
    src = _safe_tokens(pair.source)
    tgt = _safe_tokens(pair.target)
    if src == tgt:
        return "identical"
    shorter, longer = (src, tgt) if len(src) <= len(tgt) else (tgt, src)
    if _is_contiguous_subsequence(shorter, longer):
        return "contained"
    for side in (src, tgt):
        if not any(ch.isalpha() for token in side for ch in token):
            return "no_letters"
    for side in (src, tgt):
        if sum(1 for token in side if is_word_token(token)) < 3:
            return "too_few_words"
    return None


def filter_paraphrases(pairs) -> list[ParaphrasePair]:
    """Drop low-quality pairs, preserving the survivors' order."""
    return [p for p in pairs if filter_reason(p) is None]


def confidence_weight(precision: float, confidence: float) -> float:
    """Geometric mean sqrt(precision * confidence), both in [0, 1]."""
    if not 0.0 <= precision <= 1.0 or not 0.0 <= confidence <= 1.0:
        raise ValueError(
            f"precision and confidence must be in [0,1], "
            f"got {precision}, {confidence}"
        )
    return math.sqrt(precision * confidence)


def label_pair(
    clf: LevelClassifier, precisions: PrecisionProfile, pair: ParaphrasePair
) -> PseudoExample:
    """Classify both sides of a surviving pair and attach weights."""
    src_level, src_conf, _ = clf.predict_one(pair.source)
    tgt_level, tgt_conf, _ = clf.predict_one(pair.target)
    src_weight = confidence_weight(float(precisions.per_class[src_level]), src_conf)
    tgt_weight = confidence_weight(float(precisions.per_class[tgt_level]), tgt_conf)
    return PseudoExample(
        source=pair.source,
        target=pair.target,
        src_level=src_level,
        tgt_level=tgt_level,
        src_conf=src_conf,
        tgt_conf=tgt_conf,
        src_weight=src_weight,
        tgt_weight=tgt_weight,
        weight=src_weight * tgt_weight,
    )


def build_pseudo_corpus(
    clf: LevelClassifier, precisions: PrecisionProfile, pairs
) -> list[PseudoExample]:
    """Filter pairs and label the survivors, keeping input order."""
    return [label_pair(clf, precisions, p) for p in filter_paraphrases(pairs)]


def read_pairs_tsv(path) -> list[ParaphrasePair]:
    """Read source<TAB>target pairs; blank lines are skipped."""
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"expected 2 tab-separated columns, got {len(parts)}")
            pairs.append(ParaphrasePair(source=parts[0], target=parts[1]))
    return pairs


def write_pseudo_corpus(examples, path) -> None:
    """Write pseudo examples as JSON Lines with full-precision reals."""
    with open(path, "w", encoding="utf-8") as handle:
        for ex in examples:
            handle.write(
                json.dumps(
                    {
                        "source": ex.source,
                        "target": ex.target,
                        "src_level": ex.src_level,
                        "tgt_level": ex.tgt_level,
                        "src_conf": ex.src_conf,
                        "tgt_conf": ex.tgt_conf,
                        "weight": ex.weight,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_pseudo_corpus(path) -> list[PseudoExample]:
    """Read pseudo examples written by :func:`write_pseudo_corpus`.

    Side weights are reconstructed from the stored combined weight only up
    to their product, so they are left unset (NaN) here.
    """
    examples = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            examples.append(
                PseudoExample(
                    source=record["source"],
                    target=record["target"],
                    src_level=int(record["src_level"]),
                    tgt_level=int(record["tgt_level"]),
                    src_conf=float(record["src_conf"]),
                    tgt_conf=float(record["tgt_conf"]),
                    src_weight=float("nan"),
                    tgt_weight=float("nan"),
                    weight=float(record["weight"]),
                )
            )
    return examples
