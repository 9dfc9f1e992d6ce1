"""Simplification evaluation metrics and multi-system rank aggregation.

BLEU and SARI operate on pre-tokenized sentences so callers control the
tokenization.  Conventions that matter for reproducibility:

* BLEU: n-grams up to 4, add-one smoothing on numerator and denominator for
  n >= 2 only, brevity penalty against the closest-length reference (ties to
  the shorter one), zero unigram precision yields 0.
* SARI: mean over n = 1..4 of the average of keep-F1, add-F1, and
  delete-precision, scaled to [0, 100].  Any precision or recall whose
  operation set is empty counts as 1 (vacuous agreement); an F1 whose
  precision and recall are both genuinely 0 is 0.
* Ranking: 1 = best, ties get the mean of the tied positions, the average
  rank is the arithmetic mean over metrics.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyInputError, MissingScoreError
from .textcore import TokenizedSentence, fkgl

__all__ = [
    "MetricScores",
    "RankTable",
    "Direction",
    "higher_better",
    "closer_to",
    "bleu",
    "sari",
    "delta_fkgl",
    "pairwise_bleu_filter",
    "average_rank",
    "load_system_scores",
    "format_rank_table",
]

MAX_NGRAM = 4


@dataclass(frozen=True)
class MetricScores:
    """Scores of one system output against its source and references."""

    sari: float
    bleu: float
    fkgl: float
    delta_fkgl: float


@dataclass(frozen=True)
class Direction:
    """How a metric is ranked: higher wins, or closest to a target wins."""

    kind: str  # "higher_better" | "closer_to"
    target: float = 0.0

    def key(self, score: float) -> float:
        if self.kind == "higher_better":
            return -score
        return abs(score - self.target)


def higher_better() -> Direction:
    return Direction("higher_better")


def closer_to(target: float) -> Direction:
    return Direction("closer_to", target)


@dataclass
class RankTable:
    """Per-metric ranks and the cross-metric average for each system."""

    systems: list[str]
    metrics: list[str]
    per_metric_ranks: dict[str, list[float]] = field(default_factory=dict)
    average_rank: dict[str, float] = field(default_factory=dict)


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


def _tokens(sentence) -> tuple:
    if isinstance(sentence, TokenizedSentence):
        return tuple(sentence.tokens)
    return tuple(sentence)


def bleu(hyp, refs) -> float:
    """Sentence-level BLEU of ``hyp`` against one or more references."""
    hyp_tokens = _tokens(hyp)
    ref_tokens = [_tokens(r) for r in refs]
    if not hyp_tokens or not ref_tokens or any(not r for r in ref_tokens):
        raise EmptyInputError("bleu requires non-empty hypothesis and references")

    log_precision = 0.0
    for n in range(1, MAX_NGRAM + 1):
        hyp_counts = _ngram_counts(hyp_tokens, n)
        ref_counts = [_ngram_counts(r, n) for r in ref_tokens]
        matched = sum(
            min(count, max(rc[gram] for rc in ref_counts))
            for gram, count in hyp_counts.items()
        )
        total = sum(hyp_counts.values())
        if n == 1:
            if matched == 0:
                return 0.0
            log_precision += math.log(matched / total) / MAX_NGRAM
        else:
            log_precision += math.log((matched + 1) / (total + 1)) / MAX_NGRAM

    hyp_len = len(hyp_tokens)
    closest = min((abs(len(r) - hyp_len), len(r)) for r in ref_tokens)[1]
    brevity = 1.0 if hyp_len >= closest else math.exp(1.0 - closest / hyp_len)
    return brevity * math.exp(log_precision)


def _vacuous_ratio(numerator: float, denominator: int) -> tuple[float, bool]:
    """Ratio with the empty-set-is-perfect convention; flags vacuous cases."""
    if denominator == 0:
        return 1.0, True
    return numerator / denominator, False


def _combine_f1(p: float, p_vac: bool, r: float, r_vac: bool) -> float:
    if p_vac and r_vac:
        return 1.0
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def sari(source, hyp, refs) -> float:
    """SARI of ``hyp`` given the ``source`` sentence and references."""
    src_tokens = _tokens(source)
    hyp_tokens = _tokens(hyp)
    ref_tokens = [_tokens(r) for r in refs]
    if not src_tokens or not hyp_tokens or not ref_tokens or any(
        not r for r in ref_tokens
    ):
        raise EmptyInputError("sari requires non-empty source, hypothesis, references")

    numref = len(ref_tokens)
    total = 0.0
    for n in range(1, MAX_NGRAM + 1):
        src = Counter(
            {g: c * numref for g, c in _ngram_counts(src_tokens, n).items()}
        )
        cand = Counter(
            {g: c * numref for g, c in _ngram_counts(hyp_tokens, n).items()}
        )
        ref: Counter = Counter()
        for r in ref_tokens:
            ref.update(_ngram_counts(r, n))

        keep_cand = src & cand
        keep_good = keep_cand & ref
        keep_all = src & ref
        keep_p, kp_vac = _vacuous_ratio(
            sum(keep_good[g] / keep_cand[g] for g in keep_good), len(keep_cand)
        )
        keep_r, kr_vac = _vacuous_ratio(
            sum(keep_good[g] / keep_all[g] for g in keep_good), len(keep_all)
        )
        keep_f1 = _combine_f1(keep_p, kp_vac, keep_r, kr_vac)

        # Deletions are judged against the references' own deletions so a
        # hypothesis that matches the reference scores perfectly even when
        # n-grams repeat.
        del_cand = src - cand
        del_good = del_cand & (src - ref)
        del_p, _ = _vacuous_ratio(
            sum(del_good[g] / del_cand[g] for g in del_good), len(del_cand)
        )

        add_cand = set(cand) - set(src)
        add_good = add_cand & set(ref)
        add_all = set(ref) - set(src)
        add_p, ap_vac = _vacuous_ratio(len(add_good), len(add_cand))
        add_r, ar_vac = _vacuous_ratio(len(add_good), len(add_all))
        add_f1 = _combine_f1(add_p, ap_vac, add_r, ar_vac)

        total += (keep_f1 + del_p + add_f1) / 3.0
    return 100.0 * total / MAX_NGRAM


def delta_fkgl(source: str, hyp: str) -> float:
    """FKGL(source) - FKGL(hypothesis); positive means the output is simpler."""
    return fkgl(source) - fkgl(hyp)


def pairwise_bleu_filter(pairs, lo: float = 0.1, hi: float = 0.9):
    """Keep pairs whose BLEU(first, [second]) lies in [lo, hi], inclusive."""
    if not lo < hi:
        raise ValueError(f"lo must be < hi, got {lo} >= {hi}")
    kept = []
    for a, b in pairs:
        score = bleu(a, [b])
        if lo <= score <= hi:
            kept.append((a, b))
    return kept


def _fractional_ranks(keys: list[float]) -> list[float]:
    """Rank positions 1..n by ascending key, ties averaged."""
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    ranks = [0.0] * len(keys)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and keys[order[j + 1]] == keys[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def average_rank(
    scores: dict[str, dict[str, float]],
    directions: dict[str, Direction],
) -> RankTable:
    """Rank systems per metric (1 = best) and average the ranks.

    ``scores`` maps system -> metric -> value; every system must have a value
    for every metric in ``directions``.
    """
    systems = list(scores)
    metrics = list(directions)
    table = RankTable(systems=systems, metrics=metrics)
    for metric, direction in directions.items():
        keys = []
        for system in systems:
            if metric not in scores[system]:
                raise MissingScoreError(f"system {system!r} lacks metric {metric!r}")
            keys.append(direction.key(scores[system][metric]))
        table.per_metric_ranks[metric] = _fractional_ranks(keys)
    for idx, system in enumerate(systems):
        table.average_rank[system] = sum(
            table.per_metric_ranks[m][idx] for m in metrics
        ) / len(metrics)
    return table


def load_system_scores(path) -> dict[str, dict[str, float]]:
    """Read a JSON Lines scores file: {"system": str, "scores": {metric: num}}."""
    scores: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            scores[record["system"]] = {
                k: float(v) for k, v in record["scores"].items()
            }
    return scores


def format_rank_table(
    table: RankTable, scores: dict[str, dict[str, float]] | None = None
) -> str:
    """Render a RankTable as TSV: systems as rows, metrics + average rank."""
    header = ["system"]
    if scores is not None:
        header += table.metrics
    header += [f"rank:{m}" for m in table.metrics] + ["average_rank"]
    lines = ["\t".join(header)]
    for idx, system in enumerate(table.systems):
        row = [system]
        if scores is not None:
            row += [f"{scores[system][m]:.4f}" for m in table.metrics]
        row += [f"{table.per_metric_ranks[m][idx]:g}" for m in table.metrics]
        row.append(f"{table.average_rank[system]:.4f}")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
