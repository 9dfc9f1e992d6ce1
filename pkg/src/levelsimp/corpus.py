"""Dataset ingestion, splits, label noise, and synthetic generation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, ParseError, RatioError
from .grammar import SyntheticGrammar
from .pseudolabel import ParaphrasePair
from .textcore import tokenize

__all__ = [
    "ParallelExample",
    "ParallelDataset",
    "ParaphraseView",
    "SynthResult",
    "load_parallel",
    "save_parallel",
    "synth_generate",
    "inject_label_noise",
    "split",
    "to_labeled_sentences",
]


@dataclass(frozen=True)
class ParallelExample:
    source: str
    target: str
    level: int


@dataclass
class ParallelDataset:
    examples: list[ParallelExample]
    provenance: str = "unknown"

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)


@dataclass
class ParaphraseView:
    """Unlabeled paraphrase pairs plus their hidden gold levels.

    The gold levels exist only so tests can measure weight separation; the
    training pipeline never reads them.
    """

    pairs: list[ParaphrasePair]
    true_levels: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class SynthResult:
    parallel: ParallelDataset
    paraphrase: ParaphraseView


def _check_example(source: str, target: str, level, row: int, num_levels) -> ParallelExample:
    try:
        level = int(level)
    except (TypeError, ValueError):
        raise ParseError(row, f"level {level!r} is not an integer") from None
    if level < 1:
        raise ParseError(row, f"level {level} below 1")
    if num_levels is not None and level > num_levels:
        raise ParseError(row, f"level {level} above {num_levels}")
    for name, text in (("source", source), ("target", target)):
        try:
            tokenize(text)
        except EmptyInputError:
            raise ParseError(row, f"empty {name} text") from None
    return ParallelExample(source=source, target=target, level=level)


def load_parallel(path, fmt: str = "jsonl", num_levels: int | None = None) -> ParallelDataset:
    """Load parallel data from TSV (source, target, level) or JSON Lines.

    Malformed rows raise :class:`ParseError` with their 1-based row number.
    """
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    examples = []
    with open(path, encoding="utf-8") as handle:
        for row, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if fmt == "tsv":
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ParseError(row, f"expected 3 columns, got {len(parts)}")
                source, target, level = parts
            else:
                try:
                    record = json.loads(line)
                    source = record["source"]
                    target = record["target"]
                    level = record["level"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ParseError(row, f"bad JSON record: {exc}") from None
            examples.append(_check_example(source, target, level, row, num_levels))
    return ParallelDataset(examples=examples, provenance=f"file:{path}")


def save_parallel(dataset: ParallelDataset, path, fmt: str = "jsonl") -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for ex in dataset.examples:
            if fmt == "tsv":
                handle.write(f"{ex.source}\t{ex.target}\t{ex.level}\n")
            else:
                handle.write(
                    json.dumps(
                        {"source": ex.source, "target": ex.target, "level": ex.level},
                        ensure_ascii=False,
                    )
                    + "\n"
                )


def synth_generate(
    grammar: SyntheticGrammar,
    n: int,
    seed: int,
    n_pairs: int | None = None,
) -> SynthResult:
    """Sample parallel triples and a same-level paraphrase view.

    Each parallel example pairs a level-0 rendering with its canonical
    level-k simplification.  Each paraphrase pair renders one sentence twice
    at the same level (0..K, so original-register paraphrases occur too) with
    different adverbs, jittered slot activations, and (when the template
    allows) a flipped clause, so the sides paraphrase each other without
    being identical.  Deterministic in ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    parallel_rng, pair_rng = [
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    ]

    examples = []
    for _ in range(n):
        item = grammar.sample_item(parallel_rng)
        level = int(parallel_rng.integers(1, grammar.levels + 1))
        source = " ".join(grammar.render(item, 0))
        target = " ".join(grammar.render(item, level))
        examples.append(ParallelExample(source=source, target=target, level=level))
    parallel = ParallelDataset(examples=examples, provenance=f"synthetic(seed={seed})")

    pairs = []
    true_levels = []
    for _ in range(n if n_pairs is None else n_pairs):
        item = grammar.sample_item(pair_rng)
        level = int(pair_rng.integers(0, grammar.levels + 1))
        other_adverb = (
            item.adverb_index + 1 + int(pair_rng.integers(len(grammar.adverbs) - 1))
        ) % len(grammar.adverbs)
        first = grammar.render(
            item, level, jitter=grammar.sample_jitter(item, pair_rng)
        )
        second = grammar.render(
            item,
            level,
            adverb_index=other_adverb,
            jitter=grammar.sample_jitter(item, pair_rng),
            flip_clause=bool(pair_rng.integers(2)),
        )
        pairs.append(ParaphrasePair(source=" ".join(first), target=" ".join(second)))
        true_levels.append((level, level))
    return SynthResult(
        parallel=parallel,
        paraphrase=ParaphraseView(pairs=pairs, true_levels=true_levels),
    )


def inject_label_noise(
    dataset: ParallelDataset, rate: float, seed: int, num_levels: int
) -> tuple[ParallelDataset, list[bool]]:
    """Flip each level with probability ``rate`` to a different level in 1..K.

    Returns the noisy dataset and the flip mask identifying changed examples.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0,1], got {rate}")
    rng = np.random.default_rng(seed)
    examples = []
    mask = []
    for ex in dataset.examples:
        flip = bool(rng.random() < rate)
        level = ex.level
        if flip:
            offset = int(rng.integers(1, num_levels))
            level = (ex.level - 1 + offset) % num_levels + 1
        mask.append(flip)
        examples.append(ParallelExample(ex.source, ex.target, level))
    return (
        ParallelDataset(examples=examples, provenance=dataset.provenance + "+noise"),
        mask,
    )


def split(
    dataset: ParallelDataset, ratios: tuple[float, float, float], seed: int
) -> tuple[ParallelDataset, ParallelDataset, ParallelDataset]:
    """Deterministic shuffled partition into train/validation/test.

    Sizes are floored per ratio; leftovers go to train, then validation,
    then test.  All three ratios must be positive and sum to 1.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise RatioError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise RatioError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(dataset.examples)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    sizes = [int(n * r) for r in ratios]
    remainder = n - sum(sizes)
    for i in range(remainder):
        sizes[i % 3] += 1
    out = []
    cursor = 0
    for name, size in zip(("train", "val", "test"), sizes):
        chosen = [dataset.examples[i] for i in order[cursor : cursor + size]]
        cursor += size
        out.append(
            ParallelDataset(
                examples=chosen, provenance=f"{dataset.provenance}/{name}"
            )
        )
    return tuple(out)


def to_labeled_sentences(
    dataset: ParallelDataset, include_sources: bool = True
) -> tuple[list[str], list[int]]:
    """Flatten parallel data into (texts, levels) for classifier training.

    Targets carry their simplification level; sources are appended as
    level 0 ("original") examples.
    """
    texts = [ex.target for ex in dataset.examples]
    levels = [ex.level for ex in dataset.examples]
    if include_sources:
        texts += [ex.source for ex in dataset.examples]
        levels += [0] * len(dataset.examples)
    return texts, levels
