"""Synthetic multi-level simplification grammar.

Sentences come from templates whose lexical slots carry complex-to-simple
substitution chains.  A slot with activation level ``a`` starts substituting
at simplification level ``a`` and then steps one chain position per level, so
rendering level k applies at most k tiers of substitution and adjacent levels
share vocabulary.  Optional clauses drop at level >= ceil(K/2).  Each
template holds one depth-K chain activating at level 1, which makes the
rule-based complexity score strictly decreasing in the level for every
sentence.

The paraphrase view renders the same sentence twice at one level with
different sentence adverbs, jittered slot activations, and (where allowed) a
flipped clause position, producing same-level surface variants.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

__all__ = [
    "SyntheticGrammar",
    "SentenceItem",
    "load_grammar",
    "default_grammar_path",
]

_JITTER_CHOICES = (-1, 0, 1)
_JITTER_PROBS = (0.15, 0.7, 0.15)


@dataclass(frozen=True)
class Part:
    kind: str  # "word" | "punct" | "name" | "adverb" | "slot"
    value: str | int | None = None
    activate: int = 0
    drop_at: int = 0  # 0 = keep at every level, else omit when level >= drop_at


@dataclass(frozen=True)
class Template:
    name: str
    main: tuple[Part, ...]
    clause: tuple[Part, ...]
    clause_movable: bool

    def slot_count(self) -> int:
        return sum(1 for p in self.main + self.clause if p.kind == "slot")


@dataclass(frozen=True)
class SentenceItem:
    """One sampled sentence: a template instance with names and an adverb."""

    template_index: int
    names: tuple[str, ...]
    adverb_index: int


class SyntheticGrammar:
    """Template grammar with per-level substitution rules."""

    def __init__(
        self,
        levels: int,
        adverbs: list[str],
        names: list[str],
        chains: dict[str, list[str]],
        templates: list[Template],
    ):
        self.levels = levels
        self.adverbs = list(adverbs)
        self.names = list(names)
        self.chains = {k: list(v) for k, v in chains.items()}
        self.templates = list(templates)
        self.clause_drop_level = -(-levels // 2)  # ceil(K/2)
        self._validate()
        # word -> distance from the simple end of its chain
        self.word_points: dict[str, int] = {}
        for chain in self.chains.values():
            for idx, word in enumerate(chain):
                self.word_points[word] = len(chain) - 1 - idx

    def _validate(self) -> None:
        if self.levels < 2:
            raise ValueError("grammar needs at least 2 levels")
        if len(self.adverbs) < 2:
            raise ValueError("grammar needs at least 2 adverbs for variants")
        seen: set[str] = set()
        for chain_name, chain in self.chains.items():
            if len(chain) < 2:
                raise ValueError(f"chain {chain_name!r} too short")
            for word in chain:
                if word in seen:
                    raise ValueError(f"word {word!r} appears in two chains")
                seen.add(word)
        for template in self.templates:
            deep = [
                p
                for p in template.main
                if p.kind == "slot"
                and p.activate == 1
                and len(self.chains[p.value]) == self.levels + 1
            ]
            if not deep:
                raise ValueError(
                    f"template {template.name!r} lacks a depth-{self.levels} "
                    "chain activating at level 1"
                )
            if template.main[0].kind != "adverb":
                raise ValueError(
                    f"template {template.name!r} must start with an adverb"
                )
            for part in template.main + template.clause:
                if part.kind == "slot" and part.value not in self.chains:
                    raise ValueError(f"unknown chain {part.value!r}")
                if part.kind == "name" and part.value >= len(self.names):
                    raise ValueError("name index out of range")

    # -- sampling -----------------------------------------------------------

    def sample_item(self, rng: np.random.Generator) -> SentenceItem:
        template_index = int(rng.integers(len(self.templates)))
        picked = rng.choice(len(self.names), size=2, replace=False)
        return SentenceItem(
            template_index=template_index,
            names=tuple(self.names[int(i)] for i in picked),
            adverb_index=int(rng.integers(len(self.adverbs))),
        )

    # -- rendering ------------------------------------------------------------

    def _slot_word(self, chain_name: str, activate: int, level: int) -> str:
        chain = self.chains[chain_name]
        index = min(max(level - activate + 1, 0), len(chain) - 1)
        return chain[index]

    def render(
        self,
        item: SentenceItem,
        level: int,
        adverb_index: int | None = None,
        jitter: dict[int, int] | None = None,
        flip_clause: bool = False,
    ) -> list[str]:
        """Token list for ``item`` at ``level`` (0 = original).

        ``jitter`` maps slot ordinal -> activation shift; the canonical
        rendering passes none.  ``flip_clause`` moves a movable clause to the
        front (surface variation for the paraphrase view).
        """
        if not 0 <= level <= self.levels:
            raise ValueError(f"level {level} outside 0..{self.levels}")
        template = self.templates[item.template_index]
        adverb = self.adverbs[
            item.adverb_index if adverb_index is None else adverb_index
        ]
        slot_ordinal = 0

        def emit(parts: tuple[Part, ...]) -> list[str]:
            nonlocal slot_ordinal
            tokens = []
            for part in parts:
                if part.drop_at and level >= part.drop_at:
                    if part.kind == "slot":
                        slot_ordinal += 1
                    continue
                if part.kind in ("word", "punct"):
                    tokens.append(part.value)
                elif part.kind == "adverb":
                    tokens.append(adverb)
                elif part.kind == "name":
                    tokens.append(item.names[part.value])
                elif part.kind == "slot":
                    activate = part.activate
                    if jitter and slot_ordinal in jitter:
                        activate = max(activate + jitter[slot_ordinal], 1)
                    tokens.append(self._slot_word(part.value, activate, level))
                    slot_ordinal += 1
                else:
                    raise ValueError(f"unknown part kind {part.kind!r}")
            return tokens

        main = emit(template.main)
        keep_clause = level < self.clause_drop_level and template.clause
        clause = emit(template.clause) if template.clause else []
        if not keep_clause:
            tokens = main
        elif flip_clause and template.clause_movable:
            tokens = clause + [","] + main
        else:
            tokens = main + clause
        return tokens + ["."]

    def sample_jitter(
        self, item: SentenceItem, rng: np.random.Generator
    ) -> dict[int, int]:
        """Random activation shifts for every slot of the item's template."""
        template = self.templates[item.template_index]
        shifts = rng.choice(
            _JITTER_CHOICES, size=template.slot_count(), p=_JITTER_PROBS
        )
        return {i: int(s) for i, s in enumerate(shifts) if s != 0}

    # -- scoring ---------------------------------------------------------------

    def complexity_score(self, tokens) -> int:
        """Rule-based complexity: 4 points per remaining chain step plus one
        point per word token.  Strictly decreasing in the rendering level."""
        points = sum(self.word_points.get(t, 0) for t in tokens)
        n_words = sum(1 for t in tokens if any(c.isalnum() for c in t))
        return 4 * points + n_words

    # -- derived resources -------------------------------------------------------

    def frequency_table(self) -> dict[str, int]:
        """Word ranks for feature extraction: simple words rank lowest."""
        vocabulary = set(self.adverbs) | set(self.names)
        for template in self.templates:
            for part in template.main + template.clause:
                if part.kind == "word":
                    vocabulary.add(part.value)
        filler = sorted(vocabulary - set(self.word_points))  # all points 0
        chain_words = sorted(
            self.word_points, key=lambda w: (self.word_points[w], w)
        )
        table: dict[str, int] = {}
        for word in filler + chain_words:
            table.setdefault(word, len(table) + 1)
        return table


def _parse_parts(raw_parts) -> tuple[Part, ...]:
    parts = []
    for raw in raw_parts:
        kind = raw[0]
        if kind == "adverb":
            parts.append(Part(kind="adverb"))
        elif kind in ("word", "punct"):
            parts.append(Part(kind=kind, value=str(raw[1])))
        elif kind == "trim":
            parts.append(Part(kind="word", value=str(raw[1]), drop_at=int(raw[2])))
        elif kind == "name":
            parts.append(Part(kind="name", value=int(raw[1])))
        elif kind == "slot":
            parts.append(
                Part(kind="slot", value=str(raw[1]), activate=int(raw[2]))
            )
        else:
            raise ValueError(f"unknown template part kind {kind!r}")
    return tuple(parts)


def load_grammar(path) -> SyntheticGrammar:
    """Load a grammar config (YAML: levels, adverbs, names, chains, templates)."""
    with open(path, encoding="utf-8") as handle:
        raw = yaml.safe_load(handle)
    templates = [
        Template(
            name=t["name"],
            main=_parse_parts(t["main"]),
            clause=_parse_parts(t.get("clause", [])),
            clause_movable=bool(t.get("clause_movable", False)),
        )
        for t in raw["templates"]
    ]
    return SyntheticGrammar(
        levels=int(raw["levels"]),
        adverbs=raw["adverbs"],
        names=raw["names"],
        chains=raw["chains"],
        templates=templates,
    )


def default_grammar_path():
    """Filesystem path of the packaged default grammar."""
    return resources.files("levelsimp").joinpath("data/default_grammar.yaml")
