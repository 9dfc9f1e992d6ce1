"""Tokenization, syllable counting, and readability features.

Everything in this module is a pure function over immutable inputs.  The
tokenizer is deliberately simple (lowercase, punctuation split off, whitespace
dropped) so that metric values are reproducible; it makes no attempt at
abbreviation-aware sentence splitting.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EmptyInputError

__all__ = [
    "TokenizedSentence",
    "FeatureVector",
    "FEATURE_NAMES",
    "tokenize",
    "count_syllables",
    "split_sentences",
    "fkgl",
    "extract_features",
    "load_frequency_table",
    "is_word_token",
]

# Runs of letters/digits, or any single non-space symbol (underscore included).
_TOKEN_RE = re.compile(r"[^\W_]+|[^\w\s]|_", re.UNICODE)

# Terminal punctuation followed by whitespace or end of text.
_SENTENCE_RE = re.compile(r"[.!?]+(?:\s+|$)")

_WORD_RE = re.compile(r"^[^\W_]+$", re.UNICODE)

_VOWELS = frozenset("aeiouy")


@dataclass(frozen=True)
class TokenizedSentence:
    """A sentence with its lowercase tokens and non-whitespace char count."""

    raw: str
    tokens: tuple[str, ...]
    char_count: int


@dataclass(frozen=True)
class FeatureVector:
    """Surface readability features of a single sentence."""

    n_chars: int
    n_words: int
    mean_log_word_rank: float
    fkgl: float

    def as_list(self) -> list[float]:
        return [
            float(self.n_chars),
            float(self.n_words),
            self.mean_log_word_rank,
            self.fkgl,
        ]


FEATURE_NAMES = ("n_chars", "n_words", "mean_log_word_rank", "fkgl")


def is_word_token(token: str) -> bool:
    """True for letter/digit tokens, False for punctuation tokens."""
    return bool(_WORD_RE.match(token))


def tokenize(text: str) -> TokenizedSentence:
    """Lowercase and split ``text`` into word and punctuation tokens.

    Raises :class:`EmptyInputError` if nothing but whitespace remains.
    """
    tokens = tuple(_TOKEN_RE.findall(text.lower()))
    if not tokens:
        raise EmptyInputError(f"no tokens in {text!r}")
    return TokenizedSentence(
        raw=text, tokens=tokens, char_count=sum(len(t) for t in tokens)
    )


def count_syllables(word: str) -> int:
    """Heuristic syllable count: contiguous vowel groups (y counts as a vowel).

    A final lone silent "e" after a consonant drops one group, except for
    consonant+"le" endings ("table", "little") where the e is pronounced.
    Always at least 1.
    """
    if not word:
        raise EmptyInputError("empty word")
    w = word.lower()
    groups = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    if (
        groups > 1
        and len(w) >= 2
        and w.endswith("e")
        and w[-2] not in _VOWELS
        and not (len(w) >= 3 and w.endswith("le") and w[-3] not in _VOWELS)
    ):
        groups -= 1
    return max(groups, 1)


def split_sentences(text: str) -> list[TokenizedSentence]:
    """Split on terminal punctuation (. ! ?) followed by whitespace or EOT.

    Text without terminal punctuation is a single sentence.  Empty fragments
    are dropped; the terminal punctuation stays with its sentence.
    """
    sentences: list[TokenizedSentence] = []
    start = 0
    for match in _SENTENCE_RE.finditer(text):
        fragment = text[start : match.end()].strip()
        start = match.end()
        if fragment:
            try:
                sentences.append(tokenize(fragment))
            except EmptyInputError:
                pass
    tail = text[start:].strip()
    if tail:
        try:
            sentences.append(tokenize(tail))
        except EmptyInputError:
            pass
    return sentences


def fkgl(text: str) -> float:
    """Flesch-Kincaid grade level with the standard 1975 coefficients.

    Word and sentence counts come from this module's tokenizer and sentence
    splitter; punctuation tokens are not words.
    """
    sentences = split_sentences(text)
    words = [t for s in sentences for t in s.tokens if is_word_token(t)]
    if not words:
        raise EmptyInputError(f"no words in {text!r}")
    n_sentences = max(len(sentences), 1)
    n_syllables = sum(count_syllables(w) for w in words)
    return (
        0.39 * (len(words) / n_sentences)
        + 11.8 * (n_syllables / len(words))
        - 15.59
    )


def extract_features(
    sentence: TokenizedSentence, freq_table: dict[str, int]
) -> FeatureVector:
    """Compute the classifier feature vector for one tokenized sentence.

    Word-rank averaging uses natural log of the 1-based rank; tokens missing
    from ``freq_table`` get rank ``len(freq_table) + 1`` so rare words read
    as complex.  Punctuation tokens are excluded from the word count and the
    rank average.
    """
    words = [t for t in sentence.tokens if is_word_token(t)]
    if not words:
        raise EmptyInputError(f"no word tokens in {sentence.raw!r}")
    unknown_rank = len(freq_table) + 1
    mean_log_rank = sum(
        math.log(freq_table.get(w, unknown_rank)) for w in words
    ) / len(words)
    return FeatureVector(
        n_chars=sentence.char_count,
        n_words=len(words),
        mean_log_word_rank=mean_log_rank,
        fkgl=fkgl(sentence.raw),
    )


def load_frequency_table(path) -> dict[str, int]:
    """Read a token-per-line frequency table; line number is the 1-based rank.

    Lines are trimmed and duplicates keep their first (lowest) rank.
    """
    table: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for rank, line in enumerate(handle, start=1):
            token = line.strip()
            if token:
                table.setdefault(token, rank)
    return table
