import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelsimp.errors import EmptyInputError
from levelsimp.textcore import (
    count_syllables,
    extract_features,
    fkgl,
    load_frequency_table,
    split_sentences,
    tokenize,
)

from oracles import fkgl_oracle, syllables_oracle


class TestTokenize:
    def test_punctuation_split(self):
        assert list(tokenize("The cat.").tokens) == ["the", "cat", "."]

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            tokenize("")

    def test_whitespace_only(self):
        with pytest.raises(EmptyInputError):
            tokenize("   \t\n")

    def test_whitespace_collapse(self):
        assert list(tokenize("A  B").tokens) == ["a", "b"]

    def test_char_count_excludes_whitespace(self):
        sent = tokenize("The cat.")
        assert sent.char_count == len("Thecat.")

    def test_apostrophes_split(self):
        assert list(tokenize("don't").tokens) == ["don", "'", "t"]

    @given(st.text(max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_idempotence(self, text):
        try:
            first = tokenize(text).tokens
        except EmptyInputError:
            return
        assert tokenize(" ".join(first)).tokens == first

    @given(st.text(alphabet="abc XY.12!?", min_size=1, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_nonempty_when_alnum_present(self, text):
        if any(ch.isalnum() for ch in text):
            assert len(tokenize(text).tokens) >= 1


class TestSyllables:
    @pytest.mark.parametrize(
        "word,count",
        [
            ("cat", 1),
            ("table", 2),
            ("strength", 1),
            ("cake", 1),
            ("more", 1),
            ("see", 1),
            ("the", 1),
            ("little", 2),
            ("apple", 2),
            ("immediately", 5),
        ],
    )
    def test_known_words(self, word, count):
        assert count_syllables(word) == count

    def test_empty_word(self):
        with pytest.raises(EmptyInputError):
            count_syllables("")

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=15))
    @settings(max_examples=300, deadline=None)
    def test_at_least_one_and_matches_oracle(self, word):
        count = count_syllables(word)
        assert count >= 1
        assert count == syllables_oracle(word)


class TestSplitSentences:
    def test_two_sentences(self):
        assert len(split_sentences("Go. Stop.")) == 2

    def test_no_terminal_punctuation(self):
        assert len(split_sentences("no punctuation")) == 1

    def test_abbreviations_split_literally(self):
        # documented non-goal: "Dr." ends a sentence under the stated rule
        assert len(split_sentences("Dr. Smith left.")) == 2

    def test_exclamation_and_question(self):
        assert len(split_sentences("Really? Yes! Fine.")) == 3


class TestFkgl:
    def test_single_word(self):
        assert fkgl("Go.") == pytest.approx(-3.40, abs=1e-9)

    def test_cat_sentence(self):
        assert fkgl("The cat sat on the mat.") == pytest.approx(-1.45, abs=1e-9)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            fkgl("")

    def test_punctuation_only(self):
        with pytest.raises(EmptyInputError):
            fkgl("...")

    def test_doubling_invariance(self):
        text = "The cat sat. A dog ran away quickly."
        assert fkgl(text + " " + text) == pytest.approx(fkgl(text), abs=1e-12)

    def test_matches_oracle_on_multisentence_text(self):
        text = "The weary traveler finally rested. Every journey ends."
        expected = fkgl_oracle(
            [
                ["the", "weary", "traveler", "finally", "rested"],
                ["every", "journey", "ends"],
            ]
        )
        assert fkgl(text) == pytest.approx(expected, abs=1e-12)


class TestExtractFeatures:
    def test_simple_counts(self):
        feats = extract_features(tokenize("The cat."), {"the": 1, "cat": 2})
        assert feats.n_words == 2
        assert feats.n_chars == 7
        assert feats.mean_log_word_rank == pytest.approx(
            (math.log(1) + math.log(2)) / 2
        )

    def test_unknown_word_rank(self):
        table = {f"w{i}": i + 1 for i in range(10)}
        feats = extract_features(tokenize("zebra"), table)
        assert feats.mean_log_word_rank == pytest.approx(math.log(11))

    def test_punctuation_only_sentence(self):
        with pytest.raises(EmptyInputError):
            extract_features(tokenize("."), {})

    def test_deterministic(self):
        table = {"the": 1, "cat": 2}
        a = extract_features(tokenize("The cat."), table)
        b = extract_features(tokenize("The cat."), table)
        assert a == b

    def test_invariants(self):
        feats = extract_features(tokenize("A ship sailed away."), {})
        assert feats.n_words >= 1
        assert feats.n_chars >= feats.n_words
        assert feats.mean_log_word_rank >= 0.0


class TestFrequencyTable:
    def test_rank_is_line_number_and_duplicates_keep_first(self, tmp_path):
        path = tmp_path / "freq.txt"
        path.write_text("the\ncat\nthe\ndog\n", encoding="utf-8")
        table = load_frequency_table(path)
        assert table == {"the": 1, "cat": 2, "dog": 4}

    def test_lines_are_trimmed(self, tmp_path):
        path = tmp_path / "freq.txt"
        path.write_text("  the \ncat\n", encoding="utf-8")
        assert load_frequency_table(path) == {"the": 1, "cat": 2}
