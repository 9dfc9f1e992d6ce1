"""Independent brute-force oracles for metric tests.

These were written before the package implementation and deliberately avoid
sharing any code with it.  Everything here is slow, literal, and enumerative:
n-gram multisets are built by explicit loops, score combination follows the
written definitions step by step, and no numpy vectorization is used.  Tests
compare ``levelsimp`` against these functions and against values frozen from
them.
"""

import math
from collections import Counter


def ngrams(tokens, n):
    """All contiguous n-grams of a token list, as tuples."""
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_oracle(hyp, refs):
    """Sentence BLEU, n up to 4, add-one smoothing on n >= 2 only.

    Brevity penalty uses the reference whose length is closest to the
    hypothesis (ties toward the shorter reference).  A zero unigram
    precision short-circuits to 0.0.
    """
    assert hyp and all(refs)
    log_sum = 0.0
    for n in range(1, 5):
        hyp_grams = Counter(ngrams(hyp, n))
        matched = 0
        for gram, count in hyp_grams.items():
            best = max(ngrams(ref, n).count(gram) for ref in refs)
            matched += min(count, best)
        total = sum(hyp_grams.values())
        if n == 1:
            if matched == 0:
                return 0.0
            log_sum += 0.25 * math.log(matched / total)
        else:
            log_sum += 0.25 * math.log((matched + 1) / (total + 1))
    closest = min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
    brevity = 1.0 if len(hyp) >= closest else math.exp(1.0 - closest / len(hyp))
    return brevity * math.exp(log_sum)


def _ratio(numerator, denominator_size):
    """Precision/recall with the 0/0 := 1 convention for empty sets."""
    if denominator_size == 0:
        return 1.0
    return numerator / denominator_size


def _f1(p, r):
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def sari_oracle(source, hyp, refs):
    """SARI via exhaustive keep/add/delete multiset computation.

    Per n in 1..4: keep-F1 and delete-precision over reference-replicated
    counters, add-F1 over plain sets; every 0/0 precision or recall ratio is
    1; the final score is 100 times the mean over n of the per-n mean of the
    three components.
    """
    assert source and hyp and refs and all(refs)
    numref = len(refs)
    per_n = []
    for n in range(1, 5):
        src = Counter({g: c * numref for g, c in Counter(ngrams(source, n)).items()})
        cand = Counter({g: c * numref for g, c in Counter(ngrams(hyp, n)).items()})
        ref = Counter()
        for r in refs:
            ref.update(ngrams(r, n))

        # keep: grams retained by the candidate, judged against the references
        keep_cand = src & cand
        keep_good = keep_cand & ref
        keep_all = src & ref
        keep_p = _ratio(
            sum(keep_good[g] / keep_cand[g] for g in keep_good), len(keep_cand)
        )
        keep_r = _ratio(
            sum(keep_good[g] / keep_all[g] for g in keep_good), len(keep_all)
        )
        if len(keep_cand) == 0 and len(keep_all) == 0:
            keep_f1 = 1.0
        else:
            keep_f1 = _f1(keep_p, keep_r)

        # delete: candidate deletions intersected with reference deletions,
        # precision only
        del_cand = src - cand
        del_ref = src - ref
        del_good = del_cand & del_ref
        del_p = _ratio(
            sum(del_good[g] / del_cand[g] for g in del_good), len(del_cand)
        )

        # add: plain set semantics
        add_cand = set(cand) - set(src)
        add_good = add_cand & set(ref)
        add_all = set(ref) - set(src)
        add_p = _ratio(len(add_good), len(add_cand))
        add_r = _ratio(len(add_good), len(add_all))
        if len(add_cand) == 0 and len(add_all) == 0:
            add_f1 = 1.0
        else:
            add_f1 = _f1(add_p, add_r)

        per_n.append((keep_f1 + del_p + add_f1) / 3.0)
    return 100.0 * sum(per_n) / 4.0


def syllables_oracle(word):
    """Vowel-group count with the silent-e and consonant+le rules."""
    vowels = set("aeiouy")
    groups = 0
    prev_vowel = False
    for ch in word:
        is_vowel = ch in vowels
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    if (
        groups > 1
        and len(word) >= 2
        and word.endswith("e")
        and word[-2] not in vowels
        and not (len(word) >= 3 and word.endswith("le") and word[-3] not in vowels)
    ):
        groups -= 1
    return max(groups, 1)


def fkgl_oracle(word_tokens_per_sentence):
    """FKGL from pre-tokenized sentences (word tokens only, no punctuation)."""
    n_sentences = len(word_tokens_per_sentence)
    words = [w for sent in word_tokens_per_sentence for w in sent]
    n_words = len(words)
    n_syllables = sum(syllables_oracle(w) for w in words)
    return 0.39 * (n_words / n_sentences) + 11.8 * (n_syllables / n_words) - 15.59
