"""Level-conditioned encoder-decoder trained with weighted cross-entropy.

A deliberately small architecture, fully hand-differentiated in numpy:

* tied input embeddings (encoder and decoder share the table),
* single-layer bidirectional tanh-RNN encoder,
* single-layer tanh-RNN decoder with additive attention over the encoder
  states, initialized from the two final directional states,
* output projection from [decoder state; context] to vocabulary logits.

The target level is selected by prepending a control token (``<SIMP_3>`` for
level 3) to the encoder input.  Training minimizes

    loss = -(1/M) * sum_j w_j * sum_t log p(label_{j,t})

i.e. per-sequence log-likelihoods are summed (not length-normalized), scaled
by the example weight, and averaged over the M examples of the batch.  With
all weights 1 this is exactly the mean sequence negative log-likelihood.

Everything runs in float64 with a fixed summation order, so training is
bit-reproducible for a given seed and analytic gradients can be checked
against central finite differences.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    EmptyCorpusError,
    LevelOutOfRangeError,
    SequenceTooLongError,
)
from .textcore import tokenize

__all__ = [
    "Vocab",
    "Batch",
    "Seq2SeqConfig",
    "LevelConditionedSeq2Seq",
    "prepend_level_token",
    "level_token",
    "weighted_ce_loss",
    "save_seq2seq",
    "load_seq2seq",
]

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")

MODEL_FORMAT_VERSION = 1

_NEG_INF = -1e30


def level_token(level: int) -> str:
    return f"<SIMP_{level}>"


def prepend_level_token(tokens, level: int, num_levels: int) -> list[str]:
    """Prepend the control token for ``level`` (1..num_levels)."""
    if not 1 <= level <= num_levels:
        raise LevelOutOfRangeError(
            f"level {level} outside 1..{num_levels}"
        )
    return [level_token(level)] + list(tokens)


class Vocab:
    """Dense token -> id map with PAD/BOS/EOS/UNK and level-token specials."""

    def __init__(self, tokens: list[str], num_levels: int):
        self.num_levels = num_levels
        self.id_to_token = list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")
        for i, tok in enumerate(SPECIAL_TOKENS):
            if self.id_to_token[i] != tok:
                raise ValueError(f"token {i} must be {tok}")
        for lvl in range(1, num_levels + 1):
            if level_token(lvl) not in self.token_to_id:
                raise ValueError(f"missing level token {level_token(lvl)}")

    def __len__(self) -> int:
        return len(self.id_to_token)

    @classmethod
    def build(cls, token_seqs, num_levels: int, min_freq: int = 1) -> "Vocab":
        """Vocabulary from corpus token sequences, frequency-then-lexical order."""
        counts = Counter(t for seq in token_seqs for t in seq)
        tokens = list(SPECIAL_TOKENS) + [
            level_token(lvl) for lvl in range(1, num_levels + 1)
        ]
        reserved = set(tokens)
        for token, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            if counts[token] >= min_freq and token not in reserved:
                tokens.append(token)
        return cls(tokens, num_levels)

    def encode(self, tokens) -> list[int]:
        return [self.token_to_id.get(t, UNK) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]


@dataclass
class Batch:
    """Padded id arrays for one training step.

    ``src_ids`` carry the level token in position 0; ``tgt_in`` is
    BOS-prefixed and ``tgt_out`` EOS-suffixed; masks are 1.0 on real tokens.
    """

    src_ids: np.ndarray  # (B, Ts) int64
    src_mask: np.ndarray  # (B, Ts) float64
    tgt_in: np.ndarray  # (B, Tt) int64
    tgt_out: np.ndarray  # (B, Tt) int64
    tgt_mask: np.ndarray  # (B, Tt) float64
    weights: np.ndarray  # (B,) float64


@dataclass
class Seq2SeqConfig:
    d_model: int = 64
    learning_rate: float = 0.1
    n_steps: int = 600
    batch_size: int = 16
    max_len: int = 24
    min_freq: int = 1
    clip_norm: float = 5.0
    seed: int = 0


_PARAM_INITS = (
    # name, shape builder (d=d_model, v=vocab size), zero-init flag
    ("emb", lambda d, v: (v, d), False),
    ("enc_fw_w", lambda d, v: (d, d), False),
    ("enc_fw_u", lambda d, v: (d, d), False),
    ("enc_fw_b", lambda d, v: (d,), True),
    ("enc_bw_w", lambda d, v: (d, d), False),
    ("enc_bw_u", lambda d, v: (d, d), False),
    ("enc_bw_b", lambda d, v: (d,), True),
    ("init_w", lambda d, v: (2 * d, d), False),
    ("init_b", lambda d, v: (d,), True),
    ("att_q", lambda d, v: (d, d), False),
    ("att_k", lambda d, v: (2 * d, d), False),
    ("att_b", lambda d, v: (d,), True),
    ("att_v", lambda d, v: (d,), False),
    ("dec_in_w", lambda d, v: (d, d), False),
    ("dec_u", lambda d, v: (d, d), False),
    ("dec_ctx", lambda d, v: (2 * d, d), False),
    ("dec_b", lambda d, v: (d,), True),
    ("out_w", lambda d, v: (3 * d, v), False),
    ("out_b", lambda d, v: (v,), True),
)


def init_params(d_model: int, vocab_size: int, rng) -> dict[str, np.ndarray]:
    params = {}
    for name, shape_fn, zero in _PARAM_INITS:
        shape = shape_fn(d_model, vocab_size)
        if zero:
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.uniform(-0.08, 0.08, size=shape)
    return params


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _encoder_scan(x, mask, w, u, b, reverse: bool):
    """Masked tanh-RNN scan; states at padded positions are zeroed so the
    reverse direction starts fresh at each sequence's true last token."""
    n, t_max, d = x.shape
    states = np.zeros((n, t_max, d))
    h = np.zeros((n, d))
    steps = range(t_max - 1, -1, -1) if reverse else range(t_max)
    for t in steps:
        h = mask[:, t : t + 1] * np.tanh(x[:, t] @ w + h @ u + b)
        states[:, t] = h
    return states


def forward(params: dict, batch: Batch, max_len: int):
    """Teacher-forced forward pass.

    Returns (log_probs over the vocabulary at every target position, cache
    for the backward pass).  Raises SequenceTooLongError when the padded
    batch exceeds ``max_len``.
    """
    if batch.src_ids.shape[1] > max_len or batch.tgt_in.shape[1] > max_len:
        raise SequenceTooLongError(
            f"batch length exceeds max_len={max_len}"
        )
    emb = params["emb"]
    n, t_src = batch.src_ids.shape
    t_tgt = batch.tgt_in.shape[1]
    d = emb.shape[1]

    x_src = emb[batch.src_ids]
    hf = _encoder_scan(
        x_src, batch.src_mask, params["enc_fw_w"], params["enc_fw_u"],
        params["enc_fw_b"], reverse=False,
    )
    hb = _encoder_scan(
        x_src, batch.src_mask, params["enc_bw_w"], params["enc_bw_u"],
        params["enc_bw_b"], reverse=True,
    )
    henc = np.concatenate([hf, hb], axis=2)  # (B, Ts, 2d)

    lengths = batch.src_mask.sum(axis=1).astype(np.int64)
    hf_last = hf[np.arange(n), lengths - 1]
    init_in = np.concatenate([hf_last, hb[:, 0]], axis=1)
    s0 = np.tanh(init_in @ params["init_w"] + params["init_b"])

    keys = henc @ params["att_k"]  # (B, Ts, d)
    x_tgt = emb[batch.tgt_in]

    states = np.zeros((n, t_tgt + 1, d))
    states[:, 0] = s0
    alphas = np.zeros((n, t_tgt, t_src))
    contexts = np.zeros((n, t_tgt, 2 * d))
    att_tanh = np.zeros((n, t_tgt, t_src, d))
    logits = np.zeros((n, t_tgt, len(emb)))

    att_v = params["att_v"]
    for t in range(t_tgt):
        s_prev = states[:, t]
        pre = np.tanh(
            (s_prev @ params["att_q"])[:, None, :] + keys + params["att_b"]
        )
        scores = pre @ att_v
        scores = np.where(batch.src_mask > 0, scores, _NEG_INF)
        scores -= scores.max(axis=1, keepdims=True)
        exps = np.exp(scores) * batch.src_mask
        alpha = exps / exps.sum(axis=1, keepdims=True)
        ctx = np.einsum("bt,btd->bd", alpha, henc)
        s = np.tanh(
            x_tgt[:, t] @ params["dec_in_w"]
            + s_prev @ params["dec_u"]
            + ctx @ params["dec_ctx"]
            + params["dec_b"]
        )
        feat = np.concatenate([s, ctx], axis=1)
        logits[:, t] = feat @ params["out_w"] + params["out_b"]
        states[:, t + 1] = s
        alphas[:, t] = alpha
        contexts[:, t] = ctx
        att_tanh[:, t] = pre

    log_probs = _log_softmax(logits)
    cache = {
        "x_src": x_src, "hf": hf, "hb": hb, "henc": henc, "keys": keys,
        "lengths": lengths, "init_in": init_in, "s0": s0, "x_tgt": x_tgt,
        "states": states, "alphas": alphas, "contexts": contexts,
        "att_tanh": att_tanh, "log_probs": log_probs,
    }
    return log_probs, cache


def weighted_ce_loss(log_probs: np.ndarray, batch: Batch) -> float:
    """-(1/M) sum_j w_j sum_t log p(label); PAD positions excluded."""
    n, t_tgt, _ = log_probs.shape
    picked = log_probs[
        np.arange(n)[:, None], np.arange(t_tgt)[None, :], batch.tgt_out
    ]
    per_example = (picked * batch.tgt_mask).sum(axis=1)
    return float(np.mean(-batch.weights * per_example))


def backward(params: dict, batch: Batch, cache: dict) -> dict[str, np.ndarray]:
    """Gradients of weighted_ce_loss w.r.t. every parameter."""
    n, t_tgt, vocab = cache["log_probs"].shape
    t_src = batch.src_ids.shape[1]
    d = params["emb"].shape[1]
    grads = {k: np.zeros_like(v) for k, v in params.items()}

    probs = np.exp(cache["log_probs"])
    scale = (batch.weights / n)[:, None] * batch.tgt_mask  # (B, Tt)
    d_logits = probs * scale[:, :, None]
    d_logits[
        np.arange(n)[:, None], np.arange(t_tgt)[None, :], batch.tgt_out
    ] -= scale

    d_henc = np.zeros((n, t_src, 2 * d))
    d_keys = np.zeros((n, t_src, d))
    d_s_carry = np.zeros((n, d))

    att_v = params["att_v"]
    for t in range(t_tgt - 1, -1, -1):
        s_t = cache["states"][:, t + 1]
        s_prev = cache["states"][:, t]
        ctx = cache["contexts"][:, t]
        alpha = cache["alphas"][:, t]
        pre = cache["att_tanh"][:, t]
        dl = d_logits[:, t]  # (B, V)

        feat = np.concatenate([s_t, ctx], axis=1)
        grads["out_w"] += feat.T @ dl
        grads["out_b"] += dl.sum(axis=0)
        d_feat = dl @ params["out_w"].T
        d_s = d_feat[:, :d] + d_s_carry
        d_ctx = d_feat[:, d:]

        d_pre = d_s * (1.0 - s_t * s_t)
        grads["dec_in_w"] += cache["x_tgt"][:, t].T @ d_pre
        np.add.at(grads["emb"], batch.tgt_in[:, t], d_pre @ params["dec_in_w"].T)
        grads["dec_u"] += s_prev.T @ d_pre
        grads["dec_ctx"] += ctx.T @ d_pre
        grads["dec_b"] += d_pre.sum(axis=0)
        d_s_prev = d_pre @ params["dec_u"].T
        d_ctx = d_ctx + d_pre @ params["dec_ctx"].T

        # attention backward
        d_alpha = np.einsum("bd,btd->bt", d_ctx, cache["henc"])
        d_henc += alpha[:, :, None] * d_ctx[:, None, :]
        d_scores = alpha * (d_alpha - (d_alpha * alpha).sum(axis=1, keepdims=True))
        d_att_pre = d_scores[:, :, None] * att_v * (1.0 - pre * pre)
        grads["att_v"] += np.einsum("bts,bt->s", pre, d_scores)
        grads["att_b"] += d_att_pre.sum(axis=(0, 1))
        d_q = d_att_pre.sum(axis=1)
        grads["att_q"] += s_prev.T @ d_q
        d_s_prev = d_s_prev + d_q @ params["att_q"].T
        d_keys += d_att_pre

        d_s_carry = d_s_prev

    grads["att_k"] += np.einsum("bte,btd->ed", cache["henc"], d_keys)
    d_henc += d_keys @ params["att_k"].T

    # decoder initial state
    d_pre0 = d_s_carry * (1.0 - cache["s0"] * cache["s0"])
    grads["init_w"] += cache["init_in"].T @ d_pre0
    grads["init_b"] += d_pre0.sum(axis=0)
    d_init_in = d_pre0 @ params["init_w"].T

    d_hf = d_henc[:, :, :d].copy()
    d_hb = d_henc[:, :, d:].copy()
    d_hf[np.arange(n), cache["lengths"] - 1] += d_init_in[:, :d]
    d_hb[:, 0] += d_init_in[:, d:]

    # forward-direction encoder BPTT (dependencies run t-1 -> t)
    carry = np.zeros((n, d))
    for t in range(t_src - 1, -1, -1):
        h_t = cache["hf"][:, t]
        d_h = (d_hf[:, t] + carry) * batch.src_mask[:, t : t + 1]
        d_pre = d_h * (1.0 - h_t * h_t)
        grads["enc_fw_w"] += cache["x_src"][:, t].T @ d_pre
        grads["enc_fw_b"] += d_pre.sum(axis=0)
        np.add.at(grads["emb"], batch.src_ids[:, t], d_pre @ params["enc_fw_w"].T)
        if t > 0:
            grads["enc_fw_u"] += cache["hf"][:, t - 1].T @ d_pre
        carry = d_pre @ params["enc_fw_u"].T

    # backward-direction encoder BPTT (dependencies run t+1 -> t)
    carry = np.zeros((n, d))
    for t in range(t_src):
        h_t = cache["hb"][:, t]
        d_h = (d_hb[:, t] + carry) * batch.src_mask[:, t : t + 1]
        d_pre = d_h * (1.0 - h_t * h_t)
        grads["enc_bw_w"] += cache["x_src"][:, t].T @ d_pre
        grads["enc_bw_b"] += d_pre.sum(axis=0)
        np.add.at(grads["emb"], batch.src_ids[:, t], d_pre @ params["enc_bw_w"].T)
        if t + 1 < t_src:
            grads["enc_bw_u"] += cache["hb"][:, t + 1].T @ d_pre
        carry = d_pre @ params["enc_bw_u"].T

    return grads


def clip_gradients(grads: dict, clip_norm: float) -> None:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > clip_norm:
        factor = clip_norm / norm
        for g in grads.values():
            g *= factor


@dataclass
class EncodedExample:
    src: list[int]
    tgt: list[int]
    weight: float


def make_batch(examples: list[EncodedExample]) -> Batch:
    n = len(examples)
    t_src = max(len(e.src) for e in examples)
    t_tgt = max(len(e.tgt) for e in examples) + 1  # BOS / EOS shift
    src_ids = np.full((n, t_src), PAD, dtype=np.int64)
    src_mask = np.zeros((n, t_src))
    tgt_in = np.full((n, t_tgt), PAD, dtype=np.int64)
    tgt_out = np.full((n, t_tgt), PAD, dtype=np.int64)
    tgt_mask = np.zeros((n, t_tgt))
    weights = np.zeros(n)
    for i, ex in enumerate(examples):
        src_ids[i, : len(ex.src)] = ex.src
        src_mask[i, : len(ex.src)] = 1.0
        tgt_in[i, 0] = BOS
        tgt_in[i, 1 : len(ex.tgt) + 1] = ex.tgt
        tgt_out[i, : len(ex.tgt)] = ex.tgt
        tgt_out[i, len(ex.tgt)] = EOS
        tgt_mask[i, : len(ex.tgt) + 1] = 1.0
        weights[i] = ex.weight
    return Batch(src_ids, src_mask, tgt_in, tgt_out, tgt_mask, weights)


class LevelConditionedSeq2Seq(BaseEstimator):
    """Estimator wrapper around the encoder-decoder.

    ``fit`` trains from pseudo-labeled paraphrase examples, conditioning each
    source on its predicted level token and scaling each example's loss by
    its confidence weight.  ``fine_tune`` continues training on gold parallel
    data with unit weights and gold target-level tokens.
    """

    def __init__(
        self,
        num_levels: int = 4,
        d_model: int = 64,
        learning_rate: float = 0.1,
        n_steps: int = 600,
        batch_size: int = 16,
        max_len: int = 24,
        min_freq: int = 1,
        clip_norm: float = 5.0,
        seed: int = 0,
    ):
        self.num_levels = num_levels
        self.d_model = d_model
        self.learning_rate = learning_rate
        self.n_steps = n_steps
        self.batch_size = batch_size
        self.max_len = max_len
        self.min_freq = min_freq
        self.clip_norm = clip_norm
        self.seed = seed

    @property
    def config(self) -> Seq2SeqConfig:
        return Seq2SeqConfig(
            d_model=self.d_model,
            learning_rate=self.learning_rate,
            n_steps=self.n_steps,
            batch_size=self.batch_size,
            max_len=self.max_len,
            min_freq=self.min_freq,
            clip_norm=self.clip_norm,
            seed=self.seed,
        )

    # -- data preparation --------------------------------------------------

    def _encode_pseudo(self, examples) -> tuple[list[EncodedExample], int]:
        """Encode pseudo examples; sources take their predicted level token.

        Examples whose predicted source level has no control token
        (level 0 = "original", or anything outside 1..K) are skipped, since
        the generator conditions only on levels 1..K.
        """
        encoded = []
        skipped = 0
        for ex in examples:
            if not 1 <= ex.src_level <= self.num_levels:
                skipped += 1
                continue
            src_tokens = prepend_level_token(
                tokenize(ex.source).tokens, ex.src_level, self.num_levels
            )
            tgt_tokens = list(tokenize(ex.target).tokens)
            encoded.append(
                EncodedExample(
                    src=self.vocab_.encode(src_tokens[: self.max_len]),
                    tgt=self.vocab_.encode(tgt_tokens[: self.max_len - 1]),
                    weight=float(ex.weight),
                )
            )
        return encoded, skipped

    def _encode_parallel(self, examples) -> list[EncodedExample]:
        """Encode gold (source, target, level) triples with unit weights."""
        encoded = []
        for source, target, level in examples:
            src_tokens = prepend_level_token(
                tokenize(source).tokens, level, self.num_levels
            )
            tgt_tokens = list(tokenize(target).tokens)
            encoded.append(
                EncodedExample(
                    src=self.vocab_.encode(src_tokens[: self.max_len]),
                    tgt=self.vocab_.encode(tgt_tokens[: self.max_len - 1]),
                    weight=1.0,
                )
            )
        return encoded

    # -- training ------------------------------------------------------------

    def _run_gd(self, encoded, n_steps, learning_rate, rng) -> list[float]:
        curve = []
        order = rng.permutation(len(encoded))
        cursor = 0
        for _ in range(n_steps):
            if cursor >= len(encoded):
                order = rng.permutation(len(encoded))
                cursor = 0
            chosen = [encoded[i] for i in order[cursor : cursor + self.batch_size]]
            cursor += self.batch_size
            batch = make_batch(chosen)
            log_probs, cache = forward(self.params_, batch, self.max_len)
            curve.append(weighted_ce_loss(log_probs, batch))
            grads = backward(self.params_, batch, cache)
            clip_gradients(grads, self.clip_norm)
            for name, grad in grads.items():
                self.params_[name] -= learning_rate * grad
        return curve

    def fit(self, pseudo_examples) -> "LevelConditionedSeq2Seq":
        """Train from scratch on a pseudo-labeled corpus."""
        examples = list(pseudo_examples)
        if not examples:
            raise EmptyCorpusError("empty pseudo corpus")
        token_seqs = []
        for ex in examples:
            token_seqs.append(tokenize(ex.source).tokens)
            token_seqs.append(tokenize(ex.target).tokens)
        self.vocab_ = Vocab.build(token_seqs, self.num_levels, self.min_freq)
        encoded, self.n_skipped_ = self._encode_pseudo(examples)
        if not encoded:
            raise EmptyCorpusError(
                "no pseudo examples with a source level in 1..K"
            )
        rng = np.random.default_rng(self.seed)
        self.params_ = init_params(self.d_model, len(self.vocab_), rng)
        self.loss_curve_ = self._run_gd(
            encoded, self.n_steps, self.learning_rate, rng
        )
        return self

    def fine_tune(
        self,
        parallel_examples,
        n_steps: int | None = None,
        learning_rate: float | None = None,
        seed: int | None = None,
    ) -> "LevelConditionedSeq2Seq":
        """Continue training on gold (source, target, level) triples.

        Gold labels are trusted: every weight is 1 and the control token is
        the example's gold target level.  The vocabulary stays frozen.
        """
        self._check_fitted()
        examples = list(parallel_examples)
        if not examples:
            raise EmptyCorpusError("empty fine-tuning set")
        encoded = self._encode_parallel(examples)
        rng = np.random.default_rng(self.seed + 1 if seed is None else seed)
        curve = self._run_gd(
            encoded,
            self.n_steps if n_steps is None else n_steps,
            self.learning_rate if learning_rate is None else learning_rate,
            rng,
        )
        self.loss_curve_ = list(getattr(self, "loss_curve_", [])) + curve
        return self

    # -- inference -----------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("model is not fitted")

    def generate(self, source_tokens, level: int, max_len: int | None = None):
        """Greedy decode for ``source_tokens`` at the requested level.

        Stops at EOS or after ``max_len`` tokens; argmax ties resolve to the
        lowest token id.  Returns plain token strings.
        """
        self._check_fitted()
        limit = self.max_len if max_len is None else max_len
        src = prepend_level_token(source_tokens, level, self.num_levels)
        ids = self.vocab_.encode(src)
        out_ids: list[int] = []
        prev = BOS
        # Re-encode once; decode step by step through the batched forward
        # with a growing prefix would be wasteful, so run a manual loop.
        batch_src = np.asarray([ids], dtype=np.int64)
        src_mask = np.ones((1, len(ids)))
        emb = self.params_["emb"]
        x_src = emb[batch_src]
        hf = _encoder_scan(
            x_src, src_mask, self.params_["enc_fw_w"],
            self.params_["enc_fw_u"], self.params_["enc_fw_b"], reverse=False,
        )
        hb = _encoder_scan(
            x_src, src_mask, self.params_["enc_bw_w"],
            self.params_["enc_bw_u"], self.params_["enc_bw_b"], reverse=True,
        )
        henc = np.concatenate([hf, hb], axis=2)
        keys = henc @ self.params_["att_k"]
        init_in = np.concatenate([hf[:, -1], hb[:, 0]], axis=1)
        s = np.tanh(init_in @ self.params_["init_w"] + self.params_["init_b"])
        for _ in range(limit):
            pre = np.tanh(
                (s @ self.params_["att_q"])[:, None, :]
                + keys
                + self.params_["att_b"]
            )
            scores = pre @ self.params_["att_v"]
            scores -= scores.max(axis=1, keepdims=True)
            exps = np.exp(scores)
            alpha = exps / exps.sum(axis=1, keepdims=True)
            ctx = np.einsum("bt,btd->bd", alpha, henc)
            s = np.tanh(
                emb[prev] @ self.params_["dec_in_w"]
                + s @ self.params_["dec_u"]
                + ctx @ self.params_["dec_ctx"]
                + self.params_["dec_b"]
            )
            logits = np.concatenate([s, ctx], axis=1) @ self.params_["out_w"] + (
                self.params_["out_b"]
            )
            prev = int(np.argmax(logits[0]))
            if prev == EOS:
                break
            out_ids.append(prev)
        return self.vocab_.decode(out_ids)

    def simplify(self, text: str, level: int, max_len: int | None = None) -> str:
        """Convenience wrapper: tokenize, generate, join with spaces."""
        return " ".join(self.generate(tokenize(text).tokens, level, max_len))

    # -- verification ----------------------------------------------------------

    def grad_check(
        self,
        batch: Batch,
        epsilon: float = 1e-5,
        samples_per_param: int = 4,
        seed: int = 0,
    ) -> float:
        """Max relative error between analytic and central-difference grads.

        Samples a few entries of every parameter tensor.  The denominator is
        floored at 1e-6 so that near-zero gradient pairs, which agree only up
        to finite-difference roundoff (~1e-10 here), are compared absolutely;
        when both gradients are exactly zero the error is defined as 0.
        """
        self._check_fitted()
        log_probs, cache = forward(self.params_, batch, self.max_len)
        grads = backward(self.params_, batch, cache)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for name, tensor in self.params_.items():
            flat = tensor.reshape(-1)
            n_take = min(samples_per_param, flat.size)
            for idx in rng.choice(flat.size, size=n_take, replace=False):
                original = flat[idx]
                flat[idx] = original + epsilon
                up, _ = forward(self.params_, batch, self.max_len)
                loss_up = weighted_ce_loss(up, batch)
                flat[idx] = original - epsilon
                down, _ = forward(self.params_, batch, self.max_len)
                loss_down = weighted_ce_loss(down, batch)
                flat[idx] = original
                numeric = (loss_up - loss_down) / (2.0 * epsilon)
                analytic = grads[name].reshape(-1)[idx]
                if numeric == 0.0 and analytic == 0.0:
                    continue
                denom = max(abs(numeric) + abs(analytic), 1e-6)
                worst = max(worst, abs(numeric - analytic) / denom)
        return worst


def save_seq2seq(model: LevelConditionedSeq2Seq, path) -> None:
    """Serialize config, vocabulary, and parameters to versioned JSON."""
    model._check_fitted()
    document = {
        "version": MODEL_FORMAT_VERSION,
        "num_levels": model.num_levels,
        "d_model": model.d_model,
        "max_len": model.max_len,
        "vocab": model.vocab_.id_to_token,
        "params": {
            name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
            for name, t in model.params_.items()
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, sort_keys=True)
        handle.write("\n")


def load_seq2seq(path) -> LevelConditionedSeq2Seq:
    """Restore a model saved by :func:`save_seq2seq`.

    Round-tripping reproduces forward outputs bit for bit (JSON floats are
    shortest round-trip representations).
    """
    with open(path, encoding="utf-8") as handle:
        document = json.load(handle)
    if document.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version {document.get('version')!r}")
    model = LevelConditionedSeq2Seq(
        num_levels=int(document["num_levels"]),
        d_model=int(document["d_model"]),
        max_len=int(document["max_len"]),
    )
    model.vocab_ = Vocab(document["vocab"], model.num_levels)
    model.params_ = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in document["params"].items()
    }
    return model
