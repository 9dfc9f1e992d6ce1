"""End-to-end experiment pipeline and evaluation harness.

One experiment runs, per requested method: generate data -> train classifier
-> pseudo-label -> train generator [-> fine-tune] -> evaluate, all from one
master seed, then aggregates a cross-method rank table.  Methods share the
synthetic data and, where their settings agree, the classifier and pseudo
corpus, so "baseline_unweighted" vs "lcwl" isolates the loss weighting.

Method semantics (orthogonal axes):

* base "sce" / "lcwl_sce": the classifier trains with symmetric CE;
* base "lcwl" / "lcwl_sce": the generator loss uses confidence weights,
  otherwise every weight is forced to 1;
* "+ft": the generator is afterwards fine-tuned on the gold training split
  with unit weights and gold target-level tokens.

Every artifact is a pure function of the resolved config: rerunning a config
reproduces byte-identical files (the manifest records their checksums).
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .classifier import (
    LevelClassifier,
    PrecisionProfile,
    per_class_precision,
    save_classifier,
)
from .config import (
    SCE_BASES,
    WEIGHTED_BASES,
    ExperimentConfig,
    dump_config,
    parse_method,
)
from .corpus import (
    ParallelDataset,
    inject_label_noise,
    save_parallel,
    split,
    synth_generate,
    to_labeled_sentences,
)
from .errors import EmptyInputError
from .grammar import default_grammar_path, load_grammar
from .metrics import (
    Direction,
    average_rank,
    bleu,
    closer_to,
    format_rank_table,
    higher_better,
    sari,
)
from .pseudolabel import (
    build_pseudo_corpus,
    filter_paraphrases,
    filter_reason,
    write_pseudo_corpus,
)
from .seq2seq import LevelConditionedSeq2Seq, save_seq2seq
from .textcore import fkgl, tokenize

__all__ = [
    "run_experiment",
    "evaluate_generator",
    "rank_methods",
    "train_classifier_stage",
    "pseudo_label_stage",
    "train_generator_stage",
    "write_json",
    "sha256_file",
]


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, indent=1, sort_keys=True)
        handle.write("\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _stage_seeds(seed: int) -> dict[str, int]:
    """Independent per-stage seeds derived from the master seed."""
    names = ("data", "noise", "split", "classifier", "generator", "fine_tune")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {
        name: int(child.generate_state(1)[0])
        for name, child in zip(names, children)
    }


# -- pipeline stages ---------------------------------------------------------


def train_classifier_stage(
    cfg: ExperimentConfig,
    loss: str,
    train_set: ParallelDataset,
    val_set: ParallelDataset,
    freq_table: dict[str, int],
    seed: int,
) -> tuple[LevelClassifier, PrecisionProfile, dict]:
    """Fit the level classifier and profile it on the validation split."""
    texts, levels = to_labeled_sentences(train_set)
    clf = LevelClassifier(
        num_classes=cfg.num_levels + 1,
        freq_table=freq_table,
        loss=loss,
        alpha=cfg.classifier.alpha,
        beta=cfg.classifier.beta,
        log_floor=cfg.classifier.log_floor,
        learning_rate=cfg.classifier.learning_rate,
        n_steps=cfg.classifier.n_steps,
        batch_size=cfg.classifier.batch_size,
        seed=seed,
    ).fit(texts, levels)

    val_texts, val_levels = to_labeled_sentences(val_set)
    profile = per_class_precision(clf, val_texts, val_levels)
    predictions = clf.predict(val_texts)
    val_levels = np.asarray(val_levels)
    recall = []
    for k in range(cfg.num_levels + 1):
        mask = val_levels == k
        recall.append(float((predictions[mask] == k).mean()) if mask.any() else 0.0)
    summary = {
        "loss": loss,
        "val_accuracy": float((predictions == val_levels).mean()),
        "per_class_precision": [float(p) for p in profile.per_class],
        "per_class_recall": recall,
        "per_class_predictions": [int(s) for s in profile.support],
    }
    return clf, profile, summary


def pseudo_label_stage(
    cfg: ExperimentConfig,
    clf: LevelClassifier,
    profile: PrecisionProfile,
    pairs,
) -> tuple[list, dict]:
    """Filter the paraphrase pairs and label the survivors."""
    removals = {}
    for pair in pairs:
        reason = filter_reason(pair)
        if reason is not None:
            removals[reason] = removals.get(reason, 0) + 1
    survivors = filter_paraphrases(pairs)
    bleu_removed = 0
    if cfg.data.bleu_filter:
        kept = []
        for pair in survivors:
            score = bleu(tokenize(pair.source).tokens, [tokenize(pair.target).tokens])
            if cfg.data.bleu_lo <= score <= cfg.data.bleu_hi:
                kept.append(pair)
            else:
                bleu_removed += 1
        survivors = kept
    corpus = build_pseudo_corpus(clf, profile, survivors)
    summary = {
        "input_pairs": len(pairs),
        "removed_by_rule": removals,
        "removed_by_bleu_filter": bleu_removed,
        "labeled": len(corpus),
    }
    return corpus, summary


def train_generator_stage(
    cfg: ExperimentConfig,
    pseudo_corpus,
    unit_weights: bool,
    seed: int,
) -> LevelConditionedSeq2Seq:
    corpus = (
        [dataclasses.replace(ex, weight=1.0) for ex in pseudo_corpus]
        if unit_weights
        else list(pseudo_corpus)
    )
    gen = cfg.generator
    model = LevelConditionedSeq2Seq(
        num_levels=cfg.num_levels,
        d_model=gen.d_model,
        learning_rate=gen.learning_rate,
        n_steps=gen.n_steps,
        batch_size=gen.batch_size,
        max_len=gen.max_len,
        min_freq=gen.min_freq,
        clip_norm=gen.clip_norm,
        seed=seed,
    )
    return model.fit(corpus)


# -- evaluation ----------------------------------------------------------------


def reference_targets(test_set: ParallelDataset, num_levels: int) -> dict:
    """Ground-truth statistics per level, the targets for closer_to ranking."""
    targets = {}
    for level in range(1, num_levels + 1):
        examples = [ex for ex in test_set if ex.level == level]
        if not examples:
            continue
        fkgls = [fkgl(ex.target) for ex in examples]
        deltas = [fkgl(ex.source) - fkgl(ex.target) for ex in examples]
        targets[level] = {
            "fkgl": float(np.mean(fkgls)),
            "delta_fkgl": float(np.mean(deltas)),
            "count": len(examples),
        }
    return targets


def evaluate_generator(
    model: LevelConditionedSeq2Seq,
    test_set: ParallelDataset,
    num_levels: int,
    max_len: int | None = None,
) -> dict:
    """Per-level SARI/BLEU/FKGL/delta-FKGL of greedy generations.

    Empty generations score 0 for SARI and BLEU and are excluded from the
    FKGL means (their count is reported).
    """
    per_level: dict[int, dict[str, list[float]]] = {}
    empty_counts: dict[int, int] = {}
    for ex in test_set:
        src_tokens = tokenize(ex.source).tokens
        ref_tokens = tokenize(ex.target).tokens
        hyp_tokens = model.generate(src_tokens, ex.level, max_len)
        bucket = per_level.setdefault(
            ex.level, {"sari": [], "bleu": [], "fkgl": [], "delta_fkgl": []}
        )
        hyp_text = " ".join(hyp_tokens)
        try:
            hyp_fkgl = fkgl(hyp_text) if hyp_tokens else None
        except EmptyInputError:
            hyp_fkgl = None
        if hyp_tokens:
            bucket["sari"].append(sari(src_tokens, hyp_tokens, [ref_tokens]))
            bucket["bleu"].append(bleu(hyp_tokens, [ref_tokens]))
        else:
            bucket["sari"].append(0.0)
            bucket["bleu"].append(0.0)
        if hyp_fkgl is not None:
            bucket["fkgl"].append(hyp_fkgl)
            bucket["delta_fkgl"].append(fkgl(ex.source) - hyp_fkgl)
        else:
            empty_counts[ex.level] = empty_counts.get(ex.level, 0) + 1

    report = {"per_level": {}, "overall": {}}
    for level in sorted(per_level):
        bucket = per_level[level]
        report["per_level"][str(level)] = {
            "sari": float(np.mean(bucket["sari"])),
            "bleu": float(np.mean(bucket["bleu"])),
            "fkgl": float(np.mean(bucket["fkgl"])) if bucket["fkgl"] else 0.0,
            "delta_fkgl": (
                float(np.mean(bucket["delta_fkgl"])) if bucket["delta_fkgl"] else 0.0
            ),
            "count": len(bucket["sari"]),
            "empty_outputs": empty_counts.get(level, 0),
        }
    for metric in ("sari", "bleu", "fkgl", "delta_fkgl"):
        report["overall"][metric] = float(
            np.mean([report["per_level"][lv][metric] for lv in report["per_level"]])
        )
    report["overall"]["empty_outputs"] = int(sum(empty_counts.values()))
    return report


def rank_methods(
    reports: dict[str, dict],
    targets: dict,
    metrics: list[str],
) -> tuple[dict, "object"]:
    """Per-(metric, level) scores and the cross-method rank table.

    SARI and BLEU rank higher-is-better; FKGL and delta-FKGL rank by
    closeness to the reference statistics, mirroring "closer to the ground
    truth is better".
    """
    levels = sorted(
        {int(lv) for report in reports.values() for lv in report["per_level"]}
    )
    scores: dict[str, dict[str, float]] = {}
    directions: dict[str, Direction] = {}
    for level in levels:
        for metric in metrics:
            column = f"{metric}_L{level}"
            if metric in ("sari", "bleu"):
                directions[column] = higher_better()
            else:
                directions[column] = closer_to(targets[level][metric])
            for method, report in reports.items():
                scores.setdefault(method, {})[column] = report["per_level"][
                    str(level)
                ][metric]
    table = average_rank(scores, directions)
    return scores, table


# -- the full experiment ---------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run every requested method end to end; returns the manifest dict."""
    out = Path(out_dir)
    (out / "data").mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")

    grammar_path = cfg.grammar or default_grammar_path()
    grammar = load_grammar(grammar_path)
    if grammar.levels != cfg.num_levels:
        raise ValueError(
            f"grammar has {grammar.levels} levels, config wants {cfg.num_levels}"
        )
    freq_table = grammar.frequency_table()
    seeds = _stage_seeds(cfg.seed)

    synth = synth_generate(
        grammar, cfg.data.n_parallel, seeds["data"], n_pairs=cfg.data.n_pairs
    )
    train_set, val_set, test_set = split(
        synth.parallel, cfg.data.split, seeds["split"]
    )
    noisy_train, noise_mask = inject_label_noise(
        train_set, cfg.data.noise_rate, seeds["noise"], cfg.num_levels
    )

    # data artifacts
    with open(out / "data" / "freq_table.txt", "w", encoding="utf-8") as handle:
        for token in sorted(freq_table, key=freq_table.get):
            handle.write(token + "\n")
    save_parallel(train_set, out / "data" / "train.jsonl")
    save_parallel(noisy_train, out / "data" / "train_noisy.jsonl")
    save_parallel(val_set, out / "data" / "val.jsonl")
    save_parallel(test_set, out / "data" / "test.jsonl")
    with open(out / "data" / "pairs.tsv", "w", encoding="utf-8") as handle:
        for pair in synth.paraphrase.pairs:
            handle.write(f"{pair.source}\t{pair.target}\n")
    write_json(
        {
            "true_levels": [list(lv) for lv in synth.paraphrase.true_levels],
            "noise_mask": noise_mask,
            "noise_rate": cfg.data.noise_rate,
        },
        out / "data" / "hidden_gold.json",
    )

    classifiers: dict[str, tuple] = {}
    pseudo: dict[str, tuple] = {}
    generators: dict[tuple, LevelConditionedSeq2Seq] = {}
    reports: dict[str, dict] = {}
    targets = reference_targets(test_set, cfg.num_levels)

    for method in cfg.methods:
        base, with_ft = parse_method(method)
        loss = "sce" if base in SCE_BASES else "ce"
        if loss not in classifiers:
            classifiers[loss] = train_classifier_stage(
                cfg, loss, noisy_train, val_set, freq_table, seeds["classifier"]
            )
            clf, profile, _ = classifiers[loss]
            pseudo[loss] = pseudo_label_stage(
                cfg, clf, profile, synth.paraphrase.pairs
            )
        clf, profile, clf_summary = classifiers[loss]
        corpus, pseudo_summary = pseudo[loss]

        # Training is deterministic, so methods sharing (loss, weighting)
        # share the base generator; fine-tuning continues on a copy.
        gen_key = (loss, base not in WEIGHTED_BASES)
        if gen_key not in generators:
            generators[gen_key] = train_generator_stage(
                cfg, corpus, unit_weights=gen_key[1], seed=seeds["generator"]
            )
        model = generators[gen_key]
        if with_ft:
            model = copy.deepcopy(model)
            model.fine_tune(
                [(ex.source, ex.target, ex.level) for ex in noisy_train],
                n_steps=cfg.fine_tune.n_steps,
                learning_rate=cfg.fine_tune.learning_rate,
                seed=seeds["fine_tune"],
            )
        report = evaluate_generator(
            model, test_set, cfg.num_levels, cfg.generator.max_len
        )
        reports[method] = report

        method_dir = out / "methods" / method.replace("+", "_")
        method_dir.mkdir(parents=True, exist_ok=True)
        save_classifier(clf, method_dir / "classifier.json")
        write_json(profile.to_dict(), method_dir / "precisions.json")
        write_json(clf_summary, method_dir / "classifier_summary.json")
        write_pseudo_corpus(corpus, method_dir / "pseudo_corpus.jsonl")
        write_json(pseudo_summary, method_dir / "pseudo_summary.json")
        save_seq2seq(model, method_dir / "generator.json")
        with open(method_dir / "loss_curve.csv", "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["step", "loss"])
            for step, value in enumerate(model.loss_curve_):
                writer.writerow([step, repr(value)])
        write_json(report, method_dir / "eval.json")

    scores, table = rank_methods(reports, targets, cfg.metrics)
    write_json(
        {
            "reference_targets": {str(k): v for k, v in targets.items()},
            "scores": scores,
            "per_metric_ranks": table.per_metric_ranks,
            "average_rank": table.average_rank,
            "reports": reports,
        },
        out / "report.json",
    )
    with open(out / "report.tsv", "w", encoding="utf-8") as handle:
        handle.write(format_rank_table(table, scores))

    manifest = {
        "config_hash": hashlib.sha256(
            json.dumps(cfg.to_dict(), sort_keys=True).encode()
        ).hexdigest(),
        "artifacts": {},
    }
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            manifest["artifacts"][str(path.relative_to(out))] = sha256_file(path)
    write_json(manifest, out / "manifest.json")
    return manifest
