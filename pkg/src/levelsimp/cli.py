"""Command-line harness for the simplification pipeline.

Commands compose file-to-file so a full experiment can be reproduced either
with ``experiment`` or by chaining the individual stages with the same
config.  Exit status: 0 success, 1 usage or config error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .classifier import PrecisionProfile, load_classifier, save_classifier
from .config import ConfigError, ExperimentConfig, load_config, resolve_config
from .corpus import load_parallel
from .errors import LevelSimpError
from .experiment import (
    evaluate_generator,
    pseudo_label_stage,
    run_experiment,
    train_classifier_stage,
    train_generator_stage,
    write_json,
)
from .grammar import default_grammar_path, load_grammar
from .metrics import (
    average_rank,
    closer_to,
    format_rank_table,
    higher_better,
    load_system_scores,
)
from .pseudolabel import read_pairs_tsv, read_pseudo_corpus, write_pseudo_corpus
from .seq2seq import load_seq2seq, save_seq2seq
from .textcore import load_frequency_table, tokenize

USAGE_ERROR, DATA_ERROR, INTERNAL_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else resolve_config({})
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _dataset_format(path: str) -> str:
    return "tsv" if str(path).endswith(".tsv") else "jsonl"


def _write_loss_curve(model, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("step,loss\n")
        for step, value in enumerate(model.loss_curve_):
            handle.write(f"{step},{value!r}\n")


# -- subcommands ------------------------------------------------------------


def cmd_train_classifier(args) -> int:
    cfg = _load_cfg(args)
    freq_table = load_frequency_table(args.freq_table)
    train_set = load_parallel(args.data, _dataset_format(args.data), cfg.num_levels)
    val_set = load_parallel(args.val, _dataset_format(args.val), cfg.num_levels)
    clf, profile, summary = train_classifier_stage(
        cfg, args.loss, train_set, val_set, freq_table, cfg.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_classifier(clf, out / "classifier.json")
    write_json(profile.to_dict(), out / "precisions.json")
    write_json(summary, out / "classifier_summary.json")
    print(f"validation accuracy: {summary['val_accuracy']:.4f}")
    print(f"wrote {out / 'classifier.json'}")
    return 0


def cmd_pseudo_label(args) -> int:
    cfg = _load_cfg(args)
    freq_table = load_frequency_table(args.freq_table)
    clf = load_classifier(args.classifier, freq_table)
    with open(args.precisions, encoding="utf-8") as handle:
        profile = PrecisionProfile.from_dict(json.load(handle))
    pairs = read_pairs_tsv(args.pairs)
    if args.bleu_filter:
        cfg.data.bleu_filter = True
    corpus, summary = pseudo_label_stage(cfg, clf, profile, pairs)
    write_pseudo_corpus(corpus, args.out)
    write_json(summary, str(args.out) + ".summary.json")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_train_generator(args) -> int:
    cfg = _load_cfg(args)
    corpus = read_pseudo_corpus(args.pseudo)
    model = train_generator_stage(
        cfg, corpus, unit_weights=args.unit_weights, seed=cfg.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_seq2seq(model, out / "generator.json")
    _write_loss_curve(model, out / "loss_curve.csv")
    if model.n_skipped_:
        print(f"skipped {model.n_skipped_} examples without a level-1..K source")
    if all(ex.weight == 0.0 for ex in corpus):
        print("warning: every example weight is 0; parameters equal initialization")
    print(f"final loss: {model.loss_curve_[-1]:.6f}")
    return 0


def cmd_fine_tune(args) -> int:
    cfg = _load_cfg(args)
    model = load_seq2seq(args.model)
    data = load_parallel(args.data, _dataset_format(args.data), model.num_levels)
    model.loss_curve_ = []
    model.fine_tune(
        [(ex.source, ex.target, ex.level) for ex in data],
        n_steps=cfg.fine_tune.n_steps,
        learning_rate=cfg.fine_tune.learning_rate,
        seed=cfg.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_seq2seq(model, out / "generator.json")
    _write_loss_curve(model, out / "loss_curve.csv")
    print(f"final loss: {model.loss_curve_[-1]:.6f}")
    return 0


def cmd_generate(args) -> int:
    model = load_seq2seq(args.model)
    lines = (
        Path(args.input).read_text(encoding="utf-8").splitlines()
        if args.input
        else sys.stdin.read().splitlines()
    )
    outputs = []
    for line in lines:
        if not line.strip():
            continue
        tokens = model.generate(
            tokenize(line).tokens, args.level, args.max_len
        )
        outputs.append(" ".join(tokens))
    text = "\n".join(outputs) + ("\n" if outputs else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    model = load_seq2seq(args.model)
    test_set = load_parallel(args.test, _dataset_format(args.test), model.num_levels)
    report = evaluate_generator(model, test_set, model.num_levels, args.max_len)
    write_json(report, args.out)
    if args.scores_out:
        scores = dict(report["overall"])
        scores.pop("empty_outputs", None)
        for level, values in report["per_level"].items():
            for metric in ("sari", "bleu", "fkgl", "delta_fkgl"):
                scores[f"{metric}_L{level}"] = values[metric]
        with open(args.scores_out, "a", encoding="utf-8") as handle:
            handle.write(
                json.dumps(
                    {"system": args.system, "scores": scores}, sort_keys=True
                )
                + "\n"
            )
    print(json.dumps(report["overall"], sort_keys=True))
    return 0


def cmd_experiment(args) -> int:
    cfg = _load_cfg(args)
    manifest = run_experiment(cfg, args.out)
    print(f"config hash: {manifest['config_hash']}")
    print(f"wrote {len(manifest['artifacts'])} artifacts under {args.out}")
    return 0


def cmd_report(args) -> int:
    scores = load_system_scores(args.scores)
    if not scores:
        raise LevelSimpError(f"no systems in {args.scores}")
    metrics = args.metrics or sorted(next(iter(scores.values())))
    directions = {m: higher_better() for m in metrics}
    for spec in args.closer_to or []:
        metric, _, target = spec.partition("=")
        if not target:
            raise ConfigError(f"--closer-to expects metric=target, got {spec!r}")
        directions[metric] = closer_to(float(target))
    table = average_rank(scores, directions)
    text = format_rank_table(table, scores)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth_data(args) -> int:
    # convenience for harness scripting: materialize the synthetic corpus
    from .corpus import save_parallel, synth_generate

    cfg = _load_cfg(args)
    grammar = load_grammar(cfg.grammar or default_grammar_path())
    synth = synth_generate(
        grammar, cfg.data.n_parallel, cfg.seed, n_pairs=cfg.data.n_pairs
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_parallel(synth.parallel, out / "parallel.jsonl")
    with open(out / "pairs.tsv", "w", encoding="utf-8") as handle:
        for pair in synth.paraphrase.pairs:
            handle.write(f"{pair.source}\t{pair.target}\n")
    freq = grammar.frequency_table()
    with open(out / "freq_table.txt", "w", encoding="utf-8") as handle:
        for token in sorted(freq, key=freq.get):
            handle.write(token + "\n")
    print(f"wrote {len(synth.parallel)} triples, {len(synth.paraphrase.pairs)} pairs")
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="levelsimp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="experiment config YAML")
        p.add_argument("--seed", type=int, help="override the config seed")
        return p

    p = add("train-classifier", cmd_train_classifier, "fit the level classifier")
    p.add_argument("--data", required=True, help="labeled parallel data (tsv/jsonl)")
    p.add_argument("--val", required=True, help="validation split (tsv/jsonl)")
    p.add_argument("--freq-table", required=True)
    p.add_argument("--loss", choices=("ce", "sce"), default="ce")
    p.add_argument("--out", required=True, help="output directory")

    p = add("pseudo-label", cmd_pseudo_label, "label a paraphrase corpus")
    p.add_argument("--classifier", required=True)
    p.add_argument("--precisions", required=True)
    p.add_argument("--freq-table", required=True)
    p.add_argument("--pairs", required=True, help="TSV: source<TAB>target")
    p.add_argument("--bleu-filter", action="store_true",
                   help="also keep only pairs with BLEU in [lo, hi]")
    p.add_argument("--out", required=True, help="output JSONL path")

    p = add("train-generator", cmd_train_generator, "train the seq2seq model")
    p.add_argument("--pseudo", required=True, help="pseudo corpus JSONL")
    p.add_argument("--unit-weights", action="store_true",
                   help="force every example weight to 1 (unweighted baseline)")
    p.add_argument("--out", required=True, help="output directory")

    p = add("fine-tune", cmd_fine_tune, "continue training on gold data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = add("generate", cmd_generate, "greedy decoding at a target level")
    p.add_argument("--model", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--input", help="file of sentences; default stdin")
    p.add_argument("--out", help="output file; default stdout")

    p = add("evaluate", cmd_evaluate, "score a model on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--system", default="system", help="name for --scores-out")
    p.add_argument("--scores-out", help="append a scores JSONL line here")
    p.add_argument("--out", required=True, help="eval report JSON path")

    p = add("experiment", cmd_experiment, "run the full method matrix")
    p.add_argument("--out", required=True, help="run directory")

    p = add("report", cmd_report, "rank systems from a scores JSONL file")
    p.add_argument("--scores", required=True)
    p.add_argument("--metrics", nargs="*", help="metric subset (default: all)")
    p.add_argument("--closer-to", action="append", metavar="METRIC=TARGET",
                   help="rank this metric by |score - target| instead")
    p.add_argument("--out", help="TSV path; default stdout")

    p = add("synth-data", cmd_synth_data, "materialize the synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit as exc:  # argparse --help / usage errors
        return exc.code or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except LevelSimpError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except Exception as exc:  # noqa: BLE001 - last-resort classification
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
