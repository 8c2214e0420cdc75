"""Command-line entry point tying the pipeline together.

Subcommands: prepare, toylang, subwords, truecase, train, rewrite,
translate, evaluate, classify-train, classify, serve. Settings come from
an optional ``key = value`` config file; command-line flags override it.
Report paths write delimited outputs with matplotlib figures alongside.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as config_mod
from . import corpus as corpus_mod
from . import metrics as metrics_mod
from . import textpipe
from . import toylang as toylang_mod


def build_parser():
    parser = argparse.ArgumentParser(prog="monoglot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="key = value config file")

    p = sub.add_parser("prepare", help="clean, balance and split a parallel corpus")
    common(p)
    p.add_argument("--input", required=True, help="TSV: src, tgt, src_lang, tgt_lang, domain")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--valid-fraction", type=float, default=0.02)
    p.add_argument("--test-fraction", type=float, default=0.02)

    p = sub.add_parser("toylang", help="generate a synthetic multilingual corpus")
    common(p)
    p.add_argument("--langs", type=int, default=3, choices=(2, 3))
    p.add_argument("--sentences", type=int, default=5000)
    p.add_argument("--out", required=True)
    p.add_argument("--gec", action="store_true",
                   help="also emit corrupted GEC test files with gold M2 annotations")

    p = sub.add_parser("subwords", help="learn a subword model from tokenized text")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=None)

    p = sub.add_parser("truecase", help="train a truecasing model from tokenized text")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the factored transformer")
    common(p)
    p.add_argument("--data", required=True, help="prepared dataset directory")
    p.add_argument("--out", required=True, help="model bundle output directory")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--checkpoint-interval", type=int, default=None)

    p = sub.add_parser("rewrite", help="monolingual rewrite (stdin to stdout)")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--beam", type=int, default=None)

    p = sub.add_parser("translate", help="cross-lingual translation (stdin to stdout)")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--src-lang", required=True)
    p.add_argument("--tgt-lang", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--beam", type=int, default=None)

    p = sub.add_parser("evaluate", help="score hypotheses with BLEU, GLEU or M2")
    common(p)
    p.add_argument("--metric", required=True, choices=("bleu", "gleu", "m2"))
    p.add_argument("--src", default=None)
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", default=None)
    p.add_argument("--gold", default=None, help="gold M2 file (m2 metric)")
    p.add_argument("--report-dir", default=None,
                   help="write scores.tsv and figures here")

    p = sub.add_parser("classify-train", help="train the style classifier")
    common(p)
    p.add_argument("--input", required=True, help="TSV: sentence, label")
    p.add_argument("--out", required=True)
    p.add_argument("--embedding-dim", type=int, default=None)
    p.add_argument("--filters", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)

    p = sub.add_parser("classify", help="classify sentences / compute transfer rate")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--target-style", default=None,
                   help="print the transfer rate for this style instead of per-line labels")

    p = sub.add_parser("serve", help="run the HTTP inference service")
    common(p)
    p.add_argument("--model", default=None, help="bundle dir (default: $MONOGLOT_MODEL)")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def effective_config(args):
    cfg = (
        config_mod.load_config(args.config)
        if getattr(args, "config", None)
        else config_mod.default_config()
    )
    overrides = {
        "seed": getattr(args, "seed", None),
        "vocab_size": getattr(args, "vocab_size", None),
        "beam": getattr(args, "beam", None),
        "max_epochs": getattr(args, "max_epochs", None),
        "checkpoint_interval": getattr(args, "checkpoint_interval", None),
        "port": getattr(args, "port", None),
        "clf_embedding_dim": getattr(args, "embedding_dim", None),
        "clf_filters": getattr(args, "filters", None),
    }
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = config_mod.parse_value(key, val)
    print("effective config: " + " ".join(f"{k}={cfg[k]}" for k in sorted(cfg)),
          file=sys.stderr)
    return cfg


def _read_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def cmd_prepare(args, cfg):
    pairs = corpus_mod.read_tsv(args.input)
    pairs = corpus_mod.clean(pairs, cfg.max_len, cfg.max_ratio)
    streams = {}
    for p in pairs:
        key = (tuple(sorted((p.src_lang, p.tgt_lang))), p.domain)
        streams.setdefault(key, []).append(p)
    pairs = corpus_mod.balance_corpora(streams, cfg.balance_cap, cfg.seed)
    pairs = corpus_mod.duplicate_directions(pairs)
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(pairs))
    n_valid = max(1, int(len(pairs) * args.valid_fraction))
    n_test = max(1, int(len(pairs) * args.test_fraction))
    valid = [pairs[i] for i in order[:n_valid]]
    test = [pairs[i] for i in order[n_valid : n_valid + n_test]]
    train = [pairs[i] for i in order[n_valid + n_test :]]
    os.makedirs(args.out, exist_ok=True)
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        corpus_mod.write_tsv(os.path.join(args.out, f"{name}.tsv"), rows)
    pipeline = corpus_mod.train_pipeline(train, cfg.vocab_size)
    pipeline.save(args.out)
    print(f"prepared {len(train)} train / {len(valid)} valid / {len(test)} test pairs")
    return 0


def cmd_toylang(args, cfg):
    seed = cfg.seed
    n_train, n_valid, n_test = toylang_mod.write_corpus_tree(
        args.out, args.langs, args.sentences, seed
    )
    print(f"toy corpus: {n_train} train / {n_valid} valid / {n_test} test pairs")
    if args.gec:
        langs = toylang_mod.make_languages(args.langs)
        rng = np.random.default_rng(seed + 99)
        for lang in langs:
            sentences, golds, corrupted = [], [], []
            for i in range(200):
                cs = toylang_mod.sample_concept(rng)
                clean = toylang_mod.realize(cs, lang, "fm")
                kind = toylang_mod.ERROR_KINDS[i % len(toylang_mod.ERROR_KINDS)]
                bad, gold, _ = toylang_mod.inject_errors(clean, lang, [kind], seed + i)
                sentences.append(bad.split(" "))
                golds.append({0: gold})
                corrupted.append((bad, clean))
            with open(os.path.join(args.out, f"gec.{lang.id}.m2"), "w", encoding="utf-8") as f:
                f.write(metrics_mod.emit_m2(sentences, golds))
            with open(os.path.join(args.out, f"gec.{lang.id}.src"), "w", encoding="utf-8") as f:
                f.writelines(bad + "\n" for bad, _ in corrupted)
            with open(os.path.join(args.out, f"gec.{lang.id}.ref"), "w", encoding="utf-8") as f:
                f.writelines(clean + "\n" for _, clean in corrupted)
        print("wrote GEC test files")
    return 0


def cmd_subwords(args, cfg):
    tokens = []
    for line in _read_lines(args.input):
        tokens.extend(line.split())
    model = textpipe.learn_subwords(tokens, cfg.vocab_size)
    model.save(args.out)
    print(f"learned {len(model.merges)} merges over {len(model.charset)} characters")
    return 0


def cmd_truecase(args, cfg):
    sentences = [line.split() for line in _read_lines(args.input) if line.strip()]
    model = textpipe.train_truecaser(sentences)
    model.save(args.out)
    print(f"truecaser table size: {len(model.table)}")
    return 0


def cmd_train(args, cfg):
    from . import trainer as trainer_mod
    from . import transformer as tfm
    from . import report

    train_pairs = corpus_mod.read_tsv(os.path.join(args.data, "train.tsv"))
    valid_pairs = corpus_mod.read_tsv(os.path.join(args.data, "valid.tsv"))
    pipeline = corpus_mod.Pipeline.load(args.data)
    model_config = tfm.ModelConfig(
        layers=cfg.layers, heads=cfg.heads, model_dim=cfg.model_dim, ff_dim=cfg.ff_dim,
        max_positions=cfg.max_positions, token_vocab=len(pipeline.unit_vocab),
        lang_factors=len(pipeline.lang_tags), style_factors=len(pipeline.style_tags),
        factor_dim=cfg.factor_dim, dropout=cfg.dropout,
        label_smoothing=cfg.label_smoothing,
    )
    settings = trainer_mod.TrainSettings(
        lr=cfg.lr, lr_decay=cfg.lr_decay, plateau_patience=cfg.plateau_patience,
        stop_patience=cfg.stop_patience, checkpoint_interval=cfg.checkpoint_interval,
        word_budget=cfg.word_budget, max_epochs=cfg.max_epochs,
        grad_clip=cfg.grad_clip, seed=cfg.seed,
    )
    best, log_rows = trainer_mod.train(
        model_config, pipeline, train_pairs, valid_pairs, args.out,
        settings=settings, log=lambda msg: print(msg, file=sys.stderr),
        resume_from=args.resume,
    )
    pipeline.save(args.out)
    fig = report.training_curve(log_rows, os.path.join(args.out, "training_curve.png"))
    print(f"best checkpoint: {best}")
    if fig:
        print(f"training curve: {fig}")
    return 0


def _load_bundle(model_dir):
    from .decoder import ModelBundle

    return ModelBundle.load(model_dir)


def cmd_rewrite(args, cfg, src_lang=None, tgt_lang=None):
    from . import decoder as decoder_mod

    bundle = _load_bundle(args.model)
    src_lang = src_lang or args.lang
    tgt_lang = tgt_lang or args.lang
    for line in sys.stdin:
        line = line.rstrip("\n")
        if not line.strip():
            print("")
            continue
        req = decoder_mod.RewriteRequest(
            text=line, source_lang=src_lang, target_lang=tgt_lang,
            target_style=args.style, beam=cfg.beam, length_alpha=cfg.length_alpha,
        )
        out, _score = decoder_mod.rewrite(req, bundle)
        print(out)
    return 0


def cmd_translate(args, cfg):
    return cmd_rewrite(args, cfg, src_lang=args.src_lang, tgt_lang=args.tgt_lang)


def cmd_evaluate(args, cfg):
    from . import report

    hyps_text = _read_lines(args.hyp)
    hyps = [line.split() for line in hyps_text]
    report_rows = None
    if args.metric == "bleu":
        if not args.ref:
            raise SystemExit("--ref is required for BLEU")
        refs = [line.split() for line in _read_lines(args.ref)]
        result = metrics_mod.corpus_bleu(hyps, refs)
        print(f"BLEU {result.value:.2f}")
    elif args.metric == "gleu":
        if not args.ref or not args.src:
            raise SystemExit("--src and --ref are required for GLEU")
        srcs = [line.split() for line in _read_lines(args.src)]
        refs = [[line.split()] for line in _read_lines(args.ref)]
        result = metrics_mod.corpus_gleu(srcs, hyps, refs)
        print(f"GLEU {result.value:.4f}")
        report_rows = result.per_sentence
    else:
        if not args.gold:
            raise SystemExit("--gold is required for M2")
        with open(args.gold, encoding="utf-8") as f:
            srcs, golds = metrics_mod.parse_m2(f.read())
        result = metrics_mod.m2_score(srcs, hyps, golds)
        print(f"P {result.precision:.4f} R {result.recall:.4f} F0.5 {result.value:.4f}")
    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        with open(os.path.join(args.report_dir, "scores.tsv"), "w", encoding="utf-8") as f:
            f.write(f"metric\tvalue\tprecision\trecall\n")
            f.write(
                f"{result.metric}\t{result.value:.6f}\t"
                f"{'' if result.precision is None else f'{result.precision:.6f}'}\t"
                f"{'' if result.recall is None else f'{result.recall:.6f}'}\n"
            )
        if report_rows:
            report.score_histogram(
                report_rows, result.metric,
                os.path.join(args.report_dir, "per_sentence.png"),
            )
    return 0


def cmd_classify_train(args, cfg):
    from . import styleclf

    sentences, labels = [], []
    for line in _read_lines(args.input):
        if not line.strip():
            continue
        sent, label = line.split("\t")
        sentences.append(sent)
        labels.append(label)
    clf_config = styleclf.ClassifierConfig(
        embedding_dim=cfg.clf_embedding_dim, filters_per_width=cfg.clf_filters,
        dropout=cfg.clf_dropout, lr=cfg.clf_lr, max_epochs=cfg.clf_max_epochs,
    )
    clf, acc = styleclf.train_classifier(
        sentences, labels, clf_config, seed=cfg.seed,
        log=lambda msg: print(msg, file=sys.stderr),
    )
    clf.save(args.out)
    print(f"validation accuracy {acc:.4f}")
    return 0


def cmd_classify(args, cfg):
    from . import styleclf

    clf = styleclf.Classifier.load(args.model)
    lines = [line.rstrip("\n") for line in sys.stdin if line.strip()]
    if args.target_style:
        rate = styleclf.transfer_rate(clf, lines, args.target_style)
        print(f"transfer_rate {rate:.2f}")
    else:
        for line in lines:
            label, prob = styleclf.predict(clf, line)
            print(f"{label}\t{prob:.4f}")
    return 0


def cmd_serve(args, cfg):
    import uvicorn

    from .service import create_app

    model_dir = args.model or os.environ.get("MONOGLOT_MODEL")
    if not model_dir:
        raise SystemExit("no model bundle: pass --model or set MONOGLOT_MODEL")
    app = create_app(model_dir)
    uvicorn.run(app, host=args.host, port=cfg.port)
    return 0


COMMANDS = {
    "prepare": cmd_prepare,
    "toylang": cmd_toylang,
    "subwords": cmd_subwords,
    "truecase": cmd_truecase,
    "train": cmd_train,
    "rewrite": cmd_rewrite,
    "translate": cmd_translate,
    "evaluate": cmd_evaluate,
    "classify-train": cmd_classify_train,
    "classify": cmd_classify,
    "serve": cmd_serve,
}


def dispatch(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        return COMMANDS[args.command](args, cfg)
    except (OSError, ValueError, config_mod.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
