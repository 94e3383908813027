"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

from . import __version__
from .corpus_io import (
    FormatError,
    read_dense_features,
    read_lexicon,
    read_morpheme_corpus,
    read_token_corpus,
    read_vocab,
    validate_corpus,
    write_lattices,
    write_lexicon,
    write_morpheme_corpus,
    write_token_corpus,
    write_vocab,
)
from .domain import Sentence
from .evaluation import (
    EvalReport,
    OotvCategory,
    TrainVocab,
    eval_morph_level,
    eval_token_level,
    mean_ci,
    ootv_breakdown,
    ootv_counts,
    predicted_token_labels,
)
from .lattice import analyze
from .md import load_md_model, md_hybrid, md_standard, save_md_model, train_md
from .tagger import (
    VARIANTS,
    FeatureConfig,
    ModelError,
    TrainConfig,
    load_model,
    save_model,
    tag,
    train,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


# -- helpers ----------------------------------------------------------------

def _digest(path):
    if path in (None, "-") or not os.path.isfile(path):
        return None
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out, command, config, inputs, seed=None):
    """Record how ``out`` was produced next to it (skipped for stdout)."""
    if out in (None, "-"):
        return
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    ts = time.gmtime(int(stamp)) if stamp else time.gmtime()
    manifest = {
        "command": command,
        "config": config,
        "inputs": {k: {"path": v, "sha256": _digest(v)} for k, v in inputs.items() if v},
        "seed": seed,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", ts),
    }
    with open(str(out) + ".manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for no, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"expected key = value, got {line!r}", path, no)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(value, like):
    if isinstance(like, bool):
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float) or like is None:
        return float(value)
    return str(value)


def build_train_config(args) -> TrainConfig:
    values = read_config(args.config) if args.config else {}
    for name in ("epochs", "seed", "algorithm", "learning_rate", "l2", "batch_size", "average"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    feat_defaults = FeatureConfig()
    train_defaults = TrainConfig()
    feat_kw, train_kw = {}, {}
    for key, value in values.items():
        if key in {f.name for f in fields(FeatureConfig)}:
            feat_kw[key] = _coerce(value, getattr(feat_defaults, key))
        elif key in {f.name for f in fields(TrainConfig)} and key != "features":
            train_kw[key] = _coerce(value, getattr(train_defaults, key))
        else:
            raise UsageError(f"unknown config key {key!r}")
    try:
        return TrainConfig(features=FeatureConfig(**feat_kw), **train_kw)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _corpus(args, need_morphemes=False, multi=None):
    tokens = read_token_corpus(args.tokens, multi=multi) if args.tokens else None
    if args.morphemes:
        return read_morpheme_corpus(args.morphemes, tokens)
    if need_morphemes:
        raise UsageError("--morphemes is required")
    if tokens is None:
        raise UsageError("--tokens or --morphemes is required")
    return tokens


# -- commands ---------------------------------------------------------------

def cmd_analyze(args):
    lex = read_lexicon(args.lexicon)
    split = read_token_corpus(args.tokens)
    write_lattices((analyze(s.tokens, lex) for s in split), args.output)
    write_manifest(args.output, "analyze", {}, {"tokens": args.tokens, "lexicon": args.lexicon})


def cmd_train(args):
    config = build_train_config(args)
    inputs = {"tokens": args.tokens, "morphemes": args.morphemes, "lexicon": args.lexicon,
              "dense": args.dense}
    if args.variant == "md":
        if not (args.lexicon and args.morphemes and args.tokens):
            raise UsageError("--variant md needs --tokens, --morphemes and --lexicon")
        corpus = _corpus(args, need_morphemes=True)
        model = train_md(corpus.sentences, read_lexicon(args.lexicon), epochs=config.epochs,
                         seed=config.seed, average=config.average)
        save_md_model(model, args.output)
    else:
        multi = {"token-single": False, "token-multi": True}.get(args.variant)
        corpus = _corpus(args, need_morphemes=args.variant == "morpheme", multi=multi)
        dense = read_dense_features(args.dense) if args.dense else None
        model = train(corpus.sentences, args.variant, config, dense)
        save_model(model, args.output)
    cfg = asdict(config)
    cfg["variant"] = args.variant
    write_manifest(args.output, "train", cfg, inputs, seed=config.seed)


def cmd_tag(args):
    model = load_model(args.model)
    dense = read_dense_features(args.dense) if args.dense else None
    if model.variant == "morpheme":
        tokens = read_token_corpus(args.tokens) if args.tokens else None
        split = read_morpheme_corpus(args.input, tokens)
        labels = [tag(model, s, dense) for s in split]
        write_morpheme_corpus(split, args.output, labels)
    else:
        split = read_token_corpus(args.input, multi=model.variant == "token-multi")
        labels = [tag(model, s, dense) for s in split]
        write_token_corpus(split, args.output, labels)
    write_manifest(args.output, "tag", {"variant": model.variant},
                   {"model": args.model, "input": args.input, "dense": args.dense})


def cmd_disambiguate(args):
    lex = read_lexicon(args.lexicon)
    md = load_md_model(args.md_model)
    ner = None
    if args.mode == "hybrid":
        if not args.ner_model:
            raise UsageError("--mode hybrid requires --ner-model")
        ner = load_model(args.ner_model)
        if ner.variant != "token-multi":
            raise UsageError(f"--ner-model must be a token-multi model, got {ner.variant}")
    split = read_token_corpus(args.tokens)
    out, report = [], []
    for s in split:
        if ner is None:
            res = md_standard(md, lex, s.tokens)
        else:
            res = md_hybrid(md, lex, s.tokens, ner)
            for ti in sorted(res.fallback_tokens):
                report.append(f"{s.id}\t{ti + 1}\t{s.tokens[ti].form}\tno analysis matches the predicted morpheme count")
        out.append(Sentence(s.tokens, res.morphemes, id=s.id))
    write_morpheme_corpus(out, args.output)
    if args.fallback_report:
        with open(args.fallback_report, "w", encoding="utf-8") as f:
            f.write("sentence\ttoken\tform\treason\n")
            for line in report:
                f.write(line + "\n")
    elif report:
        print(f"{len(report)} token(s) fell back to the unpruned lattice", file=sys.stderr)
    write_manifest(args.output, "disambiguate", {"mode": args.mode},
                   {"tokens": args.tokens, "lexicon": args.lexicon, "md_model": args.md_model,
                    "ner_model": args.ner_model})


def _read_prediction(path, variant, gold_tokens):
    if variant == "morpheme":
        return read_morpheme_corpus(path, gold_tokens)
    return read_token_corpus(path, multi=variant == "token-multi")


def _emit_report(report: EvalReport, fmt, out, name=""):
    if fmt == "tsv":
        for metric, cat, value in report.rows(name):
            out.write(f"{metric}\t{cat}\t{value:.4f}\n" if isinstance(value, float)
                      else f"{metric}\t{cat}\t{value}\n")
    else:
        if name:
            out.write(f"== {name.rstrip('_')}\n")
        out.write(str(report) + "\n")


def cmd_evaluate(args):
    gold_tokens = read_token_corpus(args.gold_tokens) if args.gold_tokens else None
    gold = (read_morpheme_corpus(args.gold_morphemes, gold_tokens) if args.gold_morphemes
            else gold_tokens)
    if gold is None:
        raise UsageError("--gold-tokens or --gold-morphemes is required")
    if args.level == "morph" and not args.gold_morphemes:
        raise UsageError("--level morph requires --gold-morphemes")
    if args.level == "morph" and args.variant == "token-multi" and not args.morphemes:
        raise UsageError("--level morph with a token-multi prediction requires --morphemes "
                         "(gold, standard or hybrid segmentation)")
    if args.morphemes and len(args.morphemes) not in (1, len(args.pred)):
        raise UsageError("give one --morphemes file, or one per --pred file")
    if args.ootv_vocab and gold.sentences and gold.sentences[0].morphemes is None:
        raise UsageError("--ootv-vocab requires --gold-morphemes")
    reports = []
    for k, pred_path in enumerate(args.pred):
        pred = _read_prediction(pred_path, args.variant, gold_tokens)
        if args.level == "token":
            rep = eval_token_level(gold.sentences, pred.sentences, args.variant)
        else:
            seg = None
            if args.morphemes:
                seg_path = args.morphemes[k if len(args.morphemes) > 1 else 0]
                seg = read_morpheme_corpus(seg_path, gold_tokens).sentences
            rep = eval_morph_level(gold.sentences, pred.sentences, args.variant, seg)
        reports.append((pred_path, pred, rep))
    out = sys.stdout
    multi = len(reports) > 1
    for path, _, rep in reports:
        _emit_report(rep, args.format, out, f"{Path(path).name}_" if multi else "")
    if multi:
        for metric in ("precision", "recall", "f1"):
            mean, half = mean_ci([getattr(r, metric) for _, _, r in reports])
            if args.format == "tsv":
                out.write(f"{metric}_mean\tALL\t{mean:.4f}\n{metric}_ci95\tALL\t{half:.4f}\n")
            else:
                out.write(f"{metric:<10} mean {mean:7.2f} +- {half:.2f} (95% CI, n={len(reports)})\n")
    if args.ootv_vocab:
        vocab = read_vocab(args.ootv_vocab)
        for path, pred, _ in reports:
            labels = [predicted_token_labels(p, args.variant) for p in pred]
            groups = ootv_breakdown(gold.sentences, labels, vocab)
            for cat in OotvCategory:
                prefix = f"{Path(path).name}_" if multi else ""
                _emit_report(groups[cat], args.format, out, f"{prefix}ootv_{cat.value}_")


def cmd_ootv(args):
    corpus = _corpus(args, need_morphemes=True)
    vocab = read_vocab(args.vocab)
    counts = ootv_counts(corpus.sentences, vocab)
    total = sum(counts.values())
    for cat in OotvCategory:
        n = counts.get(cat, 0)
        share = 100.0 * n / total if total else 0.0
        print(f"{cat.value}\t{n}\t{share:.2f}")
    print(f"total\t{total}\t100.00" if total else "total\t0\t0.00")


def cmd_vocab(args):
    corpus = _corpus(args)
    write_vocab(TrainVocab.from_corpus(corpus.sentences), args.output)


def cmd_validate(args):
    tokens = read_token_corpus(args.tokens)
    morphs = read_morpheme_corpus(args.morphemes, tokens)
    stats = validate_corpus(tokens, morphs)
    sys.stdout.write(str(stats))
    if stats.mismatches and args.strict:
        return 2
    return 0


def cmd_synth(args):
    from .labeling import gold_multilabels
    from .synthetic import generate_corpus, make_language

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lang = make_language(args.seed)
    write_lexicon(lang.lexicon(), out / "lexicon.tsv")
    sizes = {"train": args.sentences, "dev": max(1, args.sentences // 5),
             "test": max(1, args.sentences // 5)}
    for k, (name, n) in enumerate(sizes.items()):
        corpus = generate_corpus(lang, n, seed=args.seed * 100 + k,
                                 oov_rate=0.0 if name == "train" else args.oov_rate)
        write_token_corpus(corpus, out / f"{name}.tok.tsv")
        write_morpheme_corpus(corpus, out / f"{name}.morph.tsv")
        write_token_corpus(corpus, out / f"{name}.multi.tsv", [gold_multilabels(s) for s in corpus])


# -- parser -----------------------------------------------------------------

def build_parser():
    p = _Parser(prog="morphner", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"morphner {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="build morphological lattices for a token file")
    a.add_argument("tokens")
    a.add_argument("lexicon")
    a.add_argument("-o", "--output", default="-")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("train", help="train an NER variant or the MD model")
    t.add_argument("--variant", required=True, choices=VARIANTS + ("md",))
    t.add_argument("--tokens", help="token TSV (single or ^-joined multi-labels)")
    t.add_argument("--morphemes", help="morpheme TSV, parallel to --tokens")
    t.add_argument("--lexicon", help="lexicon (md only)")
    t.add_argument("--dense", help="dense feature table")
    t.add_argument("--config", help="key = value file; flags override it")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--algorithm", choices=("perceptron", "crf"))
    t.add_argument("--learning-rate", type=float, dest="learning_rate")
    t.add_argument("--l2", type=float)
    t.add_argument("--batch-size", type=int, dest="batch_size")
    t.add_argument("--no-average", action="store_const", const=False, dest="average")
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("tag", help="label a token or morpheme file with a trained model")
    g.add_argument("--model", required=True)
    g.add_argument("--input", required=True)
    g.add_argument("--tokens", help="parallel token file for morpheme input")
    g.add_argument("--dense")
    g.add_argument("-o", "--output", default="-")
    g.set_defaults(func=cmd_tag)

    d = sub.add_parser("disambiguate", help="choose a segmentation (standard or hybrid)")
    d.add_argument("--tokens", required=True)
    d.add_argument("--lexicon", required=True)
    d.add_argument("--md-model", required=True)
    d.add_argument("--mode", choices=("standard", "hybrid"), default="standard")
    d.add_argument("--ner-model", help="token-multi model (hybrid only)")
    d.add_argument("--fallback-report")
    d.add_argument("-o", "--output", default="-")
    d.set_defaults(func=cmd_disambiguate)

    e = sub.add_parser(
        "evaluate", help="form-anchored mention F1",
        description="Output: an aligned table per prediction (--format text) or "
                    "METRIC<TAB>CATEGORY<TAB>VALUE lines (--format tsv). With several "
                    "--pred files, mean and 95%% CI (normal approximation) follow.")
    e.add_argument("--gold-tokens")
    e.add_argument("--gold-morphemes")
    e.add_argument("--pred", required=True, nargs="+")
    e.add_argument("--variant", required=True, choices=VARIANTS)
    e.add_argument("--level", choices=("token", "morph"), default="token")
    e.add_argument("--morphemes", nargs="+",
                   help="segmentation(s) to align token-multi labels with: gold, standard or hybrid")
    e.add_argument("--ootv-vocab", help="vocab file; adds per-OOTV-category token-level reports")
    e.add_argument("--format", choices=("text", "tsv"), default="text")
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("ootv", help="count gold mentions per OOTV category")
    o.add_argument("--tokens", required=True)
    o.add_argument("--morphemes", required=True)
    o.add_argument("--vocab", required=True)
    o.set_defaults(func=cmd_ootv)

    v = sub.add_parser("vocab", help="write the training vocabulary used for OOTV analysis")
    v.add_argument("--tokens")
    v.add_argument("--morphemes")
    v.add_argument("-o", "--output", default="-")
    v.set_defaults(func=cmd_vocab)

    c = sub.add_parser("validate", help="corpus statistics and parallel-consistency check")
    c.add_argument("--tokens", required=True)
    c.add_argument("--morphemes", required=True)
    c.add_argument("--strict", action="store_true", help="exit 2 when mismatches exist")
    c.set_defaults(func=cmd_validate)

    s = sub.add_parser("synth", help="write a seeded synthetic corpus and lexicon")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--sentences", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--oov-rate", type=float, default=0.2)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    try:
        rc = args.func(args)
    except UsageError as e:
        print(f"morphner {args.command}: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error
        sys.stderr.close()
        return 0
    except (FormatError, ModelError, ValueError, OSError, KeyError) as e:
        print(f"morphner {args.command}: {e}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
