"""Command-line entry point: ``lrcorpus <command> [<subcommand>] ...``.

Exit status is 0 on success, 1 on bad input and 2 if an internal invariant
breaks. Machine-readable reports (JSON, TSV, CoNLL, ARPA) go to stdout or
``--out``; human-readable summaries go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import agreement, corpus, diacritics, evaluation, ngram, noise, transfer, vocab, weak_labeler
from .errors import InputError, InvariantViolation


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _read_text(path) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as f:
        return f.read()


def _lines(path) -> list[str]:
    return _read_text(path).splitlines()


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FORGE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"FORGE_SEED must be an integer, got {env!r}") from None


def _classes(arg) -> tuple[str, ...]:
    names = tuple(c.strip() for c in arg.split(",") if c.strip())
    bad = [c for c in names if c not in corpus.ENTITY_CLASSES]
    if bad:
        raise InputError(f"unknown entity classes {bad}")
    return names


def _key_values(items, cast=float) -> dict:
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise InputError(f"expected KEY=VALUE, got {part!r}")
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = cast(v)
            except ValueError:
                raise InputError(f"bad value in {part!r}") from None
    return out


def _conll(path, mode="strict"):
    return corpus.parse_conll(_read_text(path), mode=mode, name=str(path))


# -- command implementations ---------------------------------------------------

def cmd_annotate(args):
    gaz = weak_labeler.read_gazetteer(
        args.gazetteer,
        {**weak_labeler.DEFAULT_SOURCE_MIN_LEN, **_key_values(args.min_len, int)},
        args.default_min_len,
    )
    if args.no_dates:
        rules = None
    elif args.date_keywords:
        rules = weak_labeler.read_keywords(args.date_keywords)
    else:
        rules = weak_labeler.DateRuleSet.yoruba()
    if rules is not None and args.no_digit_rule:
        rules = weak_labeler.DateRuleSet(rules.keywords, digit_rule=False)
    precedence = _classes(args.precedence)
    sentences = [line.split() for line in _lines(args.input) if line.strip()]
    tagged = weak_labeler.annotate_all(sentences, gaz, rules, precedence, args.casefold, args.jobs)
    _emit(args, corpus.write_conll(tagged))
    n_ent = sum(len(s.spans) for s in tagged)
    print(f"annotated {len(tagged)} sentences, {n_ent} entities, gazetteer size {len(gaz)}",
          file=sys.stderr)


def cmd_noise_estimate(args):
    nm = noise.estimate_noise(_conll(args.gold), _conll(args.noisy), args.alpha)
    _emit(args, nm.to_json() + "\n")


def cmd_noise_correct(args):
    nm = noise.NoiseMatrix.from_dict(json.loads(_read_text(args.matrix)))
    _emit(args, corpus.write_conll(noise.posterior_correct(_conll(args.noisy), nm)))


def cmd_noise_report(args):
    _emit_json(args, noise.noise_report(_conll(args.gold), _conll(args.noisy)))


def cmd_eval_prf(args):
    gold, pred = _conll(args.gold), _conll(args.pred)
    _emit_json(args, evaluation.evaluation_report(gold, pred, classes=_classes(args.classes)))


def cmd_eval_oov(args):
    rate = evaluation.oov_entity_rate(_conll(args.test), _conll(args.train))
    _emit_json(args, {"oov_entity_pct": rate})


def cmd_eval_buckets(args):
    rep = evaluation.bucket_f1(_conll(args.gold), _conll(args.pred), _conll(args.train))
    _emit_json(args, {"buckets": rep.to_dict()})


def _annotation_set(paths):
    return agreement.AnnotationSet.from_corpora([_conll(p) for p in paths])


def cmd_agree_kappa(args):
    a = _annotation_set(args.annotations)
    _emit_json(args, {"granularity": args.level, "kappa": agreement.fleiss_kappa(a, args.level),
                      "annotators": a.n_annotators})


def cmd_agree_confusion(args):
    _emit_json(args, agreement.annotator_confusion(_annotation_set(args.annotations)))


def cmd_qc_flags(args):
    cfg = agreement.QCConfig(args.min_count, args.entity_fraction, args.max_entropy, args.min_sentence_len)
    flags = agreement.qc_flags(_conll(args.input), cfg)
    _emit(args, "".join(f.to_json() + "\n" for f in flags))
    print(f"{len(flags)} flags", file=sys.stderr)


def cmd_rank_features(args):
    src = transfer.LanguageProfile.load(args.source)
    tgt = transfer.LanguageProfile.load(args.target)
    _emit_json(args, {"source": src.code, "target": tgt.code,
                      "features": transfer.compute_features(src, tgt).to_dict()})


def cmd_rank_sources(args):
    tgt = transfer.LanguageProfile.load(args.target)
    cands = [transfer.LanguageProfile.load(p) for p in args.candidates]
    weights = _key_values(args.weights) if args.weights else None
    ranked = transfer.rank_sources(tgt, cands, weights)
    _emit_json(args, {
        "target": tgt.code,
        "weights": weights or transfer.DEFAULT_WEIGHTS,
        "ranking": [{"code": r.code, "score": r.score, "features": r.features.to_dict()} for r in ranked],
    })


def cmd_rank_eval(args):
    table = transfer.read_transfer_scores(args.scores)
    if args.target not in table:
        raise InputError(f"no transfer scores for target {args.target!r} in {args.scores}")
    ranking = [c for c in args.ranking.split(",") if c]
    _emit_json(args, transfer.eval_ranking(ranking, table[args.target], args.k))


def cmd_dia_strip(args):
    _emit(args, "".join(diacritics.strip(line, args.mode) + "\n" for line in _lines(args.input)))


def cmd_dia_corrupt(args):
    out = diacritics.corrupt_lines(_lines(args.input), args.p_remove, args.p_replace, _seed(args))
    _emit(args, "".join(line + "\n" for line in out))


def cmd_dia_train(args):
    words = [w for line in _lines(args.input) for w in line.split()]
    _emit(args, diacritics.train_restorer(words).to_tsv())


def cmd_dia_restore(args):
    r = diacritics.Restorer.from_tsv(_read_text(args.restorer))
    _emit(args, "".join(diacritics.restore(line, r) + "\n" for line in _lines(args.input)))


def cmd_dia_score(args):
    ref = [w for line in _lines(args.reference) for w in line.split()]
    hyp = [w for line in _lines(args.hypothesis) for w in line.split()]
    _emit_json(args, diacritics.restoration_metrics(ref, hyp))


def _fallback(arg):
    if arg is None:
        return None
    vals = tuple(float(x) for x in arg.split(","))
    if len(vals) != 3:
        raise InputError("--discount-fallback takes three comma-separated values")
    return vals


def _lm_kwargs(args):
    if args.smoothing == "kn":
        return {"open_vocab": args.open_vocab, "discount_fallback": _fallback(args.discount_fallback)}
    return {"open_vocab": args.open_vocab, "k": args.k}


def cmd_lm_train(args):
    sents = [line.split() for line in _lines(args.input) if line.strip()]
    model = ngram.train_lm(sents, args.order, args.smoothing, **_lm_kwargs(args))
    _emit(args, ngram.write_arpa(model))


def cmd_lm_ppl(args):
    model = ngram.read_arpa(_read_text(args.model))
    sents = [line.split() for line in _lines(args.test) if line.strip()]
    n_events = sum(len(s) + 1 for s in sents)
    _emit_json(args, {"perplexity": ngram.perplexity(model, sents), "events": n_events,
                      "sentences": len(sents)})


def cmd_lm_coverage(args):
    train = ngram.read_sentences(args.train)
    test = ngram.read_sentences(args.test)
    _emit_json(args, {"vocab_coverage_pct": ngram.vocab_coverage(train, test)})


def _named_files(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise InputError(f"expected NAME=FILE, got {item!r}")
        name, path = item.split("=", 1)
        out[name] = ngram.read_sentences(path)
    return out


def cmd_lm_report(args):
    rep = ngram.domain_report(_named_files(args.train), _named_files(args.test),
                              args.order, args.smoothing, **_lm_kwargs(args))
    _emit(args, rep.to_tsv())


def cmd_vocab_count(args):
    v = vocab.SubwordVocab.load(args.vocab)
    lines = [line for p in args.input for line in vocab.read_lines(p)]
    counts = vocab.count_subwords(lines, v)
    _emit(args, "".join(f"{t}\t{counts[t]}\n" for t in v.tokens))


def cmd_vocab_reduce(args):
    v = vocab.SubwordVocab.load(args.vocab)
    groups = []
    for g in args.group:
        name, k, files = vocab.parse_group(g)
        groups.append(vocab.Group(name, [vocab.read_lines(f) for f in files], k))
    reduced = vocab.reduce_vocab(v, vocab.GroupSpec(groups, args.extra_top_m))
    _emit(args, reduced.to_text())
    print(json.dumps(vocab.reduction_summary(v, reduced)), file=sys.stderr)


def cmd_vocab_coverage(args):
    vocabs = {Path(p).name: vocab.SubwordVocab.load(p) for p in args.vocab}
    tests = {Path(p).name: vocab.read_lines(p) for p in args.test}
    per = {
        vn: {tn: vocab.coverage_stats(v, lines) for tn, lines in tests.items()}
        for vn, v in vocabs.items()
    }
    _emit_json(args, per)


def cmd_stats(args):
    _emit_json(args, corpus.corpus_stats(_conll(args.input)).to_dict())


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=None,
                        help="random seed (falls back to $FORGE_SEED, then 0)")

    p = _Parser(prog="lrcorpus", description="Low-resource NER corpus tooling.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def leaf(parent, name, func, help):
        sp = parent.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(func=func)
        return sp

    def group(name, help):
        g = sub.add_parser(name, help=help, description=help)
        gs = g.add_subparsers(dest="sub", metavar="SUBCOMMAND", parser_class=_Parser)
        gs.required = True
        return gs

    sp = leaf(sub, "annotate", cmd_annotate, "weakly annotate tokenized text with a gazetteer and date rules")
    sp.add_argument("--input", help="one tokenized sentence per line (default stdin)")
    sp.add_argument("--gazetteer", required=True, help="TSV name<TAB>class<TAB>source")
    sp.add_argument("--date-keywords", help="one keyword per line (default: built-in Yorùbá list)")
    sp.add_argument("--no-dates", action="store_true", help="disable date rules")
    sp.add_argument("--no-digit-rule", action="store_true")
    sp.add_argument("--precedence", default=",".join(weak_labeler.DEFAULT_PRECEDENCE))
    sp.add_argument("--min-len", action="append", metavar="SOURCE=N",
                    help="minimum name length in characters for a gazetteer source")
    sp.add_argument("--default-min-len", type=int, default=weak_labeler.DEFAULT_MIN_LEN)
    sp.add_argument("--casefold", action="store_true", help="case-insensitive matching")
    sp.add_argument("--jobs", type=int, default=1)

    sp = leaf(sub, "noise-estimate", cmd_noise_estimate, "estimate the clean->noisy class confusion matrix")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--noisy", required=True)
    sp.add_argument("--alpha", type=float, default=noise.DEFAULT_ALPHA)

    sp = leaf(sub, "noise-correct", cmd_noise_correct, "relabel noisy annotations by posterior argmax")
    sp.add_argument("--noisy", required=True)
    sp.add_argument("--matrix", required=True, help="JSON written by noise-estimate")

    sp = leaf(sub, "noise-report", cmd_noise_report, "quality of noisy labels against gold")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--noisy", required=True)

    ev = group("eval", "entity-level evaluation")
    sp = leaf(ev, "prf", cmd_eval_prf, "exact-match precision/recall/F1")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--classes", default=",".join(corpus.ENTITY_CLASSES))
    sp = leaf(ev, "oov", cmd_eval_oov, "percentage of test entities unseen in training")
    sp.add_argument("--test", required=True)
    sp.add_argument("--train", required=True)
    sp = leaf(ev, "buckets", cmd_eval_buckets, "F1 on zero-frequency and long entities")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--train", required=True)

    ag = group("agree", "inter-annotator agreement")
    sp = leaf(ag, "kappa", cmd_agree_kappa, "Fleiss' kappa over two or more annotations")
    sp.add_argument("annotations", nargs="+", help="CoNLL files over identical tokens")
    sp.add_argument("--level", choices=("token", "entity"), default="token")
    sp = leaf(ag, "confusion", cmd_agree_confusion, "entity-level confusion between annotators")
    sp.add_argument("annotations", nargs="+")

    sp = leaf(sub, "qc-flags", cmd_qc_flags, "flag likely annotation errors (JSON lines)")
    sp.add_argument("--input", required=True)
    d = agreement.QCConfig()
    sp.add_argument("--min-count", type=int, default=d.min_count)
    sp.add_argument("--entity-fraction", type=float, default=d.entity_fraction)
    sp.add_argument("--max-entropy", type=float, default=d.max_entropy, help="nats")
    sp.add_argument("--min-sentence-len", type=int, default=d.min_sentence_len)

    rk = group("rank", "transfer-language features and ranking")
    sp = leaf(rk, "features", cmd_rank_features, "transfer features for one source/target pair")
    sp.add_argument("--source", required=True, help="language profile JSON")
    sp.add_argument("--target", required=True)
    sp = leaf(rk, "sources", cmd_rank_sources, "rank candidate source languages for a target")
    sp.add_argument("--target", required=True)
    sp.add_argument("--candidates", nargs="+", required=True)
    sp.add_argument("--weights", action="append", metavar="FEATURE=W[,...]")
    sp = leaf(rk, "eval", cmd_rank_eval, "compare a ranking with observed transfer scores")
    sp.add_argument("--target", required=True, help="target language code")
    sp.add_argument("--ranking", required=True, help="comma-separated source codes, best first")
    sp.add_argument("--scores", required=True, help="TSV source<TAB>target<TAB>f1")
    sp.add_argument("--k", type=int, default=2)

    dg = group("diacritics", "diacritic stripping, corruption and restoration")
    sp = leaf(dg, "strip", cmd_dia_strip, "remove tonal marks or all diacritics")
    sp.add_argument("--input")
    sp.add_argument("--mode", choices=("tonal", "all"), default="all")
    sp = leaf(dg, "corrupt", cmd_dia_corrupt, "randomly delete or replace tonal marks")
    sp.add_argument("--input")
    sp.add_argument("--p-remove", type=float, default=0.3)
    sp.add_argument("--p-replace", type=float, default=0.3)
    sp = leaf(dg, "train-restorer", cmd_dia_train, "learn most-frequent diacritized forms (TSV)")
    sp.add_argument("--input")
    sp = leaf(dg, "restore", cmd_dia_restore, "restore diacritics with a trained table")
    sp.add_argument("--restorer", required=True)
    sp.add_argument("--input")
    sp = leaf(dg, "score", cmd_dia_score, "word accuracy and diacritic precision/recall")
    sp.add_argument("--reference", required=True)
    sp.add_argument("--hypothesis", required=True)

    lm = group("lm", "n-gram language models")

    def lm_opts(sp):
        sp.add_argument("--order", type=int, default=5)
        sp.add_argument("--smoothing", choices=("kn", "addk"), default="kn")
        sp.add_argument("--k", type=float, default=1.0, help="add-k constant")
        sp.add_argument("--open-vocab", action="store_true", help="map training singletons to <unk>")
        sp.add_argument("--discount-fallback", metavar="D1,D2,D3",
                        help="discounts to use where Kneser-Ney estimates are undefined")

    sp = leaf(lm, "train", cmd_lm_train, "train a model and write it in ARPA format")
    sp.add_argument("--input", help="one tokenized sentence per line")
    lm_opts(sp)
    sp = leaf(lm, "ppl", cmd_lm_ppl, "perplexity of a test set")
    sp.add_argument("--model", required=True)
    sp.add_argument("--test", required=True)
    sp = leaf(lm, "coverage", cmd_lm_coverage, "token-level vocabulary coverage")
    sp.add_argument("--train", required=True)
    sp.add_argument("--test", required=True)
    sp = leaf(lm, "report", cmd_lm_report, "perplexity and coverage matrix (TSV)")
    sp.add_argument("--train", nargs="+", required=True, metavar="NAME=FILE")
    sp.add_argument("--test", nargs="+", required=True, metavar="NAME=FILE")
    lm_opts(sp)

    vc = group("vocab", "subword vocabulary reduction")
    sp = leaf(vc, "count", cmd_vocab_count, "subword frequencies over text files")
    sp.add_argument("--vocab", required=True, help="one token per line, rank order")
    sp.add_argument("--input", nargs="+", required=True)
    sp = leaf(vc, "reduce", cmd_vocab_reduce, "keep each group's top-k tokens plus the top-m originals")
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--group", action="append", required=True, metavar="NAME:K:FILE[,FILE]")
    sp.add_argument("--extra-top-m", type=int, default=0)
    sp = leaf(vc, "coverage", cmd_vocab_coverage, "UNK counts of vocabularies on test files")
    sp.add_argument("--vocab", nargs="+", required=True)
    sp.add_argument("--test", nargs="+", required=True)

    sp = leaf(sub, "stats", cmd_stats, "corpus statistics")
    sp.add_argument("--input", required=True)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as e:  # --help
        return e.code if isinstance(e.code, int) else 0
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (InvariantViolation, AssertionError) as e:
        print(f"lrcorpus: internal error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"lrcorpus: {e.strerror or e}: {e.filename}" if e.filename else f"lrcorpus: {e}",
              file=sys.stderr)
        return 1
    except (InputError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"lrcorpus: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
