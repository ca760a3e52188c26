"""Command-line interface.

Stages can run one at a time through intermediate files
(ingest -> preprocess -> featurize -> label -> train -> evaluate -> report)
or all at once with ``run`` from a JSON experiment config.

Exit codes: 0 success, 2 config error, 3 data error, 4 backend error.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from collections import Counter
from datetime import date

import numpy as np

from . import dataset as ds
from . import emotion as emo
from . import experiment as ex
from . import ingest, inference, lstm, preprocess
from .errors import ConfigError, DataError, EmostockError

log = logging.getLogger("emostock")


def _read(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None


def _write(path, data):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _schema(value):
    if value in (None, "default"):
        return None
    if value == "kaggle":
        return ingest.KAGGLE_TWEET_SCHEMA
    try:
        return json.loads(_read(value))
    except ValueError as exc:
        raise ConfigError(f"bad schema file {value}: {exc}") from exc


# -- ingest -----------------------------------------------------------------


def cmd_ingest(args):
    parsed = ingest.parse_tweets(_read(args.tweets), _schema(args.schema))
    tweets = parsed.tweets
    if args.ticker:
        tweets = [t for t in tweets if t.ticker == args.ticker.upper()]
    prices = ingest.parse_prices(_read(args.prices))
    report = ingest.align(tweets, prices)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "tweets.csv"), ingest.write_tweets(tweets))
    _write(os.path.join(args.out, "prices.csv"), ingest.write_prices(prices))
    _write(os.path.join(args.out, "rejects.csv"), ingest.write_rejects(parsed.rejects))
    summary = {k: (v.isoformat() if isinstance(v, date) else v) for k, v in report.__dict__.items()}
    summary.update(tweets=len(tweets), rejects=len(parsed.rejects), price_rows=len(prices))
    _write(os.path.join(args.out, "alignment.json"), (json.dumps(summary, indent=2) + "\n").encode())
    print(json.dumps(summary, indent=2))


# -- preprocess -------------------------------------------------------------


def _annotated_line(tweet, tokens, labels, kept):
    return json.dumps({"date": tweet.date.isoformat(), "ticker": tweet.ticker, "company": tweet.company,
                       "text": tweet.text, "tokens": list(tokens),
                       "labels": list(labels.labels) if labels is not None else None, "kept": kept},
                      ensure_ascii=False, sort_keys=True)


def cmd_preprocess(args):
    tweets, rejects = ingest.parse_tweets(_read(args.tweets))
    stopwords = preprocess.load_stopwords(args.stopwords)
    lines = []
    if args.llm_backend == "none":
        for item in preprocess.clean_only(tweets, stopwords):
            lines.append(_annotated_line(item.tweet, item.tokens, None, None))
        stats = None
    else:
        llm = inference.make_llm_backend(args.llm_backend, args.cache, args.stub_rules)
        kept, stats = preprocess.filter_and_annotate(tweets, llm, stopwords, args.max_in_flight,
                                                     args.retry_unparseable)
        by_tweet = {id(a.tweet): a for a in kept}
        for t in tweets:
            a = by_tweet.get(id(t))
            if a is None:
                lines.append(_annotated_line(t, preprocess.clean_text(t.text, stopwords), None, False))
            else:
                lines.append(_annotated_line(t, a.tokens, a.labels, True))
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "annotated.jsonl"), ("\n".join(lines) + "\n").encode("utf-8") if lines else b"")
    if stats is not None:
        _write(os.path.join(args.out, "filter_stats.csv"), stats.to_csv())
        print(stats.to_csv().decode(), end="")
    else:
        print(f"cleaned {len(lines)} tweets (no LLM filtering)")


def _load_annotated(path, enhanced):
    items, all_tweets = [], []
    for n, line in enumerate(_read(path).decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        tweet = ingest.Tweet(date.fromisoformat(rec["date"]), rec["ticker"], rec["company"], rec["text"])
        all_tweets.append(tweet)
        if enhanced:
            if rec["kept"] is None:
                raise ConfigError(f"{path}: --enhanced needs a preprocess run with an LLM backend")
            if rec["kept"]:
                labels = preprocess.EmotionLabels(tuple(rec["labels"]))
                items.append(preprocess.AnnotatedTweet(tweet, labels, tuple(rec["tokens"])))
        else:
            items.append(preprocess.CleanTweet(tweet, tuple(rec["tokens"])))
    return items, all_tweets


# -- featurize --------------------------------------------------------------


def _daily_csv(daily, method):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", *method.dims, "tweet_volume", "tweet_count"])
    for d in sorted(daily):
        de = daily[d]
        writer.writerow([d.isoformat(), *(repr(v) for v in de.mean_vector.values), de.raw_tweet_count,
                         de.tweet_count])
    return buf.getvalue().encode("utf-8")


def _load_daily(path):
    reader = csv.reader(io.StringIO(_read(path).decode("utf-8"), newline=""))
    header = next(reader)
    dims = tuple(header[1:-2])
    method = next((m for m in emo.Method if m.dims == dims), None)
    if method is None:
        raise DataError(f"{path}: emotion columns {dims} match no method")
    daily = {}
    for rec in reader:
        d = date.fromisoformat(rec[0])
        vec = emo.EmotionVector(method, tuple(float(v) for v in rec[1:-2]))
        daily[d] = ds.DailyEmotion(d, vec, int(rec[-2]), int(rec[-1]))
    return daily, method


def cmd_featurize(args):
    method = emo.Method(args.method)
    items, all_tweets = _load_annotated(args.annotated, args.enhanced)
    prices = ingest.parse_prices(_read(args.prices))
    lexicon = classifier = None
    if method is emo.Method.M1:
        classifier = inference.make_classifier_backend(args.classifier_backend, args.classifier_cache)
    else:
        if not args.lexicon:
            raise ConfigError(f"--lexicon is required for method {method.value}")
        lexicon = emo.load_lexicon(_read(args.lexicon), "intensity" if method is emo.Method.M2 else "binary")
    if args.analyze == "labels" and not args.enhanced:
        raise ConfigError("--analyze labels needs --enhanced")
    vectors = ex.score_items(items, method, args.analyze, lexicon, classifier)
    raw_counts = Counter(t.date for t in all_tweets)
    daily = ds.aggregate_daily(vectors, raw_counts, [p.date for p in prices], args.non_trading)
    os.makedirs(args.out, exist_ok=True)
    records = [(i, d, v) for i, (d, v) in enumerate(vectors)]
    _write(os.path.join(args.out, "tweet_vectors.csv"), emo.vectors_to_csv(records))
    _write(os.path.join(args.out, "daily_emotions.csv"), _daily_csv(daily, method))
    msg = f"scored {len(vectors)} tweets with {method.display}; {len(daily)} trading days"
    if lexicon is not None:
        n_tok = sum(len(i.tokens) for i in items)
        matched = sum(1 for i in items for t in i.tokens if t in lexicon)
        msg += f"; lexicon match rate {matched / n_tok if n_tok else 0:.3f}"
    print(msg)


# -- label ------------------------------------------------------------------


def cmd_label(args):
    prices = ingest.parse_prices(_read(args.prices))
    labels, sigma = ex.labels_for(prices, args.sigma_scope, args.train_fraction)
    daily, method = (None, None)
    if args.daily:
        daily, method = _load_daily(args.daily)
    rows = ds.build_rows(prices, daily, labels, "augmented" if daily else "baseline")
    os.makedirs(args.out, exist_ok=True)
    pc = dict(ds.percent_change(prices))
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", "percent_change", "label"])
    for d in sorted(labels):
        writer.writerow([d.isoformat(), repr(pc[d]), labels[d].display])
    _write(os.path.join(args.out, "labels.csv"), buf.getvalue().encode("utf-8"))
    _write(os.path.join(args.out, "dataset.csv"), ds.rows_to_csv(rows, method))
    counts = ds.class_distribution(labels.values())
    _write(os.path.join(args.out, "class_distribution.csv"), ds.class_distribution_csv([(args.ticker, counts)]))
    print(f"sigma={sigma:.6g}; {len(rows)} rows; " + ", ".join(f"{k.display}={v}" for k, v in counts.items()))


# -- train / evaluate -------------------------------------------------------


def _model_overrides(args):
    keys = {"hidden_units": args.hidden_units, "num_layers": args.layers, "dropout_rate": args.dropout,
            "learning_rate": args.lr, "epochs": args.epochs, "batch_size": args.batch_size,
            "window": args.window, "seed": args.seed}
    return {k: v for k, v in keys.items() if v is not None}


def _load_split(path, train_fraction):
    rows, names = ds.rows_from_csv(_read(path))
    return ds.split_and_scale(rows, train_fraction), names


def cmd_train(args):
    split, names = _load_split(args.dataset, args.train_fraction)
    cfg = lstm.ModelConfig(input_dim=split.n_features, **_model_overrides(args))
    model = lstm.train(split, cfg)
    model.metadata.update(feature_names=names, train_fraction=args.train_fraction)
    _write(args.out, lstm.save_checkpoint(model))
    print(f"trained {cfg.epochs} epochs on {len(split.train)} rows; final loss "
          f"{model.loss_trace[-1] if model.loss_trace else float('nan'):.4f}")


def cmd_evaluate(args):
    runs = []
    for path in args.model:
        model = lstm.load_checkpoint(_read(path))
        fraction = model.metadata.get("train_fraction", args.train_fraction)
        split, _ = _load_split(args.dataset, fraction)
        X_test = lstm.eval_sequences(split, model.config.window)
        actual = [ds.MovementLabel(int(k)) for k in split.y_test]
        runs.append(ex.compute_metrics(lstm.predict(model, X_test), actual))
    out = {"runs": [r.as_dict() for r in runs], "mean": ex.mean_metrics(runs).as_dict()}
    _write(args.out, (json.dumps(out, indent=2, sort_keys=True) + "\n").encode())


# -- report / run -----------------------------------------------------------


def cmd_report(args):
    suite = ex.SuiteReport.from_dict(json.loads(_read(args.input)))
    _write(args.out, ex.emit_report(suite, args.format))


def cmd_run(args):
    configs = ex.load_config(args.config)
    if args.repetitions is not None or args.epochs is not None:
        for c in configs:
            if args.repetitions is not None:
                c.repetitions = args.repetitions
            if args.epochs is not None:
                c.model = {**c.model, "epochs": args.epochs}
    if args.only:
        wanted = set(args.only)
        configs = [c for c in configs if c.mode in wanted]
    suite = ex.run_suite(configs)
    written = ex.write_bundle(suite, args.out)
    sys.stdout.buffer.write(ex.emit_report(suite, "md"))
    print(f"\nwrote {', '.join(written)} to {args.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="emostock", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="parse tweets and prices, report calendar alignment")
    s.add_argument("--tweets", required=True)
    s.add_argument("--prices", required=True)
    s.add_argument("--ticker")
    s.add_argument("--schema", help="'default', 'kaggle' or a JSON file mapping date/ticker/company/text")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("preprocess", help="LLM emotion filtering and text cleaning")
    s.add_argument("--tweets", required=True, help="tweet CSV in the default schema (see ingest)")
    s.add_argument("--llm-backend", choices=["http", "replay", "stub", "none"], default="stub")
    s.add_argument("--cache", help="JSON-lines response cache")
    s.add_argument("--stub-rules", help="JSON list of [substring, response] pairs for the stub backend")
    s.add_argument("--stopwords")
    s.add_argument("--max-in-flight", type=int, default=1)
    s.add_argument("--retry-unparseable", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("featurize", help="tweet emotion vectors and daily averages")
    s.add_argument("--annotated", required=True)
    s.add_argument("--prices", required=True)
    s.add_argument("--method", choices=["m1", "m2", "m3"], required=True)
    s.add_argument("--enhanced", action="store_true", help="use only tweets kept by the LLM filter")
    s.add_argument("--lexicon")
    s.add_argument("--classifier-backend", choices=["http", "replay", "stub"], default="stub")
    s.add_argument("--classifier-cache")
    s.add_argument("--analyze", choices=["text", "labels"], default="text")
    s.add_argument("--non-trading", choices=["roll", "drop"], default="roll")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("label", help="sigma labels and the final feature dataset")
    s.add_argument("--prices", required=True)
    s.add_argument("--daily", help="daily_emotions.csv from featurize; omit for the price-only baseline")
    s.add_argument("--ticker", default="UNKNOWN")
    s.add_argument("--sigma-scope", choices=["full", "train_only"], default="full")
    s.add_argument("--train-fraction", type=float, default=0.7)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_label)

    s = sub.add_parser("train", help="train one LSTM on a dataset CSV")
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--train-fraction", type=float, default=0.7)
    for flag, typ in (("--hidden-units", int), ("--layers", int), ("--dropout", float), ("--lr", float),
                      ("--epochs", int), ("--batch-size", int), ("--window", int), ("--seed", int)):
        s.add_argument(flag, type=typ)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score checkpoints on the test split")
    s.add_argument("--dataset", required=True)
    s.add_argument("--model", required=True, nargs="+")
    s.add_argument("--train-fraction", type=float, default=0.7)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", help="render a report.json as markdown or CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--format", choices=["md", "csv"], default="md")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("run", help="full pipeline from a JSON experiment config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--repetitions", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--only", nargs="+", choices=list(ex.MODES), help="restrict to these modes")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except EmostockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
