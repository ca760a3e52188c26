"""Experiment protocol: baseline vs emotion-augmented LSTMs, repeated runs, metrics and reports."""

import csv
import io
import json
import logging
import math
import os
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.special import stdtr

from . import dataset as ds
from . import emotion as emo
from . import ingest, inference, lstm, preprocess
from .dataset import MovementLabel
from .errors import (
    ConfigError,
    EmostockError,
    EmptyMetrics,
    LengthMismatch,
    StageError,
    TooFewRuns,
)

log = logging.getLogger(__name__)

MODES = ("baseline", "m1", "m2", "m3")
METRIC_NAMES = ("si_accuracy", "sd_accuracy", "stable_accuracy", "avg_si_sd")
METRIC_HEADERS = {"si_accuracy": "S-I", "sd_accuracy": "S-D", "stable_accuracy": "Stable",
                  "avg_si_sd": "Average S-I & S-D"}


# -- metrics ----------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    si_accuracy: float
    sd_accuracy: float
    stable_accuracy: float
    avg_si_sd: float
    support: dict = field(default_factory=dict)
    zero_support: tuple = ()

    def as_dict(self):
        return {"si_accuracy": self.si_accuracy, "sd_accuracy": self.sd_accuracy,
                "stable_accuracy": self.stable_accuracy, "avg_si_sd": self.avg_si_sd,
                "support": dict(self.support), "zero_support": list(self.zero_support)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["si_accuracy"], d["sd_accuracy"], d["stable_accuracy"], d["avg_si_sd"],
                   dict(d.get("support", {})), tuple(d.get("zero_support", ())))


_SUPPORT_KEYS = {MovementLabel.STABLE: "stable", MovementLabel.SIGNIFICANT_INCREASE: "si",
                 MovementLabel.SIGNIFICANT_DECREASE: "sd"}


def compute_metrics(predicted, actual):
    """Per-class recall for S-I, S-D and Stable, plus the S-I/S-D average.

    A class absent from ``actual`` gets accuracy 0 and is listed in ``zero_support``.
    """
    if len(predicted) != len(actual):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(actual)} labels")
    if not actual:
        raise EmptyMetrics("cannot score an empty test set")
    support = Counter(MovementLabel(a) for a in actual)
    correct = Counter(MovementLabel(a) for p, a in zip(predicted, actual) if MovementLabel(p) == MovementLabel(a))
    acc = {}
    zero = []
    for label in MovementLabel:
        if support[label]:
            acc[label] = correct[label] / support[label]
        else:
            acc[label] = 0.0
            zero.append(_SUPPORT_KEYS[label])
    si = acc[MovementLabel.SIGNIFICANT_INCREASE]
    sd = acc[MovementLabel.SIGNIFICANT_DECREASE]
    return Metrics(si, sd, acc[MovementLabel.STABLE], (si + sd) / 2,
                   {_SUPPORT_KEYS[k]: support[k] for k in MovementLabel}, tuple(zero))


def mean_metrics(runs):
    if not runs:
        raise EmptyMetrics("no runs to average")
    n = len(runs)
    si = math.fsum(r.si_accuracy for r in runs) / n
    sd = math.fsum(r.sd_accuracy for r in runs) / n
    stable = math.fsum(r.stable_accuracy for r in runs) / n
    zero = tuple(sorted({z for r in runs for z in r.zero_support}))
    return Metrics(si, sd, stable, (si + sd) / 2, dict(runs[0].support), zero)


# -- significance -----------------------------------------------------------


@dataclass(frozen=True)
class Significance:
    label: str
    method: str
    baseline: str
    test: str
    t_statistic: float
    p_value: float
    n_a: int
    n_b: int

    def as_dict(self):
        return asdict(self)


def compare_significance(runs_a, runs_b, test="welch"):
    """Two-sided two-sample t-test; Welch–Satterthwaite degrees of freedom by default.

    Returns ``(t, p)``. When both samples have zero variance the result is
    ``(0, 1)`` for equal means and ``(±inf, 0)`` otherwise.
    """
    a = np.asarray(runs_a, dtype=float)
    b = np.asarray(runs_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise TooFewRuns(f"need at least 2 runs per sample, got {a.size} and {b.size}")
    na, nb = a.size, b.size
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if test == "welch":
        qa, qb = va / na, vb / nb
        se2 = qa + qb
        df = se2 * se2 / (qa * qa / (na - 1) + qb * qb / (nb - 1)) if se2 > 0 else math.inf
    elif test == "student":
        pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        se2 = pooled * (1.0 / na + 1.0 / nb)
        df = na + nb - 2
    else:
        raise ConfigError(f"unknown significance test {test!r}")
    if se2 == 0:
        if ma == mb:
            return 0.0, 1.0
        return math.copysign(math.inf, ma - mb), 0.0
    t = float((ma - mb) / math.sqrt(se2))
    p = float(min(1.0, 2.0 * stdtr(df, -abs(t))))
    return t, p


# -- configuration ----------------------------------------------------------


@dataclass
class ExperimentConfig:
    ticker: str
    tweets: str
    prices: str
    mode: str = "baseline"
    llama_enhanced: bool = False
    start: str = None
    end: str = None
    lexicon_intensity: str = None
    lexicon_binary: str = None
    cache: str = None
    classifier_cache: str = None
    stopwords: str = None
    stub_rules: str = None
    tweet_schema: dict = None
    llm_backend: str = "stub"
    classifier_backend: str = "stub"
    model: dict = field(default_factory=dict)
    repetitions: int = 10
    base_seed: int = 0
    train_fraction: float = 0.7
    analyze: str = "text"
    sigma_scope: str = "full"
    non_trading: str = "roll"
    max_in_flight: int = 1
    retry_unparseable: int = 0
    significance_test: str = "welch"

    def __post_init__(self):
        self.mode = str(self.mode).lower()
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "baseline":
            self.llama_enhanced = False
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        choices = {"analyze": ("text", "labels"), "sigma_scope": ("full", "train_only"),
                   "non_trading": ("roll", "drop"), "llm_backend": ("stub", "replay", "http"),
                   "classifier_backend": ("stub", "replay", "http"), "significance_test": ("welch", "student")}
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.analyze == "labels" and not self.llama_enhanced and self.mode != "baseline":
            raise ConfigError("analyze='labels' needs llama_enhanced (labels come from the LLM)")
        if self.mode == "m2" and not self.lexicon_intensity:
            raise ConfigError("mode m2 needs lexicon_intensity")
        if self.mode == "m3" and not self.lexicon_binary:
            raise ConfigError("mode m3 needs lexicon_binary")
        bad = set(self.model) - {f.name for f in fields(lstm.ModelConfig)} | ({"input_dim"} & set(self.model))
        if bad:
            raise ConfigError(f"bad model keys {sorted(bad)}")

    @property
    def method(self):
        return None if self.mode == "baseline" else emo.Method(self.mode)

    def echo(self):
        return asdict(self)


_PATH_FIELDS = ("tweets", "prices", "lexicon_intensity", "lexicon_binary", "cache", "classifier_cache",
                "stopwords", "stub_rules")


def load_config(path):
    """Read a JSON experiment file and expand it into a list of :class:`ExperimentConfig`.

    Besides plain :class:`ExperimentConfig` keys the file may contain
    ``tickers``, ``modes`` and ``enhanced`` lists; their product is expanded,
    running each baseline once per ticker. Relative paths resolve against the
    file's directory.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return expand_config(doc, os.path.dirname(os.path.abspath(path)))


def expand_config(doc, base_dir="."):
    doc = dict(doc)
    for key in _PATH_FIELDS:
        if doc.get(key) and not os.path.isabs(doc[key]):
            doc[key] = os.path.normpath(os.path.join(base_dir, doc[key]))
    tickers = doc.pop("tickers", None) or [doc.pop("ticker", None)]
    modes = doc.pop("modes", None) or [doc.pop("mode", "baseline")]
    enhanced = doc.pop("enhanced", None)
    if enhanced is None:
        enhanced = [doc.pop("llama_enhanced", False)]
    doc.pop("ticker", None)
    doc.pop("mode", None)
    doc.pop("llama_enhanced", None)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if None in tickers:
        raise ConfigError("config needs 'ticker' or 'tickers'")
    configs = []
    for ticker in tickers:
        for mode in modes:
            if mode == "baseline":
                configs.append(ExperimentConfig(ticker=ticker, mode=mode, **doc))
                continue
            for enh in enhanced:
                configs.append(ExperimentConfig(ticker=ticker, mode=mode, llama_enhanced=bool(enh), **doc))
    return configs


# -- pipeline ---------------------------------------------------------------


@dataclass
class PreparedData:
    split: ds.SplitDataset
    feature_names: list
    sigma: float
    class_counts: dict
    filter_stats: preprocess.FilterStats = None
    emotion_means: dict = None
    alignment: ingest.AlignmentReport = None
    rejects: int = 0
    match_rate: float = None


@dataclass
class ExperimentReport:
    config: dict
    runs: list
    mean: Metrics
    feature_names: list
    sigma: float
    class_distribution: dict
    filter_stats: list = field(default_factory=list)
    emotion_means: dict = None
    significance: list = field(default_factory=list)
    alignment: dict = None

    @property
    def ticker(self):
        return self.config["ticker"]

    @property
    def mode(self):
        return self.config["mode"]

    @property
    def enhanced(self):
        return bool(self.config["llama_enhanced"])

    def as_dict(self):
        return {
            "config": self.config,
            "runs": [r.as_dict() for r in self.runs],
            "mean": self.mean.as_dict(),
            "feature_names": list(self.feature_names),
            "sigma": self.sigma,
            "class_distribution": dict(self.class_distribution),
            "filter_stats": list(self.filter_stats),
            "emotion_means": self.emotion_means,
            "significance": [s.as_dict() for s in self.significance],
            "alignment": self.alignment,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], [Metrics.from_dict(r) for r in d["runs"]], Metrics.from_dict(d["mean"]),
                   d["feature_names"], d["sigma"], d["class_distribution"], d.get("filter_stats", []),
                   d.get("emotion_means"), [Significance(**s) for s in d.get("significance", [])],
                   d.get("alignment"))


@dataclass
class SuiteReport:
    reports: list
    pooled: list = field(default_factory=list)

    def as_dict(self):
        return {"reports": [r.as_dict() for r in self.reports], "pooled": [s.as_dict() for s in self.pooled]}

    @classmethod
    def from_dict(cls, d):
        return cls([ExperimentReport.from_dict(r) for r in d["reports"]],
                   [Significance(**s) for s in d.get("pooled", [])])

    def to_json(self):
        return (json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (EmostockError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _parse_day(value):
    if value is None:
        return None
    return value if isinstance(value, date) else date.fromisoformat(value)


def load_inputs(config):
    """Parse tweets and prices for the configured ticker and date range."""
    parsed = ingest.parse_tweets(_read(config.tweets), config.tweet_schema)
    prices = ingest.parse_prices(_read(config.prices.replace("{ticker}", config.ticker)))
    start, end = _parse_day(config.start), _parse_day(config.end)
    if start or end:
        prices = [p for p in prices if (not start or p.date >= start) and (not end or p.date <= end)]
    tweets = [t for t in parsed.tweets if t.ticker == config.ticker.upper()]
    if start or end:
        tweets = [t for t in tweets if (not start or t.date >= start) and (not end or t.date <= end)]
    return tweets, prices, len(parsed.rejects)


def preprocess_tweets(config, tweets, stopwords):
    """Returns (items, filter_stats). Items carry ``.tweet``, ``.tokens`` and optionally ``.labels``."""
    if config.llama_enhanced:
        llm = inference.make_llm_backend(config.llm_backend, config.cache, config.stub_rules)
        return preprocess.filter_and_annotate(tweets, llm, stopwords, config.max_in_flight,
                                              config.retry_unparseable)
    return preprocess.clean_only(tweets, stopwords), None


def score_items(items, method, analyze="text", lexicon=None, classifier=None):
    """Tweet vectors for one method. M1 skips tweets whose analyzed text is empty."""
    method = emo.Method(method)
    out = []
    for item in items:
        tokens = preprocess.label_tokens(item.labels) if analyze == "labels" else item.tokens
        if method is emo.Method.M1:
            text = " ".join(tokens)
            if not text:
                continue
            out.append((item.tweet.date, emo.score_transformer(text, classifier)))
        else:
            out.append((item.tweet.date, emo.score_lexicon(tokens, lexicon)))
    return out


def _lexicon_for(config):
    if config.mode == "m2":
        return emo.load_lexicon_file(config.lexicon_intensity, emo.LexiconKind.INTENSITY)
    if config.mode == "m3":
        return emo.load_lexicon_file(config.lexicon_binary, emo.LexiconKind.BINARY)
    return None


def labels_for(prices, sigma_scope="full", train_fraction=0.7):
    pc = ds.percent_change(prices)
    values = [v for _, v in pc]
    if sigma_scope == "train_only":
        values = values[:ds.split_index(len(values), train_fraction)]
    s = ds.sigma(values)
    return ds.label_movements(pc, s), s


def prepare(config, memo=None):
    """Everything up to the split dataset. ``memo`` (a dict) shares parsed and LLM-filtered tweets across configs."""
    memo = {} if memo is None else memo
    key_in = ("inputs", config.tweets, config.prices, config.ticker, config.start, config.end,
              json.dumps(config.tweet_schema, sort_keys=True))
    if key_in not in memo:
        memo[key_in] = _stage("ingest", load_inputs, config)
    tweets, prices, n_rejects = memo[key_in]
    alignment = ingest.align(tweets, prices) if tweets and prices else None

    filter_stats = None
    emotion_means = None
    match = None
    daily = None
    method = config.method
    if method is not None:
        stopwords = preprocess.load_stopwords(config.stopwords)
        key_pre = ("pre", key_in, config.llama_enhanced, config.llm_backend, config.cache, config.stub_rules,
                   config.stopwords)
        if key_pre not in memo:
            memo[key_pre] = _stage("preprocess", preprocess_tweets, config, tweets, stopwords)
        items, filter_stats = memo[key_pre]

        def featurize():
            lexicon = _lexicon_for(config)
            classifier = (inference.make_classifier_backend(config.classifier_backend, config.classifier_cache)
                          if method is emo.Method.M1 else None)
            vectors = score_items(items, method, config.analyze, lexicon, classifier)
            rate = None
            if lexicon is not None:
                n_tok = sum(len(i.tokens) for i in items)
                rate = sum(emo.match_rate(i.tokens, lexicon) * len(i.tokens) for i in items) / n_tok if n_tok else 0.0
            raw_counts = Counter(t.date for t in tweets)
            return ds.aggregate_daily(vectors, raw_counts, [p.date for p in prices], config.non_trading), vectors, rate

        daily, vectors, match = _stage("emotion", featurize)
        if vectors:
            emotion_means = {dim: math.fsum(v.values[k] for _, v in vectors) / len(vectors)
                             for k, dim in enumerate(method.dims)}
        else:
            emotion_means = {dim: 0.0 for dim in method.dims}

    def build():
        labels, s = labels_for(prices, config.sigma_scope, config.train_fraction)
        rows = ds.build_rows(prices, daily, labels, "baseline" if method is None else "augmented")
        return ds.split_and_scale(rows, config.train_fraction), s, ds.class_distribution(labels.values())

    split, s, counts = _stage("dataset", build)
    return PreparedData(split, ds.feature_names(method), s, counts, filter_stats, emotion_means,
                        alignment, n_rejects, match)


def run_repetitions(split, config):
    model_cfg = lstm.ModelConfig(input_dim=split.n_features, **config.model)
    X_test = lstm.eval_sequences(split, model_cfg.window)
    actual = [MovementLabel(int(k)) for k in split.y_test]
    runs = []
    models = []
    for i in range(config.repetitions):
        cfg = model_cfg.replace(seed=config.base_seed + i)
        model = lstm.train(split, cfg)
        runs.append(compute_metrics(lstm.predict(model, X_test), actual))
        models.append(model)
        log.info("%s %s enhanced=%s run %d: avg S-I/S-D %.3f", config.ticker, config.mode,
                 config.llama_enhanced, i, runs[-1].avg_si_sd)
    return runs, models


def run_experiment(config, memo=None, keep_models=False):
    """Run one (ticker, mode, enhanced) configuration for ``config.repetitions`` seeds."""
    prepared = prepare(config, memo)
    runs, models = _stage("train", run_repetitions, prepared.split, config)
    report = ExperimentReport(
        config=config.echo(),
        runs=runs,
        mean=mean_metrics(runs),
        feature_names=prepared.feature_names,
        sigma=prepared.sigma,
        class_distribution={label.display: n for label, n in prepared.class_counts.items()},
        filter_stats=prepared.filter_stats.rows() if prepared.filter_stats else [],
        emotion_means=prepared.emotion_means,
        alignment={k: (v.isoformat() if isinstance(v, date) else v)
                   for k, v in asdict(prepared.alignment).items()} if prepared.alignment else None,
    )
    if keep_models:
        return report, models
    return report


def _run_values(report):
    return [r.avg_si_sd for r in report.runs]


def attach_significance(reports, test="welch"):
    """Compare every emotion configuration against its ticker's baseline, and pooled across tickers."""
    baselines = {r.ticker: r for r in reports if r.mode == "baseline"}
    for r in reports:
        base = baselines.get(r.ticker)
        if r.mode == "baseline" or base is None or len(r.runs) < 2 or len(base.runs) < 2:
            continue
        t, p = compare_significance(_run_values(r), _run_values(base), test)
        r.significance = [Significance("per_ticker", r.mode, "baseline", test, t, p, len(r.runs), len(base.runs))]

    pooled = []
    groups = {}
    for r in reports:
        if r.mode != "baseline" and r.ticker in baselines:
            groups.setdefault((r.mode, r.enhanced), []).append(r)
    for (mode, enhanced), rs in sorted(groups.items()):
        a = [v for r in rs for v in _run_values(r)]
        b = [v for r in rs for v in _run_values(baselines[r.ticker])]
        if len(a) < 2 or len(b) < 2:
            continue
        t, p = compare_significance(a, b, test)
        label = "pooled_enhanced" if enhanced else "pooled"
        pooled.append(Significance(label, mode, "baseline", test, t, p, len(a), len(b)))
    return pooled


def run_suite(configs, memo=None):
    memo = {} if memo is None else memo
    reports = [run_experiment(c, memo) for c in configs]
    test = configs[0].significance_test if configs else "welch"
    pooled = attach_significance(reports, test)
    return SuiteReport(reports, pooled)


# -- reporting --------------------------------------------------------------


def format_percent(value):
    """Fraction to a percentage string with one decimal, rounding halves up."""
    pct = (Decimal(repr(float(value))) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return f"{pct}%"


def _method_name(mode):
    return "Baseline" if mode == "baseline" else emo.Method(mode).display


def _settings(suite):
    """(enhanced flag, title) pairs present in the suite; baseline rows appear under each."""
    flags = sorted({r.enhanced for r in suite.reports if r.mode != "baseline"}) or [False]
    titles = {False: "Stock Price Prediction Results With Emotion Analysis",
              True: "Stock Price Prediction Results With LLM-Enhanced Emotion Analysis"}
    return [(f, titles[f]) for f in flags]


def _table_rows(suite, enhanced):
    """{ticker: {mode: Metrics}} for one setting."""
    table = {}
    for r in suite.reports:
        if r.mode == "baseline" or r.enhanced == enhanced:
            table.setdefault(r.ticker, {})[r.mode] = r.mean
    return table


def _average_block(table):
    modes = [m for m in MODES if any(m in per for per in table.values())]
    avg = {}
    for m in modes:
        ms = [per[m] for per in table.values() if m in per]
        si = math.fsum(x.si_accuracy for x in ms) / len(ms)
        sd = math.fsum(x.sd_accuracy for x in ms) / len(ms)
        st = math.fsum(x.stable_accuracy for x in ms) / len(ms)
        avg[m] = Metrics(si, sd, st, (si + sd) / 2)
    return avg


def _md_table(per_mode):
    lines = ["| Method | S-I | S-D | Stable | Average S-I & S-D |", "|---|---|---|---|---|"]
    for mode in MODES:
        if mode in per_mode:
            m = per_mode[mode]
            lines.append(f"| {_method_name(mode)} | {format_percent(m.si_accuracy)} | {format_percent(m.sd_accuracy)} "
                         f"| {format_percent(m.stable_accuracy)} | {format_percent(m.avg_si_sd)} |")
    return lines


def _render_markdown(suite):
    out = []
    for enhanced, title in _settings(suite):
        out.append(f"## {title}")
        out.append("")
        table = _table_rows(suite, enhanced)
        for ticker in sorted(table):
            out.append(f"### {ticker}")
            out.append("")
            out += _md_table(table[ticker])
            out.append("")
        out.append("### Average")
        out.append("")
        out += _md_table(_average_block(table))
        out.append("")
    sig = [(r.ticker, s) for r in suite.reports for s in r.significance] + [("all", s) for s in suite.pooled]
    if sig:
        out.append("## Significance (avg S-I & S-D per run vs baseline)")
        out.append("")
        out.append("| Scope | Ticker | Method | Enhanced | Test | t | p |")
        out.append("|---|---|---|---|---|---|---|")
        for ticker, s in sig:
            enhanced = "yes" if s.label == "pooled_enhanced" else "-"
            if s.label == "per_ticker":
                rep = next(r for r in suite.reports if r.ticker == ticker and s in r.significance)
                enhanced = "yes" if rep.enhanced else "no"
            elif s.label == "pooled":
                enhanced = "no"
            out.append(f"| {s.label} | {ticker} | {_method_name(s.method)} | {enhanced} | {s.test} "
                       f"| {s.t_statistic:.3f} | {s.p_value:.3g} |")
        out.append("")
    return ("\n".join(out)).encode("utf-8")


def _render_csv(suite):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ticker", "method", "enhanced", "metric", "value"])
    for r in suite.reports:
        for name in METRIC_NAMES:
            writer.writerow([r.ticker, r.mode, str(r.enhanced).lower(), name, repr(getattr(r.mean, name))])
    return buf.getvalue().encode("utf-8")


def emit_report(suite, fmt="md"):
    if isinstance(suite, ExperimentReport):
        suite = SuiteReport([suite])
    if fmt in ("md", "markdown"):
        return _render_markdown(suite)
    if fmt == "csv":
        return _render_csv(suite)
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_results_csv(data):
    rows = csv.DictReader(io.StringIO(data.decode("utf-8"), newline=""))
    return {(r["ticker"], r["method"], r["enhanced"] == "true", r["metric"]): float(r["value"]) for r in rows}


def class_distribution_csv(suite):
    seen = {}
    for r in suite.reports:
        seen.setdefault(r.ticker, r.class_distribution)
    entries = [(t, {label: c[label.display] for label in MovementLabel}) for t, c in sorted(seen.items())]
    return ds.class_distribution_csv(entries)


def filter_stats_csv(suite):
    rows = {}
    for r in suite.reports:
        for row in r.filter_stats:
            rows.setdefault(row["ticker"], row)
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, ["ticker", "before", "after", "no_emotion_count", "unparseable_count"],
                            lineterminator="\n")
    writer.writeheader()
    for t in sorted(rows):
        writer.writerow(rows[t])
    return buf.getvalue().encode("utf-8")


def emotion_distribution_csv(suite):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ticker", "method", "enhanced", "emotion", "mean_score"])
    for r in suite.reports:
        for dim, value in (r.emotion_means or {}).items():
            writer.writerow([r.ticker, r.mode, str(r.enhanced).lower(), dim, repr(value)])
    return buf.getvalue().encode("utf-8")


def write_bundle(suite, out_dir):
    """Write report.json, report.md, results.csv and the class/filter/emotion distribution CSVs."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "report.json": suite.to_json(),
        "report.md": emit_report(suite, "md"),
        "results.csv": emit_report(suite, "csv"),
        "class_distribution.csv": class_distribution_csv(suite),
        "filter_stats.csv": filter_stats_csv(suite),
        "emotion_distribution.csv": emotion_distribution_csv(suite),
    }
    for name, data in files.items():
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
    return sorted(files)
