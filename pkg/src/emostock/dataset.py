"""From prices and tweet vectors to a chronologically split, scaled dataset."""

import bisect
import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field
from datetime import date
from fractions import Fraction

import numpy as np

from .emotion import EmotionVector, Method
from .errors import CalendarMismatch, MixedMethods, TooFewRows, TooShort

PRICE_FEATURES = ("open", "close", "high", "low", "volume")


class DegenerateSigma(UserWarning):
    pass


class MovementLabel(enum.IntEnum):
    STABLE = 0
    SIGNIFICANT_INCREASE = 1
    SIGNIFICANT_DECREASE = 2

    @property
    def display(self):
        return ("Stable", "Significant Increase", "Significant Decrease")[self]

    @property
    def short(self):
        return ("Stable", "S-I", "S-D")[self]

    @classmethod
    def parse(cls, text):
        for label in cls:
            if text in (label.display, label.short, label.name):
                return label
        raise ValueError(f"unknown movement label {text!r}")


@dataclass(frozen=True)
class DailyEmotion:
    date: date
    mean_vector: EmotionVector
    raw_tweet_count: int
    tweet_count: int = 0


@dataclass(frozen=True)
class FeatureRow:
    date: date
    label_date: date
    price_features: tuple
    emotion_features: tuple
    label: MovementLabel

    @property
    def features(self):
        return self.price_features + self.emotion_features


def feature_names(method=None):
    if method is None:
        return list(PRICE_FEATURES)
    return list(PRICE_FEATURES) + list(Method(method).dims) + ["tweet_volume"]


def _assign_day(day, calendar, non_trading):
    """Trading day a tweet posted on ``day`` contributes to, or None."""
    i = bisect.bisect_left(calendar, day)
    if i == len(calendar) or day < calendar[0]:
        return None
    if calendar[i] == day:
        return day
    return calendar[i] if non_trading == "roll" else None


def aggregate_daily(vectors, raw_counts, calendar, non_trading="roll"):
    """Average tweet vectors per trading day.

    ``vectors`` is a list of ``(date, EmotionVector)``; ``raw_counts`` maps a
    calendar date to the tweet count before LLM filtering. Tweets on
    non-trading days roll forward to the next trading day (or are dropped with
    ``non_trading="drop"``); tweets outside the calendar span are dropped.
    Trading days without tweets get the zero vector.
    """
    if non_trading not in ("roll", "drop"):
        raise ValueError(f"non_trading must be 'roll' or 'drop', got {non_trading!r}")
    calendar = sorted(calendar)
    methods = {v.method for _, v in vectors}
    if len(methods) > 1:
        raise MixedMethods(f"vectors mix methods {sorted(m.value for m in methods)}")
    method = methods.pop() if methods else None

    buckets = {d: [] for d in calendar}
    for day, vec in vectors:
        target = _assign_day(day, calendar, non_trading)
        if target is not None:
            buckets[target].append(vec.values)
    raw = dict.fromkeys(calendar, 0)
    for day, count in raw_counts.items():
        target = _assign_day(day, calendar, non_trading)
        if target is not None:
            raw[target] += count

    out = {}
    for d in calendar:
        rows = buckets[d]
        if method is None:
            mean = None
        elif rows:
            mean = EmotionVector(method, tuple(math.fsum(col) / len(rows) for col in zip(*rows)))
        else:
            mean = EmotionVector.zeros(method)
        out[d] = DailyEmotion(d, mean, raw[d], len(rows))
    return out


def percent_change(prices):
    if len(prices) < 2:
        raise TooShort("percent change needs at least 2 price rows")
    return [(cur.date, (cur.close - prev.close) / prev.close * 100) for prev, cur in zip(prices, prices[1:])]


def sigma(pc):
    """Population standard deviation of the percent-change series."""
    values = np.asarray(pc, dtype=float)
    if values.size < 2:
        raise TooShort("sigma needs at least 2 percent changes")
    s = float(np.std(values))
    if s == 0.0:
        warnings.warn("percent changes have zero variance; every day is Stable", DegenerateSigma, stacklevel=2)
    return s


def label_movement(change, sigma_):
    if change > sigma_:
        return MovementLabel.SIGNIFICANT_INCREASE
    if change < -sigma_:
        return MovementLabel.SIGNIFICANT_DECREASE
    return MovementLabel.STABLE


def label_movements(pc, sigma_):
    if sigma_ < 0:
        raise ValueError("sigma must be non-negative")
    return {d: label_movement(v, sigma_) for d, v in pc}


def class_distribution(labels):
    counts = {label: 0 for label in MovementLabel}
    for label in labels:
        counts[label] += 1
    return counts


def build_rows(prices, daily_emotions, labels, mode="augmented"):
    """Pair the features of each trading day with the next trading day's label."""
    if mode not in ("baseline", "augmented"):
        raise ValueError(f"mode must be 'baseline' or 'augmented', got {mode!r}")
    trading = [p.date for p in prices]
    trading_set = set(trading)
    stray = [d for d in labels if d not in trading_set]
    if stray:
        raise CalendarMismatch(f"labels for non-trading days {stray[:3]}")
    if mode == "augmented":
        missing = [d for d in trading if d not in daily_emotions]
        if missing:
            raise CalendarMismatch(f"no daily emotion for trading days {missing[:3]}")
        if any(daily_emotions[d].mean_vector is None for d in trading):
            raise CalendarMismatch("daily emotions carry no vectors")

    rows = []
    for today, tomorrow in zip(prices, prices[1:]):
        label = labels.get(tomorrow.date)
        if label is None:
            continue
        price = (today.open, today.close, today.high, today.low, float(today.volume))
        if mode == "augmented":
            de = daily_emotions[today.date]
            emo = tuple(de.mean_vector.values) + (float(de.raw_tweet_count),)
        else:
            emo = ()
        rows.append(FeatureRow(today.date, tomorrow.date, price, emo, label))
    return rows


@dataclass(frozen=True)
class MinMaxScaler:
    mins: np.ndarray
    maxs: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        return cls(X.min(axis=0), X.max(axis=0))

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        span = self.maxs - self.mins
        constant = span == 0
        out = (X - self.mins) / np.where(constant, 1.0, span)
        out[..., constant] = 0.0
        return out

    def to_dict(self):
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mins"], dtype=float), np.asarray(d["maxs"], dtype=float))


@dataclass
class SplitDataset:
    train: list
    test: list
    scaler: MinMaxScaler
    X_train: np.ndarray = field(repr=False)
    y_train: np.ndarray = field(repr=False)
    X_test: np.ndarray = field(repr=False)
    y_test: np.ndarray = field(repr=False)

    @property
    def n_features(self):
        return self.X_train.shape[1]


def split_index(n, train_fraction=0.7):
    return math.floor(n * Fraction(str(train_fraction)))


def split_and_scale(rows, train_fraction=0.7, min_rows=10):
    if len(rows) < min_rows:
        raise TooFewRows(f"need at least {min_rows} rows, got {len(rows)}")
    if any(a.date >= b.date for a, b in zip(rows, rows[1:])):
        raise ValueError("rows must be sorted by strictly increasing date")
    k = split_index(len(rows), train_fraction)
    if k == 0 or k == len(rows):
        raise TooFewRows(f"split of {len(rows)} rows at {train_fraction} leaves an empty side")
    train, test = rows[:k], rows[k:]
    X = np.array([r.features for r in rows], dtype=float)
    y = np.array([int(r.label) for r in rows], dtype=np.int64)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    scaler = MinMaxScaler.fit(X[:k])
    Xs = scaler.transform(X)
    return SplitDataset(train, test, scaler, Xs[:k], y[:k], Xs[k:], y[k:])


def rows_to_csv(rows, method=None):
    names = feature_names(method) if rows and rows[0].emotion_features else feature_names(None)
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", "change_level", *names])
    for r in rows:
        writer.writerow([r.date.isoformat(), r.label.display, *(repr(float(v)) for v in r.features)])
    return buf.getvalue().encode("utf-8")


def rows_from_csv(source):
    """Inverse of :func:`rows_to_csv`. ``label_date`` is not stored and comes back equal to ``date``."""
    from .ingest import _decode

    reader = csv.reader(io.StringIO(_decode(source), newline=""))
    header = next(reader)
    if header[:2] != ["date", "change_level"] or header[2:7] != list(PRICE_FEATURES):
        raise ValueError(f"unexpected dataset header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        day = date.fromisoformat(rec[0])
        values = tuple(float(v) for v in rec[2:])
        rows.append(FeatureRow(day, day, values[:5], values[5:], MovementLabel.parse(rec[1])))
    return rows, header[2:]


def class_distribution_csv(entries):
    """``entries``: iterable of (ticker, {MovementLabel: count})."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ticker", "stable_count", "increase_count", "decrease_count"])
    for ticker, counts in entries:
        writer.writerow([ticker, counts[MovementLabel.STABLE], counts[MovementLabel.SIGNIFICANT_INCREASE],
                         counts[MovementLabel.SIGNIFICANT_DECREASE]])
    return buf.getvalue().encode("utf-8")


def make_sequences(X, window, start=0):
    """Stack ``window`` consecutive rows ending at each index >= ``start``.

    Indices earlier than ``window - 1`` have no full history and are skipped.
    Returns the sequence array (n, window, features) and the indices used.
    """
    X = np.asarray(X, dtype=float)
    idx = np.arange(max(start, window - 1), X.shape[0])
    seqs = np.stack([X[i - window + 1:i + 1] for i in idx]) if idx.size else np.empty((0, window, X.shape[1]))
    return seqs, idx
