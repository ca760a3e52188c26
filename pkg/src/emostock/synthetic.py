"""Synthetic end-to-end fixture with a planted emotion -> next-day movement signal.

Prices follow a random walk whose daily moves are either small (|pc| <= 0.8%)
or large (3.5% to 5%), so the +-sigma labeling recovers the planted classes
exactly. On every trading day, "signal" tweets use lexicon words that encode
the NEXT day's class; "filler" tweets carry no lexicon words and the stub LLM
answers "no emotion" for them. After LLM filtering only the signal remains.
"""

import csv
import io
import json
import os
from datetime import date, timedelta

import numpy as np

TICKER = "SYNT"
COMPANY = "Synthetic Corp"

# class index: 0 stable, 1 significant increase, 2 significant decrease
# (template, substring the stub LLM keys on, stub LLM answer)
SIGNAL_TEMPLATES = {
    0: [("steady hands on {t}, staying patient", "staying patient", "patience, calm"),
        ("quiet tape for {t}, holding steady", "holding steady", "calm"),
        ("patient with {t} here, quiet week", "quiet week", "patience")],
    1: [("{t} looks ready to rally, so excited", "ready to rally", "excitement, optimism"),
        ("thrilled about {t}, feeling bullish", "feeling bullish", "excitement, confidence"),
        ("bullish {t} setup, excited for the open", "excited for the open", "optimism, excitement")],
    2: [("worried {t} is about to crash", "about to crash", "fear, anxiety"),
        ("sense of dread around {t}, panic selling soon", "panic selling", "fear, panic"),
        ("panic building in {t}, worried about a crash", "worried about a crash", "panic, fear")],
}
FILLER_TEMPLATES = [
    ("{t} earnings call is scheduled for next week", "earnings call is scheduled", "no emotion"),
    ("{t} shares traded {n} times today", "times today", "no emotion"),
    ("{t} quarterly filing is posted on the site", "filing is posted", "no emotion"),
    ("{t} options expiry lands on friday", "options expiry", "no emotion"),
]
# filler that mentions a random lexicon word without expressing anything
CHATTER_TEMPLATE = ("someone typed {w} in the {t} thread again", "typed", "no emotion")

INTENSITY_LEXICON = {
    "steady": {"trust": 0.45},
    "patient": {"trust": 0.4, "anticipation": 0.2},
    "quiet": {"trust": 0.3},
    "rally": {"anticipation": 0.6, "joy": 0.5},
    "excited": {"joy": 0.8, "anticipation": 0.7},
    "thrilled": {"joy": 0.9, "surprise": 0.4},
    "bullish": {"trust": 0.6, "anticipation": 0.7},
    "worried": {"fear": 0.7, "sadness": 0.4},
    "crash": {"fear": 0.8, "sadness": 0.6},
    "dread": {"fear": 0.9, "anger": 0.3},
    "panic": {"fear": 0.85, "surprise": 0.5},
    "gloomy": {"sadness": 0.7},
}
BINARY_LEXICON = {
    "steady": {"trust", "positive"},
    "patient": {"trust", "anticipation", "positive"},
    "quiet": {"trust"},
    "rally": {"anticipation", "joy", "positive"},
    "excited": {"joy", "anticipation", "positive"},
    "thrilled": {"joy", "surprise", "positive"},
    "bullish": {"trust", "anticipation", "positive"},
    "worried": {"fear", "sadness", "negative"},
    "crash": {"fear", "sadness", "negative"},
    "dread": {"fear", "anger", "negative"},
    "panic": {"fear", "surprise", "negative"},
    "gloomy": {"sadness", "negative"},
}
BINARY_ORDER = ("anger", "anticipation", "disgust", "fear", "joy", "negative", "positive", "sadness", "surprise",
                "trust")


def business_days(start, n):
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def planted_classes(rng, n_days):
    """Class of each day's move; day 0 has no move and gets -1."""
    classes = rng.choice(3, size=n_days - 1, p=[0.6, 0.2, 0.2])
    return np.concatenate([[-1], classes])


def make_prices(rng, days, classes):
    rows = []
    close = 100.0
    for i, day in enumerate(days):
        prev = close
        if i:
            k = classes[i]
            if k == 0:
                pc = rng.uniform(-0.8, 0.8)
            else:
                pc = rng.uniform(3.5, 5.0) * (1 if k == 1 else -1)
            close = round(prev * (1 + pc / 100), 4)
        open_ = round(prev * (1 + rng.uniform(-0.5, 0.5) / 100), 4)
        high = round(max(open_, close) * (1 + rng.uniform(0, 1) / 100), 4)
        low = round(min(open_, close) * (1 - rng.uniform(0, 1) / 100), 4)
        rows.append((day, open_, high, low, close, int(rng.integers(1_000_000, 5_000_000))))
    return rows


def make_tweets(rng, days, classes):
    tweets = []
    for i, day in enumerate(days):
        if i + 1 < len(days):
            nxt = int(classes[i + 1])
            for _ in range(int(rng.integers(3, 7))):
                text = SIGNAL_TEMPLATES[nxt][int(rng.integers(len(SIGNAL_TEMPLATES[nxt])))][0]
                tweets.append((day, text.format(t=f"${TICKER}")))
        for _ in range(int(rng.integers(2, 9))):
            text = FILLER_TEMPLATES[int(rng.integers(len(FILLER_TEMPLATES)))][0]
            tweets.append((day, text.format(t=f"${TICKER}", n=int(rng.integers(1000, 99999)))))
        for _ in range(int(rng.integers(0, 5))):
            word = sorted(INTENSITY_LEXICON)[int(rng.integers(len(INTENSITY_LEXICON)))]
            tweets.append((day, CHATTER_TEMPLATE[0].format(t=f"${TICKER}", w=word)))
        if day.weekday() == 4 and rng.random() < 0.5:
            sat = day + timedelta(days=1)
            text = FILLER_TEMPLATES[int(rng.integers(len(FILLER_TEMPLATES)))][0]
            tweets.append((sat, text.format(t=f"${TICKER}", n=int(rng.integers(1000, 99999)))))
    return tweets


def stub_rules():
    templates = [t for group in SIGNAL_TEMPLATES.values() for t in group] + FILLER_TEMPLATES + [CHATTER_TEMPLATE]
    return [[marker, response] for _, marker, response in templates]


def _csv_bytes(header, rows):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def build(n_days=200, seed=7, start=date(2021, 10, 1)):
    """Return ``{filename: bytes}`` for the whole fixture plus the planted classes."""
    rng = np.random.default_rng(seed)
    days = business_days(start, n_days)
    classes = planted_classes(rng, n_days)
    prices = make_prices(rng, days, classes)
    tweets = make_tweets(rng, days, classes)
    files = {
        "prices_SYNT.csv": _csv_bytes(
            ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"],
            [(d.isoformat(), repr(o), repr(h), repr(lo), repr(c), repr(round(c * 0.98, 4)), v)
             for d, o, h, lo, c, v in prices]),
        "tweets.csv": _csv_bytes(["date", "ticker", "company", "text"],
                                 [(d.isoformat(), TICKER, COMPANY, text) for d, text in tweets]),
        "lexicon_intensity.txt": "".join(
            f"{w}\t{e}\t{s}\n" for w, es in sorted(INTENSITY_LEXICON.items()) for e, s in sorted(es.items())
        ).encode("utf-8"),
        "lexicon_binary.txt": "".join(
            f"{w}\t{e}\t{int(e in es)}\n" for w, es in sorted(BINARY_LEXICON.items()) for e in BINARY_ORDER
        ).encode("utf-8"),
        "stub_rules.json": (json.dumps(stub_rules(), indent=1) + "\n").encode("utf-8"),
        "config.json": (json.dumps({
            "tickers": [TICKER],
            "modes": ["baseline", "m1", "m2", "m3"],
            "enhanced": [False, True],
            "tweets": "tweets.csv",
            "prices": "prices_{ticker}.csv",
            "lexicon_intensity": "lexicon_intensity.txt",
            "lexicon_binary": "lexicon_binary.txt",
            "stub_rules": "stub_rules.json",
            "llm_backend": "stub",
            "classifier_backend": "stub",
            "repetitions": 10,
            "base_seed": 0,
        }, indent=2) + "\n").encode("utf-8"),
    }
    return files, [int(c) for c in classes]


def write(out_dir, **kwargs):
    files, classes = build(**kwargs)
    os.makedirs(out_dir, exist_ok=True)
    for name, data in files.items():
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
    return classes


def bundled_dir():
    return os.path.join(os.path.dirname(__file__), "data", "synthetic")
