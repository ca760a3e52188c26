"""Tweet and daily price CSV ingestion.

Tweets are parsed leniently (bad rows go to a rejects list), prices strictly
(any bad row aborts). All dates are converted to :class:`datetime.date` here so
later stages never compare date strings.
"""

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date

from .errors import (
    EmptyInput,
    EncodingError,
    InvalidPrice,
    MissingColumn,
    NegativePrice,
    NonMonotonicDates,
)

TICKER_RE = re.compile(r"[A-Z.]{1,6}")

DEFAULT_TWEET_SCHEMA = {"date": "date", "ticker": "ticker", "company": "company", "text": "text"}
# Column names of the public Kaggle stock-tweets dump.
KAGGLE_TWEET_SCHEMA = {"date": "Date", "ticker": "Stock Name", "company": "Company Name", "text": "Tweet"}

PRICE_COLUMNS = ("date", "open", "high", "low", "close", "volume")


@dataclass(frozen=True)
class Tweet:
    date: date
    ticker: str
    company: str
    text: str


@dataclass(frozen=True)
class DailyPrice:
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: int


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    row: tuple


@dataclass(frozen=True)
class AlignmentReport:
    period_start: date
    period_end: date
    trading_day_count: int
    tweet_days_outside_period: int
    non_trading_tweet_days: int


@dataclass
class TweetParseResult:
    tweets: list = field(default_factory=list)
    rejects: list = field(default_factory=list)

    def __iter__(self):
        # allows ``tweets, rejects = parse_tweets(...)``
        return iter((self.tweets, self.rejects))


def _decode(source):
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, str):
        return source
    else:
        raw = source.read()
        if isinstance(raw, str):
            return raw
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8: {exc}") from exc


def parse_iso_day(value):
    """Parse ``YYYY-MM-DD`` optionally followed by a time part. Returns None when invalid."""
    value = value.strip()
    if len(value) > 10 and value[10] in "T ":
        value = value[:10]
    if len(value) != 10:
        return None
    try:
        return date.fromisoformat(value)
    except ValueError:
        return None


def _header_index(header, wanted, schema_desc):
    lookup = {name.strip(): i for i, name in enumerate(header)}
    missing = [col for col in wanted if col not in lookup]
    if missing:
        raise MissingColumn(f"{schema_desc}: column(s) {missing} not in header {header}")
    return {col: lookup[col] for col in wanted}


def parse_tweets(source, schema=None):
    """Parse a tweet CSV into :class:`Tweet` records.

    ``schema`` maps the logical fields (date, ticker, company, text) to header
    names. Returns a :class:`TweetParseResult` that also unpacks as
    ``(tweets, rejects)``. Row order is preserved.
    """
    schema = dict(DEFAULT_TWEET_SCHEMA if schema is None else schema)
    text = _decode(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    result = TweetParseResult()
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn("tweet CSV is empty (no header row)") from None
    cols = _header_index(header, [schema[k] for k in ("date", "ticker", "company", "text")], "tweet CSV")
    idx = {k: cols[schema[k]] for k in ("date", "ticker", "company", "text")}
    width = max(idx.values()) + 1

    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) < width:
            result.rejects.append(Reject(line, "MalformedRow", tuple(row)))
            continue
        day = parse_iso_day(row[idx["date"]])
        if day is None:
            result.rejects.append(Reject(line, "BadDate", tuple(row)))
            continue
        ticker = row[idx["ticker"]].strip().upper()
        if not TICKER_RE.fullmatch(ticker):
            result.rejects.append(Reject(line, "BadTicker", tuple(row)))
            continue
        body = row[idx["text"]]
        if not body.strip():
            result.rejects.append(Reject(line, "EmptyText", tuple(row)))
            continue
        result.tweets.append(Tweet(day, ticker, row[idx["company"]].strip(), body))
    return result


def _to_price(value, column, line):
    try:
        x = float(value)
    except ValueError:
        raise InvalidPrice(f"line {line}: {column}={value!r} is not a number") from None
    if not math.isfinite(x):
        raise InvalidPrice(f"line {line}: {column}={value!r} is not finite")
    if x <= 0:
        raise NegativePrice(f"line {line}: {column}={value!r} must be positive")
    return x


def _to_volume(value, line):
    try:
        x = float(value)
    except ValueError:
        raise InvalidPrice(f"line {line}: volume={value!r} is not a number") from None
    if not math.isfinite(x) or x != int(x):
        raise InvalidPrice(f"line {line}: volume={value!r} is not an integer")
    if x < 0:
        raise NegativePrice(f"line {line}: volume={value!r} is negative")
    return int(x)


def parse_prices(source):
    """Parse a Yahoo-style daily price CSV.

    Both the 6-column and the 7-column (with ``Adj Close``) layouts are
    accepted; the unadjusted ``Close`` is always used. Dates must be strictly
    increasing.
    """
    text = _decode(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn("price CSV is empty (no header row)") from None
    normalized = [h.strip().lower() for h in header]
    idx = _header_index(normalized, PRICE_COLUMNS, "price CSV")

    prices = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) < len(header):
            raise InvalidPrice(f"line {line}: expected {len(header)} fields, got {len(row)}")
        day = parse_iso_day(row[idx["date"]])
        if day is None:
            raise InvalidPrice(f"line {line}: bad date {row[idx['date']]!r}")
        o, h, lo, c = (_to_price(row[idx[k]], k, line) for k in ("open", "high", "low", "close"))
        if lo > min(o, c) or h < max(o, c):
            raise InvalidPrice(f"line {line}: inconsistent OHLC values {o}, {h}, {lo}, {c}")
        if prices and day <= prices[-1].date:
            raise NonMonotonicDates(f"line {line}: {day} does not follow {prices[-1].date}")
        prices.append(DailyPrice(day, o, h, lo, c, _to_volume(row[idx["volume"]], line)))
    return prices


def write_prices(prices):
    """Serialize prices in the 6-column layout; ``parse_prices`` inverts it exactly."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["Date", "Open", "High", "Low", "Close", "Volume"])
    for p in prices:
        writer.writerow([p.date.isoformat(), repr(p.open), repr(p.high), repr(p.low), repr(p.close), p.volume])
    return buf.getvalue().encode("utf-8")


def write_tweets(tweets):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", "ticker", "company", "text"])
    for t in tweets:
        writer.writerow([t.date.isoformat(), t.ticker, t.company, t.text])
    return buf.getvalue().encode("utf-8")


def write_rejects(rejects):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["line", "reason", "row"])
    for r in rejects:
        writer.writerow([r.line, r.reason, "|".join(r.row)])
    return buf.getvalue().encode("utf-8")


def align(tweets, prices):
    if not tweets or not prices:
        raise EmptyInput("align needs at least one tweet and one price row")
    trading = {p.date for p in prices}
    start = min(trading)
    end = max(trading)
    tweet_days = {t.date for t in tweets}
    outside = sum(1 for d in tweet_days if d < start or d > end)
    non_trading = sum(1 for d in tweet_days if start <= d <= end and d not in trading)
    return AlignmentReport(start, end, len(trading), outside, non_trading)
