import csv
import io
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emostock import ingest
from emostock.errors import EmptyInput, EncodingError, MissingColumn, NegativePrice, NonMonotonicDates, InvalidPrice
from conftest import make_prices

HEADER = "date,ticker,company,text\n"


def test_tweet_row_maps_fields():
    tweets, rejects = ingest.parse_tweets((HEADER + '2021-09-30,TSLA,Tesla Inc,"gonna explode"\n').encode())
    assert tweets == [ingest.Tweet(date(2021, 9, 30), "TSLA", "Tesla Inc", "gonna explode")]
    assert rejects == []


def test_header_only_gives_empty_result():
    tweets, rejects = ingest.parse_tweets(HEADER.encode())
    assert tweets == [] and rejects == []


def test_impossible_date_is_rejected():
    tweets, rejects = ingest.parse_tweets((HEADER + "9/31/2021,TSLA,Tesla Inc,hello\n").encode())
    assert tweets == []
    assert [r.reason for r in rejects] == ["BadDate"]


def test_reject_reasons_and_order():
    body = (HEADER
            + "2021-09-30,TSLA,Tesla,first\n"
            + "2021-02-30,TSLA,Tesla,bad day\n"
            + "2021-10-01,TOOLONGX,Tesla,bad ticker\n"
            + "2021-10-01,tsla,Tesla,lower ticker is fine\n"
            + "2021-10-01,TSLA,Tesla,   \n"
            + "2021-10-02,TSLA\n"
            + "2021-10-03T14:22:00+00:00,TSLA,Tesla,timestamped\n")
    tweets, rejects = ingest.parse_tweets(body.encode())
    assert [t.text for t in tweets] == ["first", "lower ticker is fine", "timestamped"]
    assert tweets[1].ticker == "TSLA"
    assert tweets[2].date == date(2021, 10, 3)
    assert [r.reason for r in rejects] == ["BadDate", "BadTicker", "EmptyText", "MalformedRow"]
    assert [r.line for r in rejects] == [3, 4, 6, 7]


def test_kaggle_schema():
    body = 'Date,Tweet,Stock Name,Company Name\n2021-09-30 23:50:00+00:00,"to the moon",TSLA,"Tesla, Inc."\n'
    tweets, _ = ingest.parse_tweets(body.encode(), ingest.KAGGLE_TWEET_SCHEMA)
    assert tweets[0].company == "Tesla, Inc." and tweets[0].text == "to the moon"


def test_missing_column_and_encoding():
    with pytest.raises(MissingColumn):
        ingest.parse_tweets(b"date,ticker,text\n")
    with pytest.raises(EncodingError):
        ingest.parse_tweets(HEADER.encode() + b"2021-09-30,TSLA,T,\xff\xfe\n")


def test_bom_and_stream_input():
    data = "﻿" + HEADER + "2021-09-30,TSLA,Tesla,hi\n"
    tweets, _ = ingest.parse_tweets(io.BytesIO(data.encode("utf-8")))
    assert len(tweets) == 1


CSV_SAFE = st.characters(blacklist_characters="\x00", blacklist_categories=("Cs",))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["2021-09-30", "2021-13-01", "x", "2022-02-28"]),
                          st.sampled_from(["TSLA", "BRK.B", "bad1", ""]),
                          st.text(CSV_SAFE, max_size=12)), max_size=15))
def test_accepted_plus_rejected_equals_rows(rows):
    buf = io.StringIO(newline="")
    w = csv.writer(buf)  # default \r\n terminator makes the writer quote embedded carriage returns
    w.writerow(["date", "ticker", "company", "text"])
    for d, t, body in rows:
        w.writerow([d, t, "Co", body])
    tweets, rejects = ingest.parse_tweets(buf.getvalue().encode())
    assert len(tweets) + len(rejects) == len(rows)
    for tw in tweets:
        assert tw.text.strip() and ingest.TICKER_RE.fullmatch(tw.ticker)


PRICE_HEADER = "Date,Open,High,Low,Close,Volume\n"


def test_price_row_maps_fields():
    (p,) = ingest.parse_prices((PRICE_HEADER + "2021-10-01,100,105,99,104,5000\n").encode())
    assert p == ingest.DailyPrice(date(2021, 10, 1), 100.0, 105.0, 99.0, 104.0, 5000)


def test_duplicate_date_rejected():
    body = PRICE_HEADER + "2021-10-01,100,105,99,104,5000\n2021-10-01,100,105,99,104,5000\n"
    with pytest.raises(NonMonotonicDates):
        ingest.parse_prices(body.encode())


def test_seven_column_layout_uses_close():
    body = "Date,Open,High,Low,Close,Adj Close,Volume\n2021-10-01,100,105,99,104,90.5,5000\n"
    (p,) = ingest.parse_prices(body.encode())
    assert p.close == 104.0


@pytest.mark.parametrize("row,exc", [
    ("2021-10-01,-1,105,99,104,5000", NegativePrice),
    ("2021-10-01,100,101,99,104,5000", InvalidPrice),
    ("2021-10-01,100,105,99,nan,5000", InvalidPrice),
    ("2021-10-01,100,105,99,104,12.5", InvalidPrice),
])
def test_bad_price_rows(row, exc):
    with pytest.raises(exc):
        ingest.parse_prices((PRICE_HEADER + row + "\n").encode())


def test_price_missing_column():
    with pytest.raises(MissingColumn):
        ingest.parse_prices(b"Date,Open,High,Low,Volume\n")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=1e5, allow_nan=False), min_size=1, max_size=30))
def test_price_round_trip(closes):
    prices = make_prices(closes)
    again = ingest.parse_prices(ingest.write_prices(prices))
    assert again == prices
    assert all(a.date < b.date for a, b in zip(again, again[1:]))


def _tweet(d):
    return ingest.Tweet(d, "TSLA", "Tesla", "x")


def test_align_examples():
    prices = make_prices([1.0] * 10, start=date(2022, 1, 3))
    assert ingest.align([_tweet(date(2022, 1, 4))], prices).non_trading_tweet_days == 0
    rep = ingest.align([_tweet(date(2022, 1, 8)), _tweet(date(2022, 1, 8))], prices)
    assert rep.non_trading_tweet_days == 1
    rep = ingest.align([_tweet(date(2021, 12, 31))], prices)
    assert rep.tweet_days_outside_period >= 1
    assert rep.period_start == date(2022, 1, 3) and rep.trading_day_count == 10
    assert ingest.align([_tweet(date(2022, 1, 8))], prices) == ingest.align([_tweet(date(2022, 1, 8))], prices)
    with pytest.raises(EmptyInput):
        ingest.align([], prices)
