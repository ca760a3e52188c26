import os
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emostock import ingest, inference, preprocess as pp
from emostock.errors import EmptyTweet, Unparseable

STOP = pp.load_stopwords()


def test_stopword_list_shape():
    assert len(STOP) == 179
    assert {"is", "the", "a", "an", "don't", "mustn"} <= STOP
    assert all(w == w.lower() for w in STOP)


def test_prompt_contains_template_and_tweet():
    tweet = "CPI numbers drop tomorrow… brace yourselves"
    prompt = pp.build_prompt(tweet)
    assert "Identify all possible emotions expressed in the tweet" in prompt
    assert prompt.startswith(pp.PROMPT_TEMPLATE) and prompt.endswith(tweet)
    assert pp.tweet_segment(prompt) == tweet
    with pytest.raises(EmptyTweet):
        pp.build_prompt("")
    with pytest.raises(EmptyTweet):
        pp.build_prompt("   ")


def test_prompts_differ_only_in_tweet():
    a, b = pp.build_prompt("one"), pp.build_prompt("two")
    assert a[:-3] == b[:-3]


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1).filter(str.strip), st.text(min_size=1).filter(str.strip))
def test_build_prompt_injective(a, b):
    assert (pp.build_prompt(a) == pp.build_prompt(b)) == (a == b)


@pytest.mark.parametrize("raw,expected", [
    ("anticipation, excitement, confidence", ("anticipation", "excitement", "confidence")),
    ("fear, fear, Caution", ("fear", "caution")),
    ("  Greed , FOMO!!, ", ("greed", "fomo")),
    ("self-doubt, fear of missing out", ("self-doubt", "fear of missing out")),
    ("fear, no emotion", ("fear",)),
])
def test_parse_labels(raw, expected):
    assert pp.parse_llm_response(raw).labels == expected


@pytest.mark.parametrize("raw", ["No Emotion.", "no emotion", '"no emotion"', "  NO EMOTION  ", "no emotion, "])
def test_parse_no_emotion(raw):
    assert pp.parse_llm_response(raw) is pp.NO_EMOTION


@pytest.mark.parametrize("raw", ["", "   ", "42, 17", "!!!", "😀"])
def test_parse_unparseable(raw):
    with pytest.raises(Unparseable):
        pp.parse_llm_response(raw)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.text(alphabet="abcXYZ -,.!", max_size=10), max_size=6).map(", ".join))
def test_parse_idempotent(raw):
    try:
        once = pp.parse_llm_response(raw)
    except Unparseable:
        return
    assert pp.parse_llm_response(str(once)) == once
    if once is not pp.NO_EMOTION:
        assert all(pp.LABEL_RE.fullmatch(x) for x in once.labels)
        assert len(set(once.labels)) == len(once.labels)


def test_emotion_labels_validation():
    with pytest.raises(ValueError):
        pp.EmotionLabels(())
    with pytest.raises(ValueError):
        pp.EmotionLabels(("fear", "fear"))
    with pytest.raises(ValueError):
        pp.EmotionLabels(("Fear",))


@pytest.mark.parametrize("text,expected", [
    ("TSLA is gonna EXPLODE!!", ["tsla", "gonna", "explode"]),
    ("…!!!", []),
    ("the a an", []),
    ("$TSLA to the moon 🚀 #hodl", ["tsla", "moon", "hodl"]),
    ("", []),
])
def test_clean_text(text, expected):
    assert pp.clean_text(text, STOP) == expected


def test_clean_text_custom_stopwords():
    assert pp.clean_text("TSLA is gonna EXPLODE!!", {"is"}) == ["tsla", "gonna", "explode"]


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=80))
def test_clean_text_invariants(text):
    for tok in pp.clean_text(text, STOP):
        assert tok == tok.lower()
        assert tok not in STOP
        assert tok and not all(pp._is_strippable(c) for c in tok)


def _fixture_tweets(fixtures_dir):
    with open(os.path.join(fixtures_dir, "tweets10.csv"), "rb") as fh:
        tweets, rejects = ingest.parse_tweets(fh)
    assert not rejects and len(tweets) == 10
    return tweets


def test_filter_accounting(fixtures_dir):
    tweets = _fixture_tweets(fixtures_dir)
    llm = inference.StubLlm.from_file(os.path.join(fixtures_dir, "stub_rules10.json"))
    kept, stats = pp.filter_and_annotate(tweets, llm, STOP)
    assert (stats.before, stats.after, stats.no_emotion_count, stats.unparseable_count) == (10, 6, 4, 0)
    assert len(kept) == 6
    assert stats.per_ticker["TSLA"].before == 6 and stats.per_ticker["TSLA"].after == 4
    assert stats.per_ticker["MSFT"].before == 4 and stats.per_ticker["MSFT"].after == 2
    assert kept[0].labels.labels == ("anticipation", "excitement", "confidence")
    assert kept[0].tokens == ("cpi", "numbers", "drop", "tomorrow", "tsla", "could", "fly")
    assert stats.to_csv().decode().splitlines() == [
        "ticker,before,after,no_emotion_count,unparseable_count", "MSFT,4,2,2,0", "TSLA,6,4,2,0"]
    # parallel dispatch gives the same result
    kept4, stats4 = pp.filter_and_annotate(tweets, llm, STOP, max_in_flight=4)
    assert kept4 == kept and stats4 == stats


def test_filter_empty_and_unparseable():
    kept, stats = pp.filter_and_annotate([], inference.StubLlm(), STOP)
    assert kept == [] and stats.before == stats.after == 0
    t = ingest.Tweet(date(2022, 1, 3), "X", "X", "beep")
    kept, stats = pp.filter_and_annotate([t], inference.StubLlm([("beep", "123")]), STOP, retry_unparseable=2)
    assert kept == [] and stats.unparseable_count == 1 and stats.after == 0


def test_label_tokens():
    assert pp.label_tokens(pp.EmotionLabels(("self-doubt", "fear of loss"))) == ("self", "doubt", "fear", "of", "loss")
