import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emostock import emotion as emo
from emostock import inference
from emostock.errors import BadResponse, BadScore, UnknownEmotion
from oracles import lexicon_oracle


def intensity(text):
    return emo.load_lexicon(text.encode(), "intensity")


def binary(text):
    return emo.load_lexicon(text.encode(), "binary")


def test_load_intensity_aggregates_words():
    lex = intensity("abandon\tfear\t0.62\nabandon\tsadness\t0.77\n")
    assert lex.entries["abandon"] == {"fear": 0.62, "sadness": 0.77}


def test_load_binary_and_zero_rows():
    lex = binary("happy\tjoy\t1\nhappy\tanger\t0\nplain\tjoy\t0\n")
    assert lex.entries == {"happy": {"joy": 1.0}}
    assert "plain" not in lex


def test_header_and_whitespace_layout():
    lex = emo.load_lexicon(b"word emotion score\nCalm trust 0.5\n", "intensity")
    assert lex.entries == {"calm": {"trust": 0.5}}


def test_load_errors():
    with pytest.raises(BadScore):
        intensity("x\tfear\t1.5\n")
    with pytest.raises(BadScore):
        binary("x\tjoy\t0.5\n")
    with pytest.raises(BadScore):
        intensity("a\tfear\t0.1\nb\tfear\tlots\n")
    with pytest.raises(UnknownEmotion):
        intensity("x\tpositive\t0.5\n")
    with pytest.raises(UnknownEmotion):
        intensity("x\tboredom\t0.5\n")


def test_duplicates_last_wins():
    lex = intensity("x\tfear\t0.2\nx\tfear\t0.9\n")
    assert lex.entries["x"] == {"fear": 0.9} and lex.duplicate_count == 1


def test_dimension_orders():
    assert emo.Method.M1.dims == ("anger", "disgust", "neutral", "fear", "joy", "sadness", "surprise")
    assert emo.Method.M2.dims == ("anger", "anticipation", "disgust", "fear", "joy", "sadness", "surprise", "trust")
    assert emo.Method.M3.dims == emo.Method.M2.dims + ("positive", "negative")


def test_score_examples():
    v = emo.score_lexicon(["fear", "fear", "market"], intensity("fear\tfear\t0.8\n")).as_dict()
    assert v["fear"] == 0.8 and sum(v.values()) == 0.8

    lex = binary("happy\tjoy\t1\nhappy\tpositive\t1\ncrash\tfear\t1\ncrash\tnegative\t1\n")
    v = emo.score_lexicon(["happy", "crash"], lex).as_dict()
    assert {k: x for k, x in v.items() if x} == {"joy": 0.5, "positive": 0.5, "fear": 0.5, "negative": 0.5}

    assert emo.score_lexicon(["market", "open"], lex) == emo.EmotionVector.zeros(emo.Method.M3)
    assert emo.score_lexicon([], lex) == emo.EmotionVector.zeros(emo.Method.M3)


TOY_WORDS = ["calm", "boom", "doom", "meh", "wow", "ugh", "yay", "hmm", "zap", "oof"]


def toy_lexicons(seed):
    rng = random.Random(seed)
    rows_i, rows_b = [], []
    for w in TOY_WORDS:
        for e in rng.sample(emo.INTENSITY_EMOTIONS, rng.randint(1, 4)):
            rows_i.append(f"{w}\t{e}\t{rng.choice([0.017, 0.1, 0.25, 0.333, 0.5, 0.62, 0.77, 0.9, 1.0])}")
        for e in emo.BINARY_EMOTIONS:
            rows_b.append(f"{w}\t{e}\t{int(rng.random() < 0.3)}")
    return intensity("\n".join(rows_i)), binary("\n".join(rows_b))


VOCAB = TOY_WORDS + ["market", "stock", "today"]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(VOCAB), max_size=12), st.integers(0, 5))
def test_matches_oracle(tokens, seed):
    for lex in toy_lexicons(seed):
        assert emo.score_lexicon(tokens, lex).values == lexicon_oracle(tokens, lex.entries, lex.emotions)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(VOCAB), max_size=12), st.randoms(use_true_random=False))
def test_permutation_and_duplication_invariance(tokens, rnd):
    lex_i, lex_b = toy_lexicons(1)
    for lex in (lex_i, lex_b):
        base = emo.score_lexicon(tokens, lex)
        shuffled = list(tokens)
        rnd.shuffle(shuffled)
        assert emo.score_lexicon(shuffled, lex) == base
        assert emo.score_lexicon(tokens + tokens, lex) == base
        assert all(0.0 <= x <= 1.0 for x in base.values)


def test_transformer_wrapper():
    v = emo.score_transformer("to the moon", inference.StubClassifier())
    assert v.method is emo.Method.M1 and abs(sum(v.values) - 1) < 1e-6
    assert v == emo.score_transformer("to the moon", inference.StubClassifier())

    class Negative:
        def classify(self, text):
            return (1.2, -0.2, 0, 0, 0, 0, 0)

    with pytest.raises(BadResponse):
        emo.score_transformer("x", Negative())


def test_vector_dims_checked():
    with pytest.raises(ValueError):
        emo.EmotionVector(emo.Method.M2, (0.0,) * 7)


def test_vectors_csv():
    v = emo.EmotionVector(emo.Method.M2, (0.0, 0.5, 0, 0, 0, 0, 0, 0.25))
    lines = emo.vectors_to_csv([(7, date(2022, 1, 3), v)]).decode().splitlines()
    assert lines[0].split(",")[:4] == ["tweet_id", "date", "method", "anger"]
    assert lines[1].startswith("7,2022-01-03,m2,0.0,0.5")
