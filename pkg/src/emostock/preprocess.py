"""LLM prompt construction, annotation parsing, emotion filtering and text cleaning."""

import csv
import io
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

from .errors import EmptyTweet, Unparseable
from .inference import ChatRequest, complete_many

log = logging.getLogger(__name__)

PROMPT_TEMPLATE = (
    "You will be given a human-written tweet. Identify all possible emotions expressed in the tweet.  "
    "Return the output as a comma-separated list of emotion-related words that are relevant to the stock "
    'market context. If no emotion is detected, return "no emotion".'
)
PROMPT_DELIMITER = "\n\nTweet: "

NO_EMOTION_TEXT = "no emotion"
LABEL_RE = re.compile(r"[a-z][a-z -]*")


@dataclass(frozen=True)
class EmotionLabels:
    labels: tuple

    def __post_init__(self):
        if not self.labels:
            raise ValueError("EmotionLabels must be non-empty; use NO_EMOTION instead")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        for lab in self.labels:
            if not LABEL_RE.fullmatch(lab):
                raise ValueError(f"invalid label {lab!r}")

    def __str__(self):
        return ", ".join(self.labels)


class NoEmotion:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_EMOTION"

    def __str__(self):
        return NO_EMOTION_TEXT


NO_EMOTION = NoEmotion()


@dataclass(frozen=True)
class CleanTweet:
    tweet: object
    tokens: tuple


@dataclass(frozen=True)
class AnnotatedTweet:
    tweet: object
    labels: EmotionLabels
    tokens: tuple


@dataclass
class TickerFilterStats:
    before: int = 0
    after: int = 0
    no_emotion_count: int = 0
    unparseable_count: int = 0


@dataclass
class FilterStats:
    per_ticker: dict = field(default_factory=dict)

    @property
    def before(self):
        return sum(s.before for s in self.per_ticker.values())

    @property
    def after(self):
        return sum(s.after for s in self.per_ticker.values())

    @property
    def no_emotion_count(self):
        return sum(s.no_emotion_count for s in self.per_ticker.values())

    @property
    def unparseable_count(self):
        return sum(s.unparseable_count for s in self.per_ticker.values())

    def rows(self):
        return [
            {"ticker": t, "before": s.before, "after": s.after,
             "no_emotion_count": s.no_emotion_count, "unparseable_count": s.unparseable_count}
            for t, s in sorted(self.per_ticker.items())
        ]

    def to_csv(self):
        buf = io.StringIO(newline="")
        writer = csv.DictWriter(buf, ["ticker", "before", "after", "no_emotion_count", "unparseable_count"],
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        return buf.getvalue().encode("utf-8")


def load_stopwords(path=None):
    if path is None:
        text = resources.files("emostock").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def build_prompt(tweet_text):
    if not tweet_text or not tweet_text.strip():
        raise EmptyTweet("cannot build a prompt for an empty tweet")
    return PROMPT_TEMPLATE + PROMPT_DELIMITER + tweet_text


def tweet_segment(prompt):
    """Inverse of :func:`build_prompt` on the tweet part; prompts without the delimiter are returned whole."""
    head, sep, tail = prompt.partition(PROMPT_DELIMITER)
    return tail if sep else prompt


def _is_strippable(ch):
    return ch.isspace() or unicodedata.category(ch)[0] in "PS"


def strip_punct(token):
    start, end = 0, len(token)
    while start < end and _is_strippable(token[start]):
        start += 1
    while end > start and _is_strippable(token[end - 1]):
        end -= 1
    return token[start:end]


def _normalize_label(item):
    return " ".join(strip_punct(item).lower().split())


def parse_llm_response(raw):
    """Turn the LLM's comma-separated answer into labels, or NO_EMOTION.

    Items are trimmed, lowercased, stripped of surrounding punctuation and
    de-duplicated keeping first occurrence. Items that still contain anything
    beyond letters, spaces and hyphens are dropped. Raises :class:`Unparseable`
    when nothing usable remains.
    """
    if raw is None or not raw.strip():
        raise Unparseable("empty LLM response")
    if _normalize_label(raw) == NO_EMOTION_TEXT:
        return NO_EMOTION
    labels = []
    saw_no_emotion = False
    for item in raw.split(","):
        lab = _normalize_label(item)
        if not lab:
            continue
        if lab == NO_EMOTION_TEXT:
            saw_no_emotion = True
            continue
        if LABEL_RE.fullmatch(lab) and lab not in labels:
            labels.append(lab)
    if labels:
        return EmotionLabels(tuple(labels))
    if saw_no_emotion:
        return NO_EMOTION
    raise Unparseable(f"no emotion labels in LLM response {raw[:80]!r}")


def clean_text(text, stopwords):
    tokens = []
    for raw in text.lower().split():
        tok = strip_punct(raw)
        if not tok or tok in stopwords:
            continue
        if all(unicodedata.category(ch)[0] in "PS" for ch in tok):
            continue
        tokens.append(tok)
    return tokens


def label_tokens(labels):
    """Tokens for scoring the LLM labels themselves (``analyze=labels``)."""
    return tuple(word for lab in labels.labels for word in lab.replace("-", " ").split())


def clean_only(tweets, stopwords):
    return [CleanTweet(t, tuple(clean_text(t.text, stopwords))) for t in tweets]


def filter_and_annotate(tweets, llm, stopwords, max_in_flight=1, retry_unparseable=0, temperature=0.0,
                        max_output_tokens=64):
    """Run every tweet through the LLM and keep those with at least one emotion label.

    Network errors propagate; with a cached HTTP backend every response
    obtained so far is already on disk, so a rerun resumes where it stopped.
    """
    stats = FilterStats()
    for t in tweets:
        stats.per_ticker.setdefault(t.ticker, TickerFilterStats()).before += 1
    requests_ = [ChatRequest(build_prompt(t.text), temperature, max_output_tokens) for t in tweets]
    responses = complete_many(requests_, llm, max_in_flight)

    kept = []
    for tweet, request, raw in zip(tweets, requests_, responses):
        s = stats.per_ticker[tweet.ticker]
        parsed = None
        for attempt in range(retry_unparseable + 1):
            try:
                parsed = parse_llm_response(raw)
                break
            except Unparseable:
                if attempt < retry_unparseable:
                    raw = llm.complete(request)
        if parsed is None:
            s.unparseable_count += 1
            continue
        if parsed is NO_EMOTION:
            s.no_emotion_count += 1
            continue
        s.after += 1
        kept.append(AnnotatedTweet(tweet, parsed, tuple(clean_text(tweet.text, stopwords))))
    log.info("LLM filter kept %d of %d tweets", stats.after, stats.before)
    return kept, stats
