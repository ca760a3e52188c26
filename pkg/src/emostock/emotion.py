"""Tweet-level emotion vectors for the three scoring methods.

M1 wraps the transformer classifier, M2 scores tokens against an intensity
lexicon (8 emotions), M3 against a binary label lexicon (10 dims, the 8
emotions plus positive/negative).
"""

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass

from .errors import BadScore, UnknownEmotion
from .ingest import _decode
from .inference import TRANSFORMER_EMOTIONS, classify_emotions

log = logging.getLogger(__name__)

INTENSITY_EMOTIONS = ("anger", "anticipation", "disgust", "fear", "joy", "sadness", "surprise", "trust")
BINARY_EMOTIONS = INTENSITY_EMOTIONS + ("positive", "negative")


class Method(str, enum.Enum):
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"

    @property
    def dims(self):
        return {Method.M1: TRANSFORMER_EMOTIONS, Method.M2: INTENSITY_EMOTIONS, Method.M3: BINARY_EMOTIONS}[self]

    @property
    def display(self):
        return {Method.M1: "DistilRoBERTa", Method.M2: "NRC-Intensity", Method.M3: "NRC-Label"}[self]


class LexiconKind(str, enum.Enum):
    INTENSITY = "intensity"
    BINARY = "binary"

    @property
    def emotions(self):
        return INTENSITY_EMOTIONS if self is LexiconKind.INTENSITY else BINARY_EMOTIONS

    @property
    def method(self):
        return Method.M2 if self is LexiconKind.INTENSITY else Method.M3


@dataclass(frozen=True)
class Lexicon:
    kind: LexiconKind
    emotions: tuple
    entries: dict
    duplicate_count: int = 0

    def __contains__(self, word):
        return word in self.entries

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class EmotionVector:
    method: Method
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.method.dims):
            raise ValueError(f"{self.method.value} vectors have {len(self.method.dims)} dims, got {len(self.values)}")

    @property
    def dims(self):
        return self.method.dims

    def as_dict(self):
        return dict(zip(self.dims, self.values))

    @classmethod
    def zeros(cls, method):
        return cls(method, (0.0,) * len(method.dims))


def load_lexicon(source, kind):
    """Load an NRC-layout lexicon: ``word<TAB>emotion<TAB>score`` per line.

    Zero scores are not stored, so only emotions a word actually carries
    count towards matching. A leading header line is skipped when its score
    field is not numeric.
    """
    kind = LexiconKind(kind)
    allowed = set(kind.emotions)
    entries = {}
    duplicates = 0
    for n, line in enumerate(_decode(source).splitlines(), 1):
        if not line.strip():
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            parts = line.split()
        if len(parts) != 3:
            raise BadScore(f"line {n}: expected word, emotion, score; got {line!r}")
        word, emotion, raw_score = (p.strip() for p in parts)
        try:
            score = float(raw_score)
        except ValueError:
            if n == 1:
                continue
            raise BadScore(f"line {n}: score {raw_score!r} is not a number") from None
        if emotion not in allowed:
            raise UnknownEmotion(f"line {n}: {emotion!r} is not a {kind.value} lexicon emotion")
        if kind is LexiconKind.INTENSITY and not 0.0 <= score <= 1.0:
            raise BadScore(f"line {n}: intensity {score} outside [0, 1]")
        if kind is LexiconKind.BINARY and score not in (0.0, 1.0):
            raise BadScore(f"line {n}: binary score {score} not 0 or 1")
        word = word.lower()
        scores = entries.setdefault(word, {})
        if emotion in scores:
            duplicates += 1
        if score > 0:
            scores[emotion] = score
        else:
            scores.pop(emotion, None)
    if duplicates:
        log.warning("lexicon had %d duplicate (word, emotion) pairs; last value kept", duplicates)
    entries = {w: s for w, s in entries.items() if s}
    return Lexicon(kind, kind.emotions, entries, duplicates)


def load_lexicon_file(path, kind):
    with open(path, "rb") as fh:
        return load_lexicon(fh, kind)


def score_lexicon(tokens, lexicon):
    """Mean emotion score over matched token occurrences.

    Each dimension is the exactly-rounded sum of per-token scores divided by
    the number of token occurrences that hit the lexicon. No match gives the
    zero vector.
    """
    matched = [lexicon.entries[t] for t in tokens if t in lexicon.entries]
    method = lexicon.kind.method
    if not matched:
        return EmotionVector.zeros(method)
    m = len(matched)
    return EmotionVector(method, tuple(math.fsum(s.get(e, 0.0) for s in matched) / m for e in lexicon.emotions))


def match_rate(tokens, lexicon):
    return sum(1 for t in tokens if t in lexicon.entries) / len(tokens) if tokens else 0.0


def score_transformer(text, backend):
    return EmotionVector(Method.M1, classify_emotions(text, backend).scores)


def vectors_to_csv(records):
    """``records``: iterable of (tweet_id, date, EmotionVector). All vectors must share a method."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    header_written = False
    for tweet_id, day, vec in records:
        if not header_written:
            writer.writerow(["tweet_id", "date", "method", *vec.dims])
            header_written = True
        writer.writerow([tweet_id, day.isoformat(), vec.method.value, *(repr(v) for v in vec.values)])
    return buf.getvalue().encode("utf-8")
