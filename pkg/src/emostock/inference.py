"""Clients for the two external model services.

The chat LLM labels tweet emotions; the classifier returns a 7-way emotion
distribution. Each has an HTTP backend (with an append-only JSON-lines cache),
a replay backend that only reads the cache, and a deterministic offline stub.
"""

import hashlib
import json
import logging
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import requests

from .errors import BadResponse, CacheMiss, ConfigError, NetworkError

log = logging.getLogger(__name__)

TRANSFORMER_EMOTIONS = ("anger", "disgust", "neutral", "fear", "joy", "sadness", "surprise")

ENV_LLM_URL = "EMOSTOCK_LLM_URL"
ENV_LLM_MODEL = "EMOSTOCK_LLM_MODEL"
ENV_API_KEY = "EMOSTOCK_API_KEY"
ENV_CLASSIFIER_URL = "EMOSTOCK_CLASSIFIER_URL"

DEFAULT_LLM_MODEL = "meta-llama/Llama-3.1-8B-Instruct"
DEFAULT_CLASSIFIER_MODEL = "j-hartmann/emotion-english-distilroberta-base"


@dataclass(frozen=True)
class ChatRequest:
    prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 64

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ClassifierResponse:
    scores: tuple

    def __post_init__(self):
        check_distribution(self.scores)

    @property
    def emotions(self):
        return TRANSFORMER_EMOTIONS


@dataclass(frozen=True)
class CacheEntry:
    key: str
    response_text: str
    backend_id: str
    timestamp: str


def check_distribution(scores, n=len(TRANSFORMER_EMOTIONS), tol=1e-6):
    if len(scores) != n:
        raise BadResponse(f"expected {n} scores, got {len(scores)}")
    for s in scores:
        if not isinstance(s, (int, float)) or isinstance(s, bool) or not math.isfinite(s):
            raise BadResponse(f"score {s!r} is not a finite number")
        if s < 0 or s > 1:
            raise BadResponse(f"score {s!r} outside [0, 1]")
    if abs(math.fsum(scores) - 1.0) > tol:
        raise BadResponse(f"scores sum to {math.fsum(scores)}, not 1")


def request_key(request, model_id):
    payload = json.dumps(
        {
            "kind": "chat",
            "model": model_id,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def classify_key(text, model_id):
    payload = json.dumps({"kind": "classify", "model": model_id, "text": text}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSON-lines cache. Later lines for the same key win on load."""

    def __init__(self, path=None):
        self.path = path
        self._entries = {}
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        entry = CacheEntry(**json.loads(line))
                    except (ValueError, TypeError) as exc:
                        raise ConfigError(f"{path}:{n}: corrupt cache line: {exc}") from exc
                    self._entries[entry.key] = entry

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get(self, key):
        entry = self._entries.get(key)
        return None if entry is None else entry.response_text

    def put(self, key, response_text, backend_id):
        entry = CacheEntry(key, response_text, backend_id, datetime.now(timezone.utc).isoformat())
        with self._lock:
            self._entries[key] = entry
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry.__dict__, ensure_ascii=False) + "\n")
        return entry


def _post_with_retry(session, url, payload, headers, attempts, backoff, timeout):
    last = None
    for attempt in range(attempts):
        try:
            resp = session.post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last = exc
            log.warning("request to %s failed (attempt %d/%d): %s", url, attempt + 1, attempts, exc)
            if attempt + 1 < attempts:
                time.sleep(backoff * 2**attempt)
            continue
        if resp.status_code != 200:
            raise BadResponse(f"{url} returned HTTP {resp.status_code}: {resp.text[:200]}")
        if not resp.content:
            raise BadResponse(f"{url} returned an empty body")
        try:
            return resp.json()
        except ValueError as exc:
            raise BadResponse(f"{url} returned non-JSON body") from exc
    raise NetworkError(f"{url} unreachable after {attempts} attempts: {last}")


# -- chat LLM backends ------------------------------------------------------


class StubLlm:
    """Deterministic offline LLM.

    ``rules`` is an ordered list of ``(substring, response)`` pairs matched
    against the tweet segment of the prompt; the first hit wins. Prompts that
    match no rule get a hash-derived answer.
    """

    backend_id = "stub"
    model_id = "stub"

    VOCAB = ("anticipation", "excitement", "confidence", "fear", "anxiety", "caution", "optimism", "frustration")

    def __init__(self, rules=()):
        self.rules = [(str(a), str(b)) for a, b in rules]

    @classmethod
    def from_file(cls, path, include_defaults=True):
        with open(path, encoding="utf-8") as fh:
            rules = json.load(fh)
        return cls((list(DEFAULT_STUB_RULES) if include_defaults else []) + [tuple(r) for r in rules])

    def complete(self, request):
        from .preprocess import tweet_segment

        segment = tweet_segment(request.prompt)
        for needle, response in self.rules:
            if needle in segment:
                return response
        digest = hashlib.sha256(request.prompt.encode("utf-8")).digest()
        if digest[0] % 4 == 0:
            return "no emotion"
        k = 1 + digest[1] % 3
        picks = []
        for b in digest[2:]:
            word = self.VOCAB[b % len(self.VOCAB)]
            if word not in picks:
                picks.append(word)
            if len(picks) == k:
                break
        return ", ".join(picks)


# Sample annotations for the three illustrative tweets.
DEFAULT_STUB_RULES = (
    ("CPI numbers drop tomorrow", "anticipation, excitement, confidence"),
    ("Feeling uneasy about tomorrow", "anxiety, fear, caution"),
    ("MSFT Q2 report is scheduled", "no emotion"),
)


class ReplayLlm:
    """Serves responses from a cache file and never touches the network."""

    backend_id = "replay"

    def __init__(self, cache, model_id=DEFAULT_LLM_MODEL):
        self.cache = cache if isinstance(cache, ResponseCache) else ResponseCache(cache)
        self.model_id = model_id

    def complete(self, request):
        key = request_key(request, self.model_id)
        text = self.cache.get(key)
        if text is None:
            raise CacheMiss(f"no cached response for key {key[:12]}… (model {self.model_id})")
        return text


class HttpLlm:
    """Chat-completion compatible HTTP endpoint, cached through a :class:`ResponseCache`."""

    backend_id = "http"

    def __init__(self, url=None, model_id=None, api_key=None, cache=None, attempts=3, backoff=0.5, timeout=60.0,
                 session=None):
        self.url = url or os.environ.get(ENV_LLM_URL)
        if not self.url:
            raise ConfigError(f"no LLM endpoint configured (set {ENV_LLM_URL})")
        self.model_id = model_id or os.environ.get(ENV_LLM_MODEL, DEFAULT_LLM_MODEL)
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        self.cache = cache if isinstance(cache, ResponseCache) else ResponseCache(cache)
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, request):
        key = request_key(request, self.model_id)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        payload = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        body = _post_with_retry(self.session, self.url, payload, headers, self.attempts, self.backoff, self.timeout)
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BadResponse(f"unexpected chat response shape: {str(body)[:200]}") from None
        if not isinstance(text, str) or not text.strip():
            raise BadResponse("chat response has empty content")
        self.cache.put(key, text, self.backend_id)
        return text


def complete(request, backend):
    return backend.complete(request)


def complete_many(requests_, backend, max_in_flight=1):
    """Complete requests with at most ``max_in_flight`` concurrent calls; output order = input order."""
    if max_in_flight <= 1 or len(requests_) <= 1:
        return [backend.complete(r) for r in requests_]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(backend.complete, requests_))


def make_llm_backend(kind, cache_path=None, stub_rules=None, **kwargs):
    if kind == "stub":
        return StubLlm.from_file(stub_rules) if stub_rules else StubLlm(DEFAULT_STUB_RULES)
    if kind == "replay":
        if not cache_path:
            raise ConfigError("replay backend needs a cache path")
        return ReplayLlm(cache_path, **kwargs)
    if kind == "http":
        return HttpLlm(cache=cache_path, **kwargs)
    raise ConfigError(f"unknown LLM backend {kind!r}")


# -- emotion classifier backends -------------------------------------------


class StubClassifier:
    backend_id = "stub"
    model_id = "stub"

    def classify(self, text):
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        weights = [1 + digest[i] for i in range(len(TRANSFORMER_EMOTIONS))]
        total = sum(weights)
        scores = [w / total for w in weights]
        # rounding residue goes to the largest entry
        scores[scores.index(max(scores))] += 1.0 - math.fsum(scores)
        return tuple(scores)


class ReplayClassifier:
    backend_id = "replay"

    def __init__(self, cache, model_id=DEFAULT_CLASSIFIER_MODEL):
        self.cache = cache if isinstance(cache, ResponseCache) else ResponseCache(cache)
        self.model_id = model_id

    def classify(self, text):
        key = classify_key(text, self.model_id)
        raw = self.cache.get(key)
        if raw is None:
            raise CacheMiss(f"no cached classifier scores for key {key[:12]}…")
        return tuple(json.loads(raw))


class HttpClassifier:
    """POST ``{"text": ...}`` and expect ``{"scores": [7 floats]}`` in TRANSFORMER_EMOTIONS order."""

    backend_id = "http"

    def __init__(self, url=None, model_id=DEFAULT_CLASSIFIER_MODEL, cache=None, attempts=3, backoff=0.5,
                 timeout=60.0, session=None):
        self.url = url or os.environ.get(ENV_CLASSIFIER_URL)
        if not self.url:
            raise ConfigError(f"no classifier endpoint configured (set {ENV_CLASSIFIER_URL})")
        self.model_id = model_id
        self.cache = cache if isinstance(cache, ResponseCache) else ResponseCache(cache)
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.session = session or requests.Session()

    def classify(self, text):
        key = classify_key(text, self.model_id)
        cached = self.cache.get(key)
        if cached is not None:
            return tuple(json.loads(cached))
        body = _post_with_retry(self.session, self.url, {"text": text}, {}, self.attempts, self.backoff, self.timeout)
        scores = body.get("scores") if isinstance(body, dict) else None
        if not isinstance(scores, list):
            raise BadResponse(f"classifier response lacks a 'scores' list: {str(body)[:200]}")
        check_distribution(scores)
        self.cache.put(key, json.dumps(scores), self.backend_id)
        return tuple(float(s) for s in scores)


def classify_emotions(text, backend):
    if not text:
        raise ValueError("text must be non-empty")
    return ClassifierResponse(tuple(backend.classify(text)))


def make_classifier_backend(kind, cache_path=None, **kwargs):
    if kind == "stub":
        return StubClassifier()
    if kind == "replay":
        if not cache_path:
            raise ConfigError("replay backend needs a cache path")
        return ReplayClassifier(cache_path, **kwargs)
    if kind == "http":
        return HttpClassifier(cache=cache_path, **kwargs)
    raise ConfigError(f"unknown classifier backend {kind!r}")
