"""Differential oracle: label sets, Jaccard index, the error predicate and the
classifier interface shared by built-in models and remote services."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple, Union

from .derivation import Sentence

__all__ = [
    "LabelSet",
    "ScoredOutput",
    "Classifier",
    "ClassifierError",
    "TransportError",
    "MalformedResponse",
    "DEFAULT_TOP_K",
    "labelset",
    "jaccard",
    "evaluate",
    "bucket_sentiment",
    "query",
    "QueryCache",
    "Differential",
]

DEFAULT_TOP_K = 5

LabelSet = FrozenSet[str]


class ClassifierError(RuntimeError):
    """Base for failures while querying a classifier."""


class TransportError(ClassifierError):
    pass


class MalformedResponse(ClassifierError):
    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


def labelset(labels: Iterable[str]) -> LabelSet:
    """Normalise labels: trim surrounding whitespace, keep case, drop blanks."""
    out = set()
    for lab in labels:
        lab = str(lab).strip()
        if lab:
            out.add(lab)
    return frozenset(out)


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def evaluate(a: Iterable[str], b: Iterable[str], threshold: float) -> bool:
    """True when the two outputs disagree, i.e. their Jaccard index is
    strictly below ``threshold``."""
    return jaccard(a, b) < threshold


@dataclass(frozen=True)
class ScoredOutput:
    score: float
    magnitude: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.score < 1.0) or math.isnan(self.score):
            raise ValueError(f"score must lie in (-1, 1), got {self.score}")
        if not self.magnitude >= 0:
            raise ValueError(f"magnitude must be non-negative, got {self.magnitude}")


def bucket_sentiment(s: ScoredOutput) -> LabelSet:
    # (-1, -0.25] negative, (-0.25, 0.25) neutral, [0.25, 1) positive
    if s.score <= -0.25:
        return frozenset({"NEGATIVE"})
    if s.score < 0.25:
        return frozenset({"NEUTRAL"})
    return frozenset({"POSITIVE"})


RawOutput = Union[Sequence[str], FrozenSet[str], ScoredOutput]


class Classifier:
    """Something that maps a sentence to labels.

    Subclasses implement :meth:`classify`, returning labels in rank order
    (most likely first), an unordered set, or a :class:`ScoredOutput`.
    ``kind`` is ``"builtin"`` or ``"http"``.
    """

    kind = "builtin"

    def __init__(self, id: str):
        self.id = id

    def classify(self, sentence: Sentence) -> RawOutput:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.id!r})"


def query(h: Classifier, s: Sentence, top_k: Optional[int] = DEFAULT_TOP_K) -> LabelSet:
    """Label set of ``h`` for ``s``; ranked outputs are cut to ``top_k``."""
    out = h.classify(s)
    if isinstance(out, ScoredOutput):
        return bucket_sentiment(out)
    if isinstance(out, (set, frozenset)):
        return labelset(out)
    ranked = list(out)
    if top_k is not None:
        ranked = ranked[:top_k]
    return labelset(ranked)


class QueryCache:
    """Memoises label sets per (classifier id, sentence text) for one campaign."""

    def __init__(self, top_k: Optional[int] = DEFAULT_TOP_K):
        self.top_k = top_k
        self._memo: Dict[Tuple[str, str], LabelSet] = {}
        self.misses = 0

    def __call__(self, h: Classifier, s: Sentence) -> LabelSet:
        key = (h.id, s.text)
        hit = self._memo.get(key)
        if hit is None:
            self.misses += 1
            hit = self._memo[key] = query(h, s, self.top_k)
        return hit

    def __len__(self) -> int:
        return len(self._memo)


class Differential:
    """Error predicate for a classifier pair at a fixed threshold."""

    def __init__(self, f1: Classifier, f2: Classifier, threshold: float,
                 cache: Optional[QueryCache] = None):
        if f1.id == f2.id and f1 is not f2:
            raise ValueError(f"classifier ids must be distinct, both are {f1.id!r}")
        self.f1 = f1
        self.f2 = f2
        self.threshold = threshold
        self.cache = cache if cache is not None else QueryCache()

    def __call__(self, s: Sentence) -> Tuple[float, bool]:
        ji = jaccard(self.cache(self.f1, s), self.cache(self.f2, s))
        return ji, ji < self.threshold
