"""Deterministic toy classifiers for offline campaigns.

None of these learn anything.  They give campaigns an oracle with a known
error structure: keyword rules make errors cluster around a single token,
lexicon classifiers produce graded label-set overlaps.
"""
from __future__ import annotations

import hashlib
import math
from collections import Counter
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence

from .derivation import Sentence
from .oracle import Classifier, ScoredOutput

__all__ = [
    "FunctionClassifier",
    "KeywordClassifier",
    "ConstantClassifier",
    "LexiconClassifier",
    "SentimentLexicon",
    "hashed_lexicon",
    "distort",
    "keyword_pair",
]


class FunctionClassifier(Classifier):
    def __init__(self, id: str, fn: Callable[[Sentence], Iterable[str]]):
        super().__init__(id)
        self.fn = fn

    def classify(self, sentence):
        return list(self.fn(sentence))


class ConstantClassifier(Classifier):
    def __init__(self, id: str, labels: Sequence[str]):
        super().__init__(id)
        self.labels = list(labels)

    def classify(self, sentence):
        return list(self.labels)


class KeywordClassifier(Classifier):
    """``hit`` labels when any keyword occurs in the sentence, else ``miss``."""

    def __init__(self, id: str, keywords: Iterable[str],
                 hit: Sequence[str] = ("HIT",), miss: Sequence[str] = ("MISS",)):
        super().__init__(id)
        self.keywords = frozenset(keywords)
        self.hit = list(hit)
        self.miss = list(miss)

    def classify(self, sentence):
        if self.keywords.intersection(sentence.tokens):
            return list(self.hit)
        return list(self.miss)


def keyword_pair(keywords: Iterable[str], prefix: str = "kw"):
    """Classifier pair that disagrees exactly on sentences containing a keyword."""
    keywords = list(keywords)
    return (
        ConstantClassifier(f"{prefix}-base", ["MISS"]),
        KeywordClassifier(f"{prefix}-{'+'.join(keywords)}", keywords),
    )


def _digest(*parts: str) -> int:
    h = hashlib.sha256("\x1f".join(parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


def hashed_lexicon(vocabulary: Iterable[str], labels: Sequence[str], salt: str = "") -> Dict[str, str]:
    """Assign every token a label by hashing; stable across processes."""
    return {tok: labels[_digest(salt, tok) % len(labels)] for tok in sorted(set(vocabulary))}


def distort(lexicon: Mapping[str, str], labels: Sequence[str], rate: float, salt: str = "") -> Dict[str, str]:
    """Copy of ``lexicon`` with roughly ``rate`` of the tokens relabelled."""
    out = dict(lexicon)
    for tok in sorted(lexicon):
        if _digest(salt, "flip", tok) % 10_000 < rate * 10_000:
            others = [lab for lab in labels if lab != lexicon[tok]]
            out[tok] = others[_digest(salt, "to", tok) % len(others)]
    return out


class LexiconClassifier(Classifier):
    """Ranks labels by how many tokens of the sentence vote for them.

    Unknown tokens do not vote.  Ties go to the lexicographically smaller
    label so the ranking is deterministic.
    """

    def __init__(self, id: str, lexicon: Mapping[str, str]):
        super().__init__(id)
        self.lexicon = dict(lexicon)

    def classify(self, sentence):
        votes = Counter(self.lexicon[t] for t in sentence.tokens if t in self.lexicon)
        return [lab for lab, _ in sorted(votes.items(), key=lambda kv: (-kv[1], kv[0]))]


class SentimentLexicon(Classifier):
    """Scored classifier: ``score = tanh(sum of token weights)``."""

    def __init__(self, id: str, weights: Mapping[str, float], scale: float = 1.0):
        super().__init__(id)
        self.weights = dict(weights)
        self.scale = scale

    def classify(self, sentence):
        total = sum(self.weights.get(t, 0.0) for t in sentence.tokens)
        score = math.tanh(self.scale * total)
        # keep strictly inside (-1, 1) even when tanh saturates
        score = max(min(score, 1 - 1e-12), -1 + 1e-12)
        return ScoredOutput(score, abs(total))
