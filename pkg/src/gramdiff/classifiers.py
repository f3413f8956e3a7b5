"""Bag-of-words text classifiers small enough to train inside a test run.

Two model families:

* multinomial naive Bayes with additive (Laplace) smoothing;
* multiclass averaged perceptron, an online linear model standing in for a
  regularised SGD linear classifier.

Features are whitespace tokens with counts; no stemming, no n-grams.
Prediction returns a singleton label set; ties go to the lexicographically
smallest label.
"""
from __future__ import annotations

import json
import logging
import math
import random
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

from .derivation import Sentence
from .oracle import Classifier, LabelSet, query

__all__ = [
    "NaiveBayesModel",
    "PerceptronModel",
    "ModelClassifier",
    "bow",
    "train_nb",
    "train_perceptron",
    "predict",
    "accuracy",
    "retrain_with_errors",
    "save_model",
    "load_model",
]

log = logging.getLogger(__name__)

Corpus = Sequence[Tuple[Sentence, str]]


def bow(s: Union[Sentence, str]) -> Counter:
    tokens = s.tokens if isinstance(s, Sentence) else s.split()
    return Counter(tokens)


def _check_corpus(corpus: Corpus) -> List[str]:
    if not corpus:
        raise ValueError("training corpus is empty")
    labels = sorted({lab for _, lab in corpus})
    if len(labels) < 2:
        raise ValueError(f"need at least two labels, got {labels}")
    return labels


@dataclass
class NaiveBayesModel:
    log_prior: Dict[str, float]
    log_likelihood: Dict[str, Dict[str, float]]
    alpha: float = 1.0
    vocabulary: frozenset = field(default_factory=frozenset)

    @property
    def labels(self) -> List[str]:
        return sorted(self.log_prior)

    def scores(self, s: Union[Sentence, str]) -> Dict[str, float]:
        """Unnormalised log posterior per label.  Out-of-vocabulary tokens
        are ignored."""
        counts = bow(s)
        out = {}
        for lab in self.labels:
            ll = self.log_likelihood[lab]
            # fsum is exactly rounded, so token order cannot flip a near tie
            out[lab] = math.fsum([self.log_prior[lab]] + [n * ll[t] for t, n in counts.items() if t in ll])
        return out


def train_nb(corpus: Corpus, alpha: float = 1.0) -> NaiveBayesModel:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    labels = _check_corpus(corpus)
    docs = Counter(lab for _, lab in corpus)
    tok_counts: Dict[str, Counter] = {lab: Counter() for lab in labels}
    for s, lab in corpus:
        tok_counts[lab].update(bow(s))
    vocab = frozenset(t for c in tok_counts.values() for t in c)
    n = len(corpus)
    log_prior = {lab: math.log(docs[lab] / n) for lab in labels}
    log_lik = {}
    for lab in labels:
        denom = sum(tok_counts[lab].values()) + alpha * len(vocab)
        log_lik[lab] = {t: math.log((tok_counts[lab][t] + alpha) / denom) for t in sorted(vocab)}
    return NaiveBayesModel(log_prior, log_lik, alpha, vocab)


@dataclass
class PerceptronModel:
    weights: Dict[str, Dict[str, float]]
    bias: Dict[str, float]
    epochs: int = 10
    seed: int = 0

    @property
    def labels(self) -> List[str]:
        return sorted(self.bias)

    def scores(self, s: Union[Sentence, str]) -> Dict[str, float]:
        counts = bow(s)
        return {
            lab: math.fsum([self.bias[lab]] + [n * self.weights[lab].get(t, 0.0) for t, n in counts.items()])
            for lab in self.labels
        }


def train_perceptron(corpus: Corpus, epochs: int = 10, seed: int = 0) -> PerceptronModel:
    """Multiclass averaged perceptron.

    Examples are visited in a fresh seeded shuffle every epoch.  The returned
    weights are the average over all updates steps, which is what makes the
    plain perceptron usable on non-separable data.
    """
    labels = _check_corpus(corpus)
    rng = random.Random(seed)
    feats = [(bow(s), lab) for s, lab in corpus]
    w = {lab: defaultdict(float) for lab in labels}
    b = dict.fromkeys(labels, 0.0)
    # accumulated (step * update) for the averaging trick
    wa = {lab: defaultdict(float) for lab in labels}
    ba = dict.fromkeys(labels, 0.0)
    step = 1
    order = list(range(len(feats)))
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            x, y = feats[i]
            scores = {lab: b[lab] + sum(n * w[lab].get(t, 0.0) for t, n in x.items()) for lab in labels}
            pred = _argmax(scores)
            if pred != y:
                for lab, sign in ((y, 1.0), (pred, -1.0)):
                    b[lab] += sign
                    ba[lab] += sign * step
                    for t, n in x.items():
                        w[lab][t] += sign * n
                        wa[lab][t] += sign * n * step
            step += 1
    weights = {
        lab: {t: w[lab][t] - wa[lab][t] / step for t in sorted(w[lab]) if w[lab][t] - wa[lab][t] / step}
        for lab in labels
    }
    bias = {lab: b[lab] - ba[lab] / step for lab in labels}
    return PerceptronModel(weights, bias, epochs, seed)


Model = Union[NaiveBayesModel, PerceptronModel]


# log scores closer than this are a tie; rounding noise must not beat the
# lexicographic tie rule (e.g. 3/5 * 2/12 vs 2/5 * 3/12 in log space)
TIE_EPS = 1e-9


def _argmax(scores: Dict[str, float]) -> str:
    best = max(scores.values())
    tol = TIE_EPS * max(1.0, abs(best))
    return min(lab for lab, v in scores.items() if best - v <= tol)


def predict(model: Model, s: Union[Sentence, str]) -> LabelSet:
    return frozenset({_argmax(model.scores(s))})


def accuracy(model: Model, corpus: Corpus) -> float:
    if not corpus:
        return 0.0
    hits = sum(1 for s, lab in corpus if predict(model, s) == {lab})
    return hits / len(corpus)


class ModelClassifier(Classifier):
    def __init__(self, id: str, model: Model):
        super().__init__(id)
        self.model = model

    def classify(self, sentence):
        return predict(self.model, sentence)


def retrain_with_errors(
    model: Model,
    base_corpus: Corpus,
    errors: Sequence[Sentence],
    oracle: Classifier,
    fraction: float,
    seed: int = 0,
) -> Model:
    """Retrain ``model``'s family on ``base_corpus`` plus a uniform sample of
    oracle-labelled error inputs.

    The sample holds ``round(fraction * len(base_corpus))`` distinct errors,
    or all of them (with a warning) when fewer are available.  Errors the
    oracle leaves unlabelled are skipped.
    """
    if fraction < 0:
        raise ValueError("fraction must be non-negative")
    want = round(fraction * len(base_corpus))
    pool = list(errors)
    if want > len(pool):
        warnings.warn(f"asked for {want} error inputs, only {len(pool)} available; using all")
        want = len(pool)
    sample = random.Random(seed).sample(pool, want)
    extra = []
    for s in sample:
        labels = sorted(query(oracle, s))
        if labels:
            extra.append((s, labels[0]))
    corpus = list(base_corpus) + extra
    if isinstance(model, NaiveBayesModel):
        return train_nb(corpus, model.alpha)
    return train_perceptron(corpus, model.epochs, model.seed)


def _to_doc(model: Model) -> dict:
    if isinstance(model, NaiveBayesModel):
        return {
            "type": "naive_bayes",
            "alpha": model.alpha,
            "log_prior": model.log_prior,
            "log_likelihood": model.log_likelihood,
        }
    return {
        "type": "perceptron",
        "epochs": model.epochs,
        "seed": model.seed,
        "bias": model.bias,
        "weights": model.weights,
    }


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_to_doc(model), fh, sort_keys=True)


def model_from_dict(doc: dict) -> Model:
    kind = doc.get("type")
    if kind == "naive_bayes":
        ll = doc["log_likelihood"]
        vocab = frozenset(t for table in ll.values() for t in table)
        return NaiveBayesModel(doc["log_prior"], ll, doc["alpha"], vocab)
    if kind == "perceptron":
        return PerceptronModel(doc["weights"], doc["bias"], doc["epochs"], doc["seed"])
    raise ValueError(f"unknown model type {kind!r}")


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
