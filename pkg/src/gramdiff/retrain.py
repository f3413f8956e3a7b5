"""Retraining experiment: does feeding discovered error inputs back into
training reduce disagreement?

Per repetition:

1. generate a labelled corpus from two grammars (label = source grammar),
   train a naive-Bayes model and a perceptron on it;
2. run a directed campaign over a third grammar with the pair as
   classifiers and collect the unique error inputs;
3. for every augmentation fraction, label a sample of the errors with the
   oracle model, retrain the other model on the augmented corpus and run the
   same campaign (same seed) again, counting error inputs.
"""
from __future__ import annotations

import csv
import io
import json
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

from .classifiers import ModelClassifier, accuracy, retrain_with_errors, train_nb, train_perceptron
from .derivation import Sentence, generate, yield_sentence
from .grammar import Grammar
from .search import CampaignConfig, derive_seed, run_campaign

__all__ = ["FRACTIONS", "MurqConfig", "RetrainRow", "RetrainReport", "labelled_corpus", "run_murq"]

FRACTIONS = (0.0, 0.02, 0.05, 0.07, 0.10, 0.12, 0.15, 0.17, 0.20, 0.22, 0.25)


@dataclass
class MurqConfig:
    grammar1: Grammar
    grammar2: Grammar
    campaign_grammar: Grammar
    labels: Tuple[str, str] = ("G1", "G2")
    train_size: int = 200
    test_size: int = 500
    campaign_size: int = 1000
    repetitions: int = 50
    fractions: Sequence[float] = FRACTIONS
    threshold: float = 0.5
    strategy: str = "directed"
    oracle: str = "nb"
    alpha: float = 1.0
    epochs: int = 10
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.oracle not in ("nb", "perceptron"):
            raise ValueError("oracle must be 'nb' or 'perceptron'")
        if list(self.fractions) != sorted(self.fractions):
            raise ValueError("fractions must be ascending")
        if self.grammar1 == self.grammar2:
            raise ValueError("the two training grammars must differ")


@dataclass
class RetrainRow:
    fraction: float
    mean_errors: float
    errors: List[int]
    accuracy_retrained: float
    accuracy_oracle: float


@dataclass
class RetrainReport:
    oracle: str
    retrained: str
    baseline_accuracy_retrained: float
    baseline_accuracy_oracle: float
    rows: List[RetrainRow] = field(default_factory=list)

    def row(self, fraction: float) -> RetrainRow:
        for r in self.rows:
            if abs(r.fraction - fraction) < 1e-12:
                return r
        raise KeyError(fraction)

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pct_added", "errors", f"accuracy_pct_{self.retrained}", f"accuracy_pct_{self.oracle}"])
        for r in self.rows:
            w.writerow([
                f"{r.fraction * 100:g}",
                f"{r.mean_errors:.2f}",
                f"{r.accuracy_retrained * 100:.2f}",
                f"{r.accuracy_oracle * 100:.2f}",
            ])
        return buf.getvalue()


def labelled_corpus(grammars: Sequence[Tuple[Grammar, str]], per_grammar: int,
                    rng: random.Random) -> List[Tuple[Sentence, str]]:
    out = []
    for g, label in grammars:
        out.extend((yield_sentence(generate(g, rng)), label) for _ in range(per_grammar))
    return out


def _repetition(cfg: MurqConfig, rep: int):
    root = derive_seed(cfg.seed, "rep", rep)
    sources = [(cfg.grammar1, cfg.labels[0]), (cfg.grammar2, cfg.labels[1])]
    train = labelled_corpus(sources, cfg.train_size, random.Random(derive_seed(root, "train")))
    test = labelled_corpus(sources, cfg.test_size, random.Random(derive_seed(root, "test")))

    nb = train_nb(train, cfg.alpha)
    pc = train_perceptron(train, cfg.epochs, derive_seed(root, "perceptron") % (1 << 32))
    oracle_model, learner = (nb, pc) if cfg.oracle == "nb" else (pc, nb)
    oracle = ModelClassifier(f"{cfg.oracle}-oracle", oracle_model)
    campaign_seed = derive_seed(root, "campaign")

    def campaign(model):
        return run_campaign(CampaignConfig(
            cfg.campaign_grammar, oracle, ModelClassifier("learner", model),
            cfg.threshold, cfg.campaign_size, cfg.strategy, campaign_seed,
        ))

    harvested = [Sentence.from_text(t) for t in campaign(learner).errors]
    oracle_acc = accuracy(oracle_model, test)
    base_acc = accuracy(learner, test)
    per_fraction = []
    for k, frac in enumerate(cfg.fractions):
        model = retrain_with_errors(learner, train, harvested, oracle, frac, derive_seed(root, "sample", k))
        per_fraction.append((campaign(model).n_err, accuracy(model, test)))
    return base_acc, oracle_acc, per_fraction


def run_murq(cfg: MurqConfig) -> RetrainReport:
    reps = range(cfg.repetitions)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_repetition, [cfg] * cfg.repetitions, reps))
    else:
        results = [_repetition(cfg, r) for r in reps]

    retrained = "perceptron" if cfg.oracle == "nb" else "nb"
    report = RetrainReport(
        oracle=cfg.oracle,
        retrained=retrained,
        baseline_accuracy_retrained=statistics.mean(r[0] for r in results),
        baseline_accuracy_oracle=statistics.mean(r[1] for r in results),
    )
    for k, frac in enumerate(cfg.fractions):
        errs = [r[2][k][0] for r in results]
        report.rows.append(RetrainRow(
            fraction=frac,
            mean_errors=statistics.mean(errs),
            errors=errs,
            accuracy_retrained=statistics.mean(r[2][k][1] for r in results),
            accuracy_oracle=report.baseline_accuracy_oracle,
        ))
    return report
