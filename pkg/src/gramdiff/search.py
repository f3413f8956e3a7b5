"""Test-generation campaigns.

Three strategies share one engine:

``directed``
    Perturb the current input; move to the candidate unless that would leave
    an error-inducing input for a non-error-inducing one (backtrack).
``no-backtrack``
    Same walk, always moving to the candidate.
``random``
    Every iteration is a fresh, independent sentence from the grammar.

Iteration 0 of every trace is the initial input.  Uniqueness for the report
metrics is by sentence text.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import random
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence

from .derivation import (
    DEFAULT_MAX_DEPTH,
    CannotPerturb,
    DerivationTree,
    generate,
    perturb,
    yield_sentence,
)
from .grammar import Grammar
from .oracle import (
    DEFAULT_TOP_K,
    Classifier,
    ClassifierError,
    Differential,
    QueryCache,
)

__all__ = [
    "STRATEGIES",
    "INITIAL_MODES",
    "CampaignConfig",
    "IterationRecord",
    "CampaignReport",
    "ProbeExhausted",
    "derive_seed",
    "find_initial",
    "run_campaign",
    "directed_search",
    "no_backtrack_search",
    "random_search",
    "improvement",
    "summary_rows",
    "write_summary_csv",
]

log = logging.getLogger(__name__)

STRATEGIES = ("directed", "no-backtrack", "random")
INITIAL_MODES = ("any", "force-error", "force-non-error")


class ProbeExhausted(RuntimeError):
    pass


@dataclass
class CampaignConfig:
    grammar: Grammar
    f1: Classifier
    f2: Classifier
    threshold: float
    iterations: int
    strategy: str = "directed"
    seed: int = 0
    initial_mode: str = "any"
    max_initial_probes: int = 100
    max_depth: int = DEFAULT_MAX_DEPTH
    strict_perturb: bool = False
    top_k: Optional[int] = DEFAULT_TOP_K
    grammar_name: str = ""

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.initial_mode not in INITIAL_MODES:
            raise ValueError(f"unknown initial_mode {self.initial_mode!r}")
        if math.isnan(self.threshold):
            raise ValueError("threshold is NaN")
        if not 0.0 <= self.threshold <= 1.0:
            clamped = min(max(self.threshold, 0.0), 1.0)
            warnings.warn(f"threshold {self.threshold} clamped to {clamped}")
            self.threshold = clamped

    def echo(self) -> dict:
        return {
            "grammar": self.grammar_name or self.grammar.start,
            "f1": self.f1.id,
            "f2": self.f2.id,
            "threshold": self.threshold,
            "iterations": self.iterations,
            "strategy": self.strategy,
            "seed": self.seed,
            "initial_mode": self.initial_mode,
            "max_initial_probes": self.max_initial_probes,
            "max_depth": self.max_depth,
            "strict_perturb": self.strict_perturb,
            "top_k": self.top_k,
        }


@dataclass
class IterationRecord:
    index: int
    sentence: str
    is_error: bool
    jaccard: float
    # previous current -> candidate, "N"/"E"; None for the initial input
    transition: Optional[str]
    accepted: bool
    regenerated: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CampaignReport:
    config: dict
    trace: List[IterationRecord] = field(default_factory=list)
    partial: bool = False
    abort_reason: Optional[str] = None

    @property
    def n_inputs(self) -> int:
        return len({r.sentence for r in self.trace})

    @property
    def n_err(self) -> int:
        return len({r.sentence for r in self.trace if r.is_error})

    @property
    def err_r(self) -> float:
        n = self.n_inputs
        return self.n_err / n if n else 0.0

    @property
    def unique_ratio(self) -> float:
        return self.n_inputs / len(self.trace) if self.trace else 0.0

    @property
    def iterations_to_first_error(self) -> Optional[int]:
        for r in self.trace:
            if r.is_error:
                return r.index
        return None

    @property
    def n_backtracks(self) -> int:
        return sum(1 for r in self.trace if not r.accepted)

    @property
    def errors(self) -> List[str]:
        """Unique erroneous sentences in order of discovery."""
        seen = {}
        for r in self.trace:
            if r.is_error:
                seen.setdefault(r.sentence, None)
        return list(seen)

    def metrics(self) -> dict:
        return {
            "n_inputs": self.n_inputs,
            "n_err": self.n_err,
            "err_r": self.err_r,
            "unique_ratio": self.unique_ratio,
            "iterations_to_first_error": self.iterations_to_first_error,
            "n_backtracks": self.n_backtracks,
            "n_regenerated": sum(r.regenerated for r in self.trace),
        }

    def to_json(self, **kw) -> str:
        doc = {"config": self.config, **self.metrics(), "partial": self.partial,
               "abort_reason": self.abort_reason}
        return json.dumps(doc, **kw)

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.trace)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.trace_jsonl())

    @classmethod
    def read_trace(cls, path) -> List[IterationRecord]:
        with open(path, encoding="utf-8") as fh:
            return [IterationRecord(**json.loads(line)) for line in fh if line.strip()]


def derive_seed(root: int, *path) -> int:
    """Stable 63-bit seed for a sub-run, e.g. ``derive_seed(suite_seed, index)``."""
    key = ":".join(str(x) for x in (root,) + path).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def _split_rngs(seed: int):
    root = random.Random(seed)
    return random.Random(root.getrandbits(64)), random.Random(root.getrandbits(64))


def find_initial(
    grammar: Grammar,
    f1: Classifier,
    f2: Classifier,
    threshold: float,
    mode: str = "any",
    max_probes: int = 100,
    rng: Optional[random.Random] = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
    oracle: Optional[Differential] = None,
) -> DerivationTree:
    """Seed input for a campaign.

    ``any`` takes the first generated tree; ``force-error`` and
    ``force-non-error`` keep generating until the error predicate matches,
    raising :class:`ProbeExhausted` after ``max_probes`` attempts.
    """
    if mode not in INITIAL_MODES:
        raise ValueError(f"unknown initial mode {mode!r}")
    rng = rng or random.Random()
    if mode == "any":
        return generate(grammar, rng, max_depth)
    oracle = oracle or Differential(f1, f2, threshold)
    want = mode == "force-error"
    for _ in range(max_probes):
        t = generate(grammar, rng, max_depth)
        if oracle(yield_sentence(t))[1] == want:
            return t
    raise ProbeExhausted(f"no {'erroneous' if want else 'non-erroneous'} input in {max_probes} probes")


def _flag(is_error: bool) -> str:
    return "E" if is_error else "N"


def run_campaign(cfg: CampaignConfig) -> CampaignReport:
    """Run one campaign with the configured strategy.

    A classifier failure stops the campaign; the report so far is returned
    with ``partial`` set and the reason recorded.
    """
    report = CampaignReport(cfg.echo())
    oracle = Differential(cfg.f1, cfg.f2, cfg.threshold, QueryCache(cfg.top_k))
    probe_rng, walk_rng = _split_rngs(cfg.seed)
    try:
        seed_tree = find_initial(
            cfg.grammar, cfg.f1, cfg.f2, cfg.threshold, cfg.initial_mode,
            cfg.max_initial_probes, probe_rng, cfg.max_depth, oracle,
        )
        if cfg.strategy == "random":
            _random_loop(cfg, oracle, seed_tree, walk_rng, report.trace)
        else:
            _walk_loop(cfg, oracle, seed_tree, walk_rng, report.trace,
                       backtrack=cfg.strategy == "directed")
    except ClassifierError as exc:
        log.error("campaign aborted: %s", exc)
        report.partial = True
        report.abort_reason = f"{type(exc).__name__}: {exc}"
    return report


def _record_seed(tree, oracle, trace):
    text = yield_sentence(tree).text
    ji, err = oracle(yield_sentence(tree))
    trace.append(IterationRecord(0, text, err, ji, None, True))
    return err


def _walk_loop(cfg, oracle, cur, rng, trace, backtrack):
    cur_err = _record_seed(cur, oracle, trace)
    for i in range(1, cfg.iterations + 1):
        try:
            cand = perturb(cur, cfg.grammar, rng, strict=cfg.strict_perturb)
            regenerated = False
        except CannotPerturb:
            log.info("iteration %d: cannot perturb %r, regenerating", i, yield_sentence(cur).text)
            cand = generate(cfg.grammar, rng, cfg.max_depth)
            regenerated = True
        sent = yield_sentence(cand)
        ji, cand_err = oracle(sent)
        # the current input's verdict is memoised, so this costs no query
        cur_err = oracle(yield_sentence(cur))[1]
        accept = regenerated or not (backtrack and cur_err and not cand_err)
        trace.append(IterationRecord(
            i, sent.text, cand_err, ji, _flag(cur_err) + _flag(cand_err), accept, regenerated))
        if accept:
            cur = cand


def _random_loop(cfg, oracle, seed_tree, rng, trace):
    prev_err = _record_seed(seed_tree, oracle, trace)
    for i in range(1, cfg.iterations + 1):
        sent = yield_sentence(generate(cfg.grammar, rng, cfg.max_depth))
        ji, err = oracle(sent)
        trace.append(IterationRecord(i, sent.text, err, ji, _flag(prev_err) + _flag(err), True))
        prev_err = err


def _with_strategy(cfg: CampaignConfig, strategy: str) -> CampaignConfig:
    if cfg.strategy == strategy:
        return cfg
    d = dict(cfg.__dict__)
    d["strategy"] = strategy
    return CampaignConfig(**d)


def directed_search(cfg: CampaignConfig) -> CampaignReport:
    return run_campaign(_with_strategy(cfg, "directed"))


def no_backtrack_search(cfg: CampaignConfig) -> CampaignReport:
    return run_campaign(_with_strategy(cfg, "no-backtrack"))


def random_search(cfg: CampaignConfig) -> CampaignReport:
    return run_campaign(_with_strategy(cfg, "random"))


def improvement(err_r_directed: float, err_r_random: float) -> Optional[float]:
    """Relative improvement in percent; ``None`` when the baseline is zero."""
    if err_r_random == 0:
        return None
    return (err_r_directed - err_r_random) / err_r_random * 100.0


SUMMARY_FIELDS = ("name", "strategy", "grammar", "pair", "threshold", "seed",
                  "n_inputs", "n_err", "err_r", "unique_ratio", "partial")


def summary_rows(reports: Iterable[CampaignReport], names: Optional[Sequence[str]] = None):
    rows = []
    for k, rep in enumerate(reports):
        c = rep.config
        rows.append({
            "name": names[k] if names else "",
            "strategy": c["strategy"],
            "grammar": c["grammar"],
            "pair": f"{c['f1']}|{c['f2']}",
            "threshold": c["threshold"],
            "seed": c["seed"],
            "n_inputs": rep.n_inputs,
            "n_err": rep.n_err,
            "err_r": rep.err_r,
            "unique_ratio": rep.unique_ratio,
            "partial": rep.partial,
        })
    return rows


def write_summary_csv(rows, fh=None, fields=SUMMARY_FIELDS) -> str:
    buf = fh or io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in fields})
    return buf.getvalue() if fh is None else ""
