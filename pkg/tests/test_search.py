import csv
import io
import json
import math
import random

import pytest

from gramdiff import grammars
from gramdiff.derivation import Sentence, generate, yield_sentence
from gramdiff.grammar import parse_grammar
from gramdiff.oracle import Classifier, TransportError
from gramdiff.search import (
    CampaignConfig,
    CampaignReport,
    ProbeExhausted,
    derive_seed,
    directed_search,
    find_initial,
    improvement,
    no_backtrack_search,
    random_search,
    run_campaign,
    summary_rows,
    write_summary_csv,
)
from gramdiff.toys import ConstantClassifier, FunctionClassifier, keyword_pair

EXAMPLE = grammars.load("example")
BASE = ConstantClassifier("base", ["N"])
ALL_ERR = ConstantClassifier("other", ["E"])
NO_ERR = ConstantClassifier("same", ["N"])


def cfg(f1=BASE, f2=ALL_ERR, n=100, strategy="directed", seed=0, **kw):
    return CampaignConfig(EXAMPLE, f1, f2, 0.5, n, strategy, seed, **kw)


@pytest.mark.parametrize("strategy", ["directed", "no-backtrack", "random"])
def test_all_error_oracle(strategy):
    r = run_campaign(cfg(strategy=strategy))
    assert len(r.trace) == 101
    assert r.n_err == r.n_inputs and r.err_r == 1.0
    assert all(x.transition == "EE" for x in r.trace[1:])
    assert r.trace[0].transition is None and r.trace[0].index == 0
    assert r.iterations_to_first_error == 0


@pytest.mark.parametrize("strategy", ["directed", "no-backtrack", "random"])
def test_no_error_oracle(strategy):
    r = run_campaign(cfg(f2=NO_ERR, strategy=strategy))
    assert r.n_err == 0 and r.err_r == 0.0
    assert all(x.transition == "NN" for x in r.trace[1:])
    assert r.n_backtracks == 0
    assert r.iterations_to_first_error is None


@pytest.mark.parametrize("f2", [ALL_ERR, NO_ERR])
def test_guard_never_fires_on_uniform_oracles(f2):
    d = directed_search(cfg(f2=f2, seed=11))
    nb = no_backtrack_search(cfg(f2=f2, seed=11))
    assert d.trace == nb.trace


def shot_cfg(strategy, seed, n=200, **kw):
    f1, f2 = keyword_pair(["shot"])
    return CampaignConfig(EXAMPLE, f1, f2, 0.5, n, strategy, seed, **kw)


def _replay_currents(report):
    """Current input before each iteration, reconstructed from the trace."""
    cur = report.trace[0]
    out = []
    for rec in report.trace[1:]:
        out.append(cur)
        if rec.accepted:
            cur = rec
    return out


@pytest.mark.parametrize("seed", range(10))
def test_directed_trace_invariants(seed):
    r = run_campaign(shot_cfg("directed", derive_seed(3, seed)))
    currents = _replay_currents(r)
    for rec, cur in zip(r.trace[1:], currents):
        assert rec.transition == ("E" if cur.is_error else "N") + ("E" if rec.is_error else "N")
        assert rec.accepted == (rec.transition != "EN")
        # the candidate is one leaf away from the current input
        a, b = Sentence.from_text(cur.sentence).tokens, Sentence.from_text(rec.sentence).tokens
        assert len(a) == len(b) and sum(x != y for x, y in zip(a, b)) == 1
    # erroneous current never replaced by a non-erroneous one
    seq = [r.trace[0]] + [rec for rec in r.trace[1:] if rec.accepted]
    for prev, nxt in zip(seq, seq[1:]):
        assert not (prev.is_error and not nxt.is_error)


def test_backtrack_perturbs_same_current():
    r = run_campaign(shot_cfg("directed", 5, n=300))
    currents = _replay_currents(r)
    en = [i for i, rec in enumerate(r.trace[1:]) if rec.transition == "EN"]
    assert en, "expected at least one backtrack"
    for i in en:
        if i + 1 < len(currents):
            assert currents[i + 1].sentence == currents[i].sentence


def test_no_backtrack_always_accepts():
    r = run_campaign(shot_cfg("no-backtrack", 5, n=300))
    assert all(rec.accepted for rec in r.trace)
    assert any(rec.transition == "EN" for rec in r.trace)


def test_random_subject_probability():
    # errors are sentences whose subject is "Bob": NP picks uniformly among
    # five alternatives at the root, so each draw errs with probability 1/5
    f2 = FunctionClassifier("bob", lambda s: ["E"] if s.tokens[0] == "Bob" else ["N"])
    hits = draws = 0
    for i in range(10):
        r = random_search(CampaignConfig(EXAMPLE, BASE, f2, 0.5, 500, "random", derive_seed(7, i)))
        draws += len(r.trace) - 1
        hits += sum(x.is_error for x in r.trace[1:])
    p = 1 / 5
    sigma = math.sqrt(p * (1 - p) / draws)
    assert abs(hits / draws - p) <= 3 * sigma


def test_report_counts_unique_texts():
    g = parse_grammar('S -> "a" | "b"')
    r = run_campaign(CampaignConfig(g, BASE, ALL_ERR, 0.5, 50, "random", 1))
    assert len(r.trace) == 51
    assert r.n_inputs == 2 and r.n_err == 2
    assert r.unique_ratio == pytest.approx(2 / 51)
    assert set(r.errors) == {"a", "b"}


def test_campaign_is_deterministic():
    a = run_campaign(shot_cfg("directed", 42))
    b = run_campaign(shot_cfg("directed", 42))
    assert a.trace_jsonl() == b.trace_jsonl()
    assert a.trace_jsonl() != run_campaign(shot_cfg("directed", 43)).trace_jsonl()


def test_trace_jsonl_round_trip(tmp_path):
    r = run_campaign(shot_cfg("directed", 1, n=50))
    p = tmp_path / "t.jsonl"
    r.write_jsonl(p)
    assert CampaignReport.read_trace(p) == r.trace
    first = json.loads(p.read_text().splitlines()[0])
    assert set(first) == {"index", "sentence", "is_error", "jaccard", "transition", "accepted", "regenerated"}
    doc = json.loads(r.to_json())
    assert doc["n_err"] <= doc["n_inputs"] and 0 <= doc["err_r"] <= 1
    assert doc["config"]["strategy"] == "directed"


# -- initial input ---------------------------------------------------------------


def test_find_initial_any_is_first_tree():
    t = find_initial(EXAMPLE, BASE, ALL_ERR, 0.5, "any", rng=random.Random(4))
    assert t == generate(EXAMPLE, random.Random(4))


def test_find_initial_force_error_all_error():
    t = find_initial(EXAMPLE, BASE, ALL_ERR, 0.5, "force-error", rng=random.Random(4))
    assert t == generate(EXAMPLE, random.Random(4))


def test_find_initial_exhaustion():
    with pytest.raises(ProbeExhausted):
        find_initial(EXAMPLE, BASE, NO_ERR, 0.5, "force-error", max_probes=20, rng=random.Random(0))


def test_find_initial_sparse_errors():
    # sentences with subject "Bob" and verb "shot": about 1/10 of draws
    f2 = FunctionClassifier("bs", lambda s: ["E"] if s.tokens[0] == "Bob" and "shot" in s.tokens else ["N"])
    ok = 0
    for seed in range(200):
        try:
            t = find_initial(EXAMPLE, BASE, f2, 0.5, "force-error", 100, random.Random(seed))
        except ProbeExhausted:
            continue
        assert yield_sentence(t).tokens[0] == "Bob"
        ok += 1
    # failure probability per seed is at most about 0.9**100
    assert ok == 200


@pytest.mark.parametrize("mode, want", [("force-error", True), ("force-non-error", False)])
def test_campaign_honours_initial_mode(mode, want):
    for seed in range(10):
        r = run_campaign(shot_cfg("directed", seed, n=5, initial_mode=mode))
        assert r.trace[0].is_error is want


# -- failure paths ---------------------------------------------------------------


def test_cannot_perturb_regenerates():
    g = parse_grammar('S -> A B\nA -> "x"\nB -> "y"\n')
    r = run_campaign(CampaignConfig(g, BASE, ALL_ERR, 0.5, 5, "directed", 0))
    assert all(rec.regenerated and rec.accepted for rec in r.trace[1:])
    assert r.n_inputs == 1


def test_strict_perturb_can_regenerate():
    g = parse_grammar('S -> A B\nA -> "x"\nB -> "y" | "z"\n')
    r = run_campaign(CampaignConfig(g, BASE, NO_ERR, 0.5, 200, "directed", 0, strict_perturb=True))
    flags = {rec.regenerated for rec in r.trace[1:]}
    assert flags == {True, False}


class Flaky(Classifier):
    def __init__(self, id, fail_after):
        super().__init__(id)
        self.left = fail_after

    def classify(self, sentence):
        if self.left <= 0:
            raise TransportError("service unavailable")
        self.left -= 1
        return ["X"]


def test_transport_failure_yields_partial_report():
    r = run_campaign(cfg(f2=Flaky("flaky", 10), n=100))
    assert r.partial
    assert "TransportError" in r.abort_reason
    assert 0 < len(r.trace) < 101
    assert json.loads(r.to_json())["partial"] is True


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(n=0)
    with pytest.raises(ValueError):
        cfg(strategy="greedy")
    with pytest.raises(ValueError):
        cfg(initial_mode="sometimes")
    with pytest.warns(UserWarning, match="clamped"):
        c = CampaignConfig(EXAMPLE, BASE, ALL_ERR, 1.5, 10)
    assert c.threshold == 1.0


# -- reporting -------------------------------------------------------------------


def test_improvement():
    assert improvement(0.6, 0.5) == pytest.approx(20.0)
    assert improvement(0.4, 0.5) == pytest.approx(-20.0)
    assert improvement(0.3, 0.0) is None


def test_summary_csv():
    reps = [run_campaign(shot_cfg(s, 1, n=30)) for s in ("directed", "random")]
    text = write_summary_csv(summary_rows(reps, ["d", "r"]))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["strategy"] for r in rows] == ["directed", "random"]
    assert rows[0]["pair"] == "kw-base|kw-shot"
    for row, rep in zip(rows, reps):
        assert float(row["err_r"]) == rep.err_r
        assert int(row["n_inputs"]) == rep.n_inputs


def test_derive_seed_stable():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert derive_seed(0, 1) != derive_seed(0, 2)
    assert 0 <= derive_seed(123, "x", 4) < 2**63
