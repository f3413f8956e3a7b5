import json
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gramdiff.derivation import Sentence
from gramdiff.httpclient import HttpClassifier
from gramdiff.oracle import (
    Classifier,
    Differential,
    MalformedResponse,
    ScoredOutput,
    TransportError,
    bucket_sentiment,
    evaluate,
    jaccard,
    labelset,
    query,
)
from gramdiff.toys import (
    ConstantClassifier,
    KeywordClassifier,
    LexiconClassifier,
    SentimentLexicon,
    distort,
    hashed_lexicon,
)

S = Sentence.from_text("Mary saw my dog")


def brute_jaccard(a, b):
    universe = sorted(set(a) | set(b))
    inter = sum(1 for x in universe if x in a and x in b)
    union = sum(1 for x in universe if x in a or x in b)
    return Fraction(1) if union == 0 else Fraction(inter, union)


def test_jaccard_examples():
    assert jaccard({"x", "y"}, {"y", "z"}) == pytest.approx(1 / 3)
    assert jaccard(set(), set()) == 1.0
    assert jaccard({"a", "b"}, {"a", "b"}) == 1.0
    assert jaccard({"a"}, set()) == 0.0


@given(st.frozensets(st.sampled_from("abcdefgh"), max_size=6), st.frozensets(st.sampled_from("abcdefgh"), max_size=6))
def test_jaccard_matches_brute_force(a, b):
    assert jaccard(a, b) == float(brute_jaccard(a, b))
    assert jaccard(a, b) == jaccard(b, a)
    assert 0.0 <= jaccard(a, b) <= 1.0
    assert (jaccard(a, b) == 1.0) == (a == b)


def test_evaluate_is_strict():
    a, b = {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"}, {"1"}  # JI = 0.1
    assert evaluate(a, b, 0.15)
    # JI = 0.15 exactly is not an error: 3 shared out of 20
    c = {str(i) for i in range(20)}
    d = {"0", "1", "2"}
    assert jaccard(c, d) == 0.15
    assert not evaluate(c, d, 0.15)
    assert not evaluate(set(), set(), 0.5)


@given(st.frozensets(st.sampled_from("abcd")), st.frozensets(st.sampled_from("abcd")))
def test_evaluate_at_zero_threshold_never_errs(a, b):
    assert not evaluate(a, b, 0.0)


def test_labelset_trims_but_keeps_case():
    assert labelset([" SPORTS ", "sports", "", "  "]) == {"SPORTS", "sports"}


@pytest.mark.parametrize(
    "score, label",
    [
        (-0.999, "NEGATIVE"),
        (-0.25, "NEGATIVE"),
        (-0.2499999, "NEUTRAL"),
        (0.0, "NEUTRAL"),
        (0.2499999, "NEUTRAL"),
        (0.25, "POSITIVE"),
        (0.999, "POSITIVE"),
    ],
)
def test_bucket_sentiment(score, label):
    assert bucket_sentiment(ScoredOutput(score, 1.0)) == {label}


@given(st.floats(min_value=-1, max_value=1, exclude_min=True, exclude_max=True))
def test_bucket_sentiment_partitions(score):
    (label,) = bucket_sentiment(ScoredOutput(score))
    expected = "NEGATIVE" if score <= -0.25 else "NEUTRAL" if score < 0.25 else "POSITIVE"
    assert label == expected


@pytest.mark.parametrize("score", [-1.0, 1.0, 1.5, float("nan")])
def test_scored_output_range(score):
    with pytest.raises(ValueError):
        ScoredOutput(score)


def test_query_truncates_ranked_output():
    c = ConstantClassifier("six", ["a", "b", "c", "d", "e", "f"])
    assert query(c, S) == {"a", "b", "c", "d", "e"}
    assert query(c, S, top_k=None) == set("abcdef")


def test_query_routes_scored_output():
    c = SentimentLexicon("sent", {"saw": 2.0})
    assert query(c, S) == {"POSITIVE"}


class Counting(Classifier):
    def __init__(self, id):
        super().__init__(id)
        self.calls = 0

    def classify(self, sentence):
        self.calls += 1
        return [sentence.tokens[0]]


def test_cache_memoises_per_classifier_and_text():
    f1, f2 = Counting("f1"), Counting("f2")
    oracle = Differential(f1, f2, 0.5)
    for _ in range(5):
        assert oracle(S) == (1.0, False)
    assert (f1.calls, f2.calls) == (1, 1)
    oracle(Sentence.from_text("Bob saw my dog"))
    assert (f1.calls, f2.calls) == (2, 2)
    assert len(oracle.cache) == 4


def test_differential_rejects_clashing_ids():
    with pytest.raises(ValueError):
        Differential(Counting("x"), Counting("x"), 0.5)


def test_keyword_classifier():
    k = KeywordClassifier("kw", ["shot"], hit=["E"], miss=["N"])
    assert query(k, Sentence.from_text("Bob shot my dog")) == {"E"}
    assert query(k, S) == {"N"}


def test_lexicon_classifier_ranks_by_votes():
    lex = {"Mary": "PEOPLE", "saw": "ARTS", "my": "PEOPLE", "dog": "PETS"}
    c = LexiconClassifier("lex", lex)
    assert c.classify(S) == ["PEOPLE", "ARTS", "PETS"]


def test_hashed_lexicon_is_stable():
    a = hashed_lexicon(["x", "y", "z"], ["A", "B"], "salt")
    assert a == hashed_lexicon(["z", "y", "x"], ["A", "B"], "salt")
    d = distort(a, ["A", "B"], 1.0, "s")
    assert all(d[t] != a[t] for t in a)
    assert distort(a, ["A", "B"], 0.0, "s") == a


# -- HTTP adapter ---------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.requests.append(body)
        status, payload = self.server.responses.pop(0) if self.server.responses else (200, {"labels": []})
        raw = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)


@pytest.fixture
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    srv.requests = []
    srv.responses = []
    th = threading.Thread(target=srv.serve_forever, daemon=True)
    th.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def _client(server, **kw):
    sleeps = []
    c = HttpClassifier("svc", f"http://127.0.0.1:{server.server_port}/classify",
                       timeout=5, sleep=sleeps.append, **kw)
    return c, sleeps


def test_http_labels(server):
    server.responses.append((200, {"labels": ["SPORTS", "SOCIETY"]}))
    c, _ = _client(server)
    assert query(c, S) == {"SPORTS", "SOCIETY"}
    assert server.requests == [{"text": "Mary saw my dog"}]


def test_http_top_k(server):
    server.responses.append((200, {"labels": ["a", "b", "c", "d", "e", "f"]}))
    c, _ = _client(server)
    assert query(c, S) == {"a", "b", "c", "d", "e"}


def test_http_scored(server):
    server.responses.append((200, {"score": -0.6, "magnitude": 1.2}))
    c, _ = _client(server)
    assert query(c, S) == {"NEGATIVE"}


def test_http_retries_with_backoff(server):
    server.responses.extend([(503, {}), (500, {}), (200, {"labels": ["X"]})])
    c, sleeps = _client(server, retries=3, backoff=0.1)
    assert query(c, S) == {"X"}
    assert sleeps == [0.1, 0.2]


def test_http_gives_up(server):
    server.responses.extend([(503, {})] * 3)
    c, sleeps = _client(server, retries=2, backoff=0.5)
    with pytest.raises(TransportError):
        query(c, S)
    assert sleeps == [0.5, 1.0]
    assert len(server.requests) == 3


def test_http_client_error_not_retried(server):
    server.responses.append((400, {"error": "bad"}))
    c, sleeps = _client(server, retries=3)
    with pytest.raises(TransportError):
        query(c, S)
    assert sleeps == []


def test_http_connection_refused():
    c = HttpClassifier("dead", "http://127.0.0.1:9/x", timeout=0.5, retries=1, sleep=lambda s: None)
    with pytest.raises(TransportError):
        query(c, S)


@pytest.mark.parametrize("payload", [b"not json", {"nothing": 1}, {"labels": "SPORTS"}, {"score": "x"}, [1, 2]])
def test_http_malformed_keeps_payload(server, payload):
    server.responses.append((200, payload))
    c, _ = _client(server)
    with pytest.raises(MalformedResponse) as exc:
        query(c, S)
    assert exc.value.payload is not None
