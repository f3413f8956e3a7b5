import pytest

from gramdiff import grammars
from gramdiff.derivation import leaf, node


class ScriptedRng:
    """Stand-in for random.Random that replays ``randrange`` outcomes.

    Positions past the script return 0; every call's arity is recorded so
    callers can enumerate the whole decision tree.
    """

    def __init__(self, script=()):
        self.script = list(script)
        self.values = []
        self.arities = []

    def randrange(self, n):
        assert n > 0
        pos = len(self.values)
        v = self.script[pos] if pos < len(self.script) else 0
        assert 0 <= v < n
        self.values.append(v)
        self.arities.append(n)
        return v


def all_outcomes(fn):
    """Run ``fn(rng)`` once for every possible sequence of randrange results."""
    out = []
    stack = [()]
    while stack:
        prefix = stack.pop()
        rng = ScriptedRng(prefix)
        out.append(fn(rng))
        for pos in range(len(prefix), len(rng.arities)):
            for v in range(1, rng.arities[pos]):
                stack.append(tuple(rng.values[:pos]) + (v,))
    return out


def fig_tree(subject="Mary", subject_alt=1, verb="saw", det="my", noun="dog"):
    """S -> NP VP with a terminal subject and ``V Det N`` object, as in the
    small example grammar ("Mary saw my dog")."""
    v_alt = {"saw": 0, "shot": 1}[verb]
    d_alt = {"my": 0, "the": 1}[det]
    n_alt = {"dog": 0, "cat": 1}[noun]
    return node(
        "S", 0,
        node("NP", subject_alt, leaf(subject)),
        node(
            "VP", 0,
            node("V", v_alt, leaf(verb)),
            node("NP", 3, node("Det", d_alt, leaf(det)), node("N", n_alt, leaf(noun))),
        ),
    )


@pytest.fixture
def example():
    return grammars.load("example")


@pytest.fixture
def example_modified():
    return grammars.load("example_modified")


# criterion number -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
