"""Grammars shipped with the package.

``example`` and ``example_modified`` are a small English fragment and its variant
with a second route to proper names; ``A`` .. ``F`` are richer grammars for
campaigns; ``G_bad`` has very few terminal alternatives; ``toy1``, ``toy2``
and ``toy_mixed`` drive the retraining experiment.
"""
from functools import lru_cache
from importlib import resources

from ..grammar import Grammar, parse_grammar

RICH = ("A", "B", "C", "D", "E", "F")


def names():
    return sorted(p.name[:-4] for p in resources.files(__name__).iterdir() if p.name.endswith(".bnf"))


def source(name: str) -> str:
    path = resources.files(__name__) / f"{name}.bnf"
    if not path.is_file():
        raise KeyError(f"no bundled grammar named {name!r}; available: {', '.join(names())}")
    return path.read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load(name: str) -> Grammar:
    return parse_grammar(source(name))
