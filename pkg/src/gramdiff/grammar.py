"""Context-free grammars: a small BNF-like file format, validation and the
structural queries the perturbation engine relies on.

File format::

    # comment
    S  -> NP VP
    NP -> "John" | "Mary" | Det N
    Det -> "my" | "the"
    ...

Terminals are double-quoted and may not contain whitespace.  Nonterminals are
bare identifiers.  The first rule's left-hand side is the start symbol and
every nonterminal is defined by exactly one line.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

__all__ = [
    "Symbol",
    "Production",
    "Grammar",
    "GrammarError",
    "UnreachableNonterminalWarning",
    "parse_grammar",
    "load_grammar",
    "terminal_alternatives",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


class GrammarError(ValueError):
    """Raised for malformed or invalid grammars.

    ``line`` and ``column`` are 1-based and ``None`` when the problem is not
    tied to a source position (e.g. a non-productive nonterminal).
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class UnreachableNonterminalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Symbol:
    text: str
    terminal: bool

    def __str__(self) -> str:
        return f'"{self.text}"' if self.terminal else self.text


def T(text: str) -> Symbol:
    return Symbol(text, True)


def NT(name: str) -> Symbol:
    return Symbol(name, False)


@dataclass(frozen=True)
class Production:
    lhs: str
    alternatives: Tuple[Tuple[Symbol, ...], ...]

    def __str__(self) -> str:
        rhs = " | ".join(" ".join(str(s) for s in alt) for alt in self.alternatives)
        return f"{self.lhs} -> {rhs}"


@dataclass(frozen=True, eq=False)
class Grammar:
    """A validated context-free grammar.

    Build through :func:`parse_grammar` or :meth:`Grammar.from_rules`; the
    constructor itself does not validate.
    """

    start: str
    productions: Mapping[str, Production]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grammar):
            return NotImplemented
        return self.start == other.start and dict(self.productions) == dict(other.productions)

    def __hash__(self) -> int:
        return hash((self.start, tuple(self.productions.values())))

    @classmethod
    def from_rules(cls, rules: Iterable[Tuple[str, Iterable[Iterable[Symbol]]]]) -> "Grammar":
        prods: Dict[str, Production] = {}
        start = None
        for lhs, alts in rules:
            if lhs in prods:
                raise GrammarError(f"duplicate definition of nonterminal {lhs}")
            prods[lhs] = Production(lhs, tuple(tuple(a) for a in alts))
            start = start or lhs
        if start is None:
            raise GrammarError("grammar has no rules")
        g = cls(start, prods)
        g.validate()
        return g

    def __getitem__(self, lhs: str) -> Production:
        return self.productions[lhs]

    def __contains__(self, lhs: str) -> bool:
        return lhs in self.productions

    @property
    def nonterminals(self) -> Tuple[str, ...]:
        return tuple(self.productions)

    @cached_property
    def terminals(self) -> FrozenSet[str]:
        return frozenset(
            s.text
            for p in self.productions.values()
            for alt in p.alternatives
            for s in alt
            if s.terminal
        )

    @cached_property
    def min_depth(self) -> Dict[str, int]:
        """Depth of the shallowest complete derivation of every nonterminal.

        Depth counts nodes on the longest root-to-leaf path, so a rule
        ``A -> "x"`` has depth 2.  Non-productive nonterminals are absent.
        """
        depth: Dict[str, int] = {}
        changed = True
        while changed:
            changed = False
            for lhs, p in self.productions.items():
                for alt in p.alternatives:
                    d = _alt_depth(alt, depth)
                    if d is not None and d < depth.get(lhs, 1 << 30):
                        depth[lhs] = d
                        changed = True
        return depth

    def alternative_depth(self, lhs: str, index: int) -> int:
        d = _alt_depth(self.productions[lhs].alternatives[index], self.min_depth)
        assert d is not None
        return d

    @cached_property
    def single_terminals(self) -> Dict[str, Tuple[Tuple[int, str], ...]]:
        """Per nonterminal, ``(alternative index, terminal)`` for every
        alternative consisting of exactly one terminal, in grammar order."""
        out = {}
        for lhs, p in self.productions.items():
            seen = set()
            items = []
            for i, alt in enumerate(p.alternatives):
                if len(alt) == 1 and alt[0].terminal and alt[0].text not in seen:
                    seen.add(alt[0].text)
                    items.append((i, alt[0].text))
            out[lhs] = tuple(items)
        return out

    @cached_property
    def unreachable(self) -> Tuple[str, ...]:
        seen = {self.start}
        stack = [self.start]
        while stack:
            for alt in self.productions[stack.pop()].alternatives:
                for s in alt:
                    if not s.terminal and s.text not in seen:
                        seen.add(s.text)
                        stack.append(s.text)
        return tuple(n for n in self.productions if n not in seen)

    def validate(self) -> None:
        if self.start not in self.productions:
            raise GrammarError(f"start symbol {self.start} is not defined")
        for p in self.productions.values():
            if not p.alternatives:
                raise GrammarError(f"nonterminal {p.lhs} has no alternatives")
            for alt in p.alternatives:
                if not alt:
                    raise GrammarError(f"nonterminal {p.lhs} has an empty alternative")
                for s in alt:
                    if s.terminal:
                        _check_terminal(s.text)
                    elif s.text not in self.productions:
                        raise GrammarError(f"undefined nonterminal {s.text}")
        useless = [n for n in self.productions if n not in self.min_depth]
        if useless:
            raise GrammarError("non-productive nonterminal " + ", ".join(useless))
        if self.unreachable:
            warnings.warn(
                "unreachable nonterminal " + ", ".join(self.unreachable),
                UnreachableNonterminalWarning,
                stacklevel=3,
            )

    def to_text(self) -> str:
        return "".join(str(p) + "\n" for p in self.productions.values())

    def __str__(self) -> str:
        return self.to_text()


def _alt_depth(alt: Tuple[Symbol, ...], depth: Mapping[str, int]) -> Optional[int]:
    worst = 1
    for s in alt:
        if s.terminal:
            continue
        if s.text not in depth:
            return None
        worst = max(worst, depth[s.text])
    return worst + 1


def _check_terminal(text: str) -> None:
    if not text or any(c.isspace() for c in text):
        raise GrammarError(f"invalid terminal {text!r}: must be non-empty without whitespace")


def terminal_alternatives(g: Grammar, lhs: str, exclude: Optional[str] = None) -> FrozenSet[str]:
    """Terminals that form a complete single-symbol alternative of ``lhs``,
    minus ``exclude``.  May be empty."""
    return frozenset(t for _, t in g.single_terminals[lhs] if t != exclude)


def _tokenize_line(line: str, lineno: int) -> List[Tuple[str, str, int]]:
    """Split one rule line into (kind, value, column) tokens."""
    tokens = []
    i = 0
    n = len(line)
    while i < n:
        c = line[i]
        col = i + 1
        if c.isspace():
            i += 1
        elif line.startswith("->", i):
            tokens.append(("arrow", "->", col))
            i += 2
        elif c == "|":
            tokens.append(("bar", "|", col))
            i += 1
        elif c == '"':
            end = line.find('"', i + 1)
            if end < 0:
                raise GrammarError("unterminated terminal", lineno, col)
            text = line[i + 1:end]
            if not text:
                raise GrammarError("empty terminal", lineno, col)
            if any(ch.isspace() for ch in text):
                raise GrammarError(f"whitespace inside terminal {text!r}", lineno, col)
            tokens.append(("term", text, col))
            i = end + 1
        else:
            m = _IDENT.match(line, i)
            if not m:
                raise GrammarError(f"unexpected character {c!r}", lineno, col)
            tokens.append(("ident", m.group(), col))
            i = m.end()
    return tokens


def parse_grammar(source: str) -> Grammar:
    """Parse and validate grammar text.

    Raises :class:`GrammarError` on syntax errors (with line and column),
    duplicate definitions, undefined or non-productive nonterminals.
    Unreachable nonterminals only trigger an
    :class:`UnreachableNonterminalWarning`.
    """
    prods: Dict[str, Production] = {}
    start = None
    for lineno, line in enumerate(source.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        toks = _tokenize_line(line, lineno)
        if len(toks) < 2 or toks[0][0] != "ident" or toks[1][0] != "arrow":
            col = toks[0][2] if toks else 1
            raise GrammarError("expected 'Name ->' at start of rule", lineno, col)
        lhs = toks[0][1]
        if lhs in prods:
            raise GrammarError(f"duplicate definition of nonterminal {lhs}", lineno, toks[0][2])
        alts: List[Tuple[Symbol, ...]] = []
        current: List[Symbol] = []
        last_col = toks[1][2]
        for kind, value, col in toks[2:]:
            if kind == "bar":
                if not current:
                    raise GrammarError("empty alternative", lineno, col)
                alts.append(tuple(current))
                current = []
            elif kind == "arrow":
                raise GrammarError("unexpected '->'", lineno, col)
            else:
                current.append(Symbol(value, kind == "term"))
            last_col = col
        if not current:
            raise GrammarError("empty alternative", lineno, last_col + 1)
        alts.append(tuple(current))
        prods[lhs] = Production(lhs, tuple(alts))
        start = start or lhs
    if start is None:
        raise GrammarError("grammar has no rules")
    g = Grammar(start, prods)
    g.validate()
    return g


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read())
