"""Derivation trees: random generation, sentence yield, tree similarity and
single-leaf perturbation.

Trees are immutable.  :func:`perturb` builds a new tree sharing every subtree
that is not on the path to the replaced leaf.

Depth is counted in nodes along the longest root-to-leaf path, terminals
included, so ``S -> "a"`` derives a tree of depth 2.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

from .grammar import Grammar, Symbol

__all__ = [
    "DerivationTree",
    "Sentence",
    "CannotPerturb",
    "DepthExhausted",
    "DEFAULT_MAX_DEPTH",
    "generate",
    "yield_sentence",
    "leaves",
    "similar",
    "perturb",
    "conforms",
    "tree_depth",
    "format_tree",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 16

Path = Tuple[int, ...]


class CannotPerturb(Exception):
    """No leaf of the tree has an alternative terminal in its parent rule."""


class DepthExhausted(ValueError):
    pass


@dataclass(frozen=True)
class Sentence:
    tokens: Tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        return cls(tuple(text.split()))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class DerivationTree:
    node: Symbol
    children: Tuple["DerivationTree", ...] = ()
    alt_index: Optional[int] = None
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    # leaves() result, filled on first use; trees are immutable
    _leaves: Optional[tuple] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node.terminal != (not self.children):
            raise ValueError("terminal nodes are exactly the leaves")
        object.__setattr__(self, "_hash", hash((self.node, self.alt_index, self.children)))

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def sentence(self) -> Sentence:
        return yield_sentence(self)

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"symbol": self.node.text, "terminal": True}
        return {
            "symbol": self.node.text,
            "alt_index": self.alt_index,
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DerivationTree":
        if d.get("terminal"):
            return cls(Symbol(d["symbol"], True))
        return cls(
            Symbol(d["symbol"], False),
            tuple(cls.from_dict(c) for c in d["children"]),
            d["alt_index"],
        )

    def at(self, path: Path) -> "DerivationTree":
        t = self
        for i in path:
            t = t.children[i]
        return t


def leaf(text: str) -> DerivationTree:
    return DerivationTree(Symbol(text, True))


def node(name: str, alt_index: int, *children: DerivationTree) -> DerivationTree:
    return DerivationTree(Symbol(name, False), tuple(children), alt_index)


def generate(
    g: Grammar,
    rng: Optional[random.Random] = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
    start: Optional[str] = None,
) -> DerivationTree:
    """Random derivation from ``start`` (default: the grammar's start symbol).

    Alternatives are chosen uniformly among those that can still complete
    within the remaining depth budget.
    """
    rng = rng or random.Random()
    start = start or g.start
    if g.min_depth[start] > max_depth:
        raise DepthExhausted(
            f"{start} needs depth {g.min_depth[start]}, budget is {max_depth}"
        )
    return _expand(g, start, max_depth, rng)


def _expand(g: Grammar, lhs: str, budget: int, rng: random.Random) -> DerivationTree:
    alts = g.productions[lhs].alternatives
    eligible = [i for i in range(len(alts)) if g.alternative_depth(lhs, i) <= budget]
    if not eligible:
        raise DepthExhausted(f"no alternative of {lhs} fits in depth {budget}")
    k = eligible[rng.randrange(len(eligible))]
    children = tuple(
        DerivationTree(s) if s.terminal else _expand(g, s.text, budget - 1, rng)
        for s in alts[k]
    )
    return DerivationTree(Symbol(lhs, False), children, k)


def yield_sentence(t: DerivationTree) -> Sentence:
    return Sentence(tuple(lf.node.text for _, lf, _ in leaves(t)))


def leaves(t: DerivationTree) -> List[Tuple[Path, DerivationTree, Optional[DerivationTree]]]:
    """All leaves left to right as ``(path, leaf, parent)``."""
    if t._leaves is not None:
        return list(t._leaves)
    out = []

    def walk(n, path, parent):
        if n.is_leaf:
            out.append((path, n, parent))
            return
        for i, c in enumerate(n.children):
            walk(c, path + (i,), n)

    walk(t, (), None)
    object.__setattr__(t, "_leaves", tuple(out))
    return out


def tree_depth(t: DerivationTree) -> int:
    if t.is_leaf:
        return 1
    return 1 + max(tree_depth(c) for c in t.children)


def similar(t1: DerivationTree, t2: DerivationTree) -> bool:
    """True iff the trees differ in the text of exactly one leaf and nowhere
    else.

    The parent of the differing leaf necessarily records a different
    alternative index; that is the only interior difference tolerated.
    """
    diff = _leaf_diff(t1, t2)
    return diff == 1


def _leaf_diff(a: DerivationTree, b: DerivationTree) -> Optional[int]:
    if a.is_leaf or b.is_leaf:
        if not (a.is_leaf and b.is_leaf):
            return None
        return int(a.node.text != b.node.text)
    if a.node != b.node or len(a.children) != len(b.children):
        return None
    total = 0
    direct = 0
    for ca, cb in zip(a.children, b.children):
        d = _leaf_diff(ca, cb)
        if d is None:
            return None
        if d and ca.is_leaf:
            direct += d
        total += d
        if total > 1:
            return None
    if a.alt_index != b.alt_index and direct != 1:
        return None
    return total


def _substitutes(g: Grammar, parent: DerivationTree, text: str) -> List[Tuple[int, str]]:
    # Only a leaf that is the whole right-hand side of its parent can be
    # swapped for another single-terminal alternative without reshaping the tree.
    if parent is None or len(parent.children) != 1:
        return []
    return [(i, t) for i, t in g.single_terminals[parent.node.text] if t != text]


def perturb(
    t: DerivationTree,
    g: Grammar,
    rng: Optional[random.Random] = None,
    strict: bool = False,
) -> DerivationTree:
    """Replace one uniformly chosen leaf by another terminal alternative of
    its parent rule.

    Leaves without alternatives are skipped and another unexamined leaf is
    tried.  With ``strict=True`` the first chosen leaf is final and an empty
    alternative set raises :class:`CannotPerturb` straight away.
    """
    rng = rng or random.Random()
    lvs = leaves(t)
    pending = list(range(len(lvs)))
    while pending:
        j = pending.pop(rng.randrange(len(pending)))
        path, lf, parent = lvs[j]
        subs = _substitutes(g, parent, lf.node.text)
        if subs:
            alt, text = subs[rng.randrange(len(subs))]
            return _replace(t, path, text, alt)
        if strict:
            break
    raise CannotPerturb("Cannot Perturb Terminal")


def _replace(t: DerivationTree, path: Path, text: str, alt: int) -> DerivationTree:
    if len(path) == 1:
        kids = list(t.children)
        kids[path[0]] = DerivationTree(Symbol(text, True))
        return DerivationTree(t.node, tuple(kids), alt)
    kids = list(t.children)
    kids[path[0]] = _replace(kids[path[0]], path[1:], text, alt)
    return DerivationTree(t.node, tuple(kids), t.alt_index)


def conforms(t: DerivationTree, g: Grammar, root: Optional[str] = None) -> bool:
    """Whether ``t`` is a complete derivation in ``g`` from ``root``
    (default: the start symbol)."""
    root = root or g.start
    if t.is_leaf or t.node.text != root:
        return False
    return _conforms(t, g)


def _conforms(t: DerivationTree, g: Grammar) -> bool:
    p = g.productions.get(t.node.text)
    if p is None or t.alt_index is None or not 0 <= t.alt_index < len(p.alternatives):
        return False
    alt = p.alternatives[t.alt_index]
    if len(alt) != len(t.children):
        return False
    for s, c in zip(alt, t.children):
        if c.node != s:
            return False
        if not s.terminal and not _conforms(c, g):
            return False
    return True


def format_tree(t: DerivationTree, indent: str = "  ") -> str:
    lines: List[str] = []

    def walk(n, depth):
        if n.is_leaf:
            lines.append(f'{indent * depth}"{n.node.text}"')
        else:
            lines.append(f"{indent * depth}{n.node.text} [{n.alt_index}]")
            for c in n.children:
                walk(c, depth + 1)

    walk(t, 0)
    return "\n".join(lines)


def iter_trees(g: Grammar, max_depth: int, lhs: Optional[str] = None) -> Iterator[DerivationTree]:
    """Every derivation tree from ``lhs`` of depth at most ``max_depth``, in
    a fixed order.  Exponential; intended for small grammars."""
    lhs = lhs or g.start
    for k, alt in enumerate(g.productions[lhs].alternatives):
        for kids in _iter_seq(g, alt, max_depth - 1):
            yield DerivationTree(Symbol(lhs, False), kids, k)


def _iter_seq(g: Grammar, seq: Sequence[Symbol], budget: int) -> Iterator[Tuple[DerivationTree, ...]]:
    if not seq:
        yield ()
        return
    head, rest = seq[0], seq[1:]
    if head.terminal:
        heads = [DerivationTree(head)] if budget >= 1 else []
    elif g.min_depth[head.text] > budget:
        heads = []
    else:
        heads = list(iter_trees(g, budget, head.text))
    if not heads:
        return
    tails = list(_iter_seq(g, rest, budget))
    for h in heads:
        for tl in tails:
            yield (h,) + tl
