"""
Grammars, derivation trees and one-leaf perturbations
======================================================

Parse a small grammar, draw a sentence, look at its derivation tree and
take a few perturbation steps.  Each step swaps exactly one leaf for
another terminal alternative of the same rule.
"""
import random

from gramdiff import CannotPerturb, format_tree, generate, parse_grammar, perturb, similar, yield_sentence

GRAMMAR = '''
S  -> NP VP
NP -> "John" | "Mary" | "Bob" | Det N | Det N PP
Det -> "my" | "the"
N  -> "dog" | "cat"
VP -> V NP | V NP PP
V  -> "saw" | "shot"
PP -> P NP
P  -> "with"
'''

g = parse_grammar(GRAMMAR)
print("start symbol:", g.start)
print("terminals:", sorted(g.terminals))
print("shallowest S derivation has", g.min_depth["S"], "levels")

# %%
# A derivation tree records which alternative was used at every node, so
# the yield (the leaves read left to right) is the sentence.
rng = random.Random(4)
tree = generate(g, rng, max_depth=6)
print(yield_sentence(tree).text)
print(format_tree(tree))

# %%
# Perturbation walks: every step is one token away from the previous one.
cur = tree
for step in range(5):
    nxt = perturb(cur, g, rng)
    assert similar(cur, nxt)
    print(f"{step}: {yield_sentence(cur).text:40s} -> {yield_sentence(nxt).text}")
    cur = nxt

# %%
# "with" is the only P, so a tree whose single leaf is fixed cannot move.
tiny = parse_grammar('S -> "with"')
try:
    perturb(generate(tiny, rng), tiny, rng)
except CannotPerturb as exc:
    print("tiny grammar:", exc)
