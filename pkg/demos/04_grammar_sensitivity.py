"""
Grammar richness and unique inputs
===================================

Perturbation only swaps terminals, so a grammar with few terminal
alternatives per slot keeps producing sentences the campaign has already
seen.  Compare the bundled rich grammars with G_bad.
"""
import statistics

from gramdiff import CampaignConfig, derive_seed, grammars, run_campaign
from gramdiff.toys import LexiconClassifier, hashed_lexicon

LABELS = ["ARTS", "BUSINESS", "FOOD", "SCIENCE", "SPORTS", "TRAVEL"]
seeds = [derive_seed(0, i) for i in range(20)]

for name in ["A", "B", "C", "D", "E", "F", "G_bad"]:
    g = grammars.load(name)
    f1 = LexiconClassifier("lex1", hashed_lexicon(g.terminals, LABELS, "f1"))
    f2 = LexiconClassifier("lex2", hashed_lexicon(g.terminals, LABELS, "f2"))
    reps = [run_campaign(CampaignConfig(g, f1, f2, 0.15, 100, "directed", s)) for s in seeds]
    print(f"{name:6s} {len(g.terminals):3d} terminals   unique inputs "
          f"{statistics.mean(r.unique_ratio for r in reps):.0%}   err_r {statistics.mean(r.err_r for r in reps):.2f}")

print()
print(grammars.source("G_bad"))
