"""
How the Jaccard threshold shapes the error set
===============================================

Two lexicon classifiers label a sentence by voting over per-word labels,
each with its own word-to-label table.  Their label sets overlap
partially, so the Jaccard threshold decides how much disagreement counts
as an error.  A larger threshold can only add errors.
"""
import statistics

from gramdiff import CampaignConfig, derive_seed, grammars, run_campaign
from gramdiff.toys import LexiconClassifier, hashed_lexicon

LABELS = ["ARTS", "AUTOMOTIVE", "BUSINESS", "FOOD", "HOBBIES",
          "SCIENCE", "SOCIETY", "SPORTS", "TECHNOLOGY", "TRAVEL"]

g = grammars.load("A")
f1 = LexiconClassifier("lex1", hashed_lexicon(g.terminals, LABELS, "f1"))
f2 = LexiconClassifier("lex2", hashed_lexicon(g.terminals, LABELS, "f2"))
seeds = [derive_seed(0, i) for i in range(20)]

print(" J     random  directed")
for j in (0.05, 0.15, 0.3, 0.45, 0.6):
    row = [statistics.mean(run_campaign(CampaignConfig(g, f1, f2, j, 300, s, seed)).err_r for seed in seeds)
           for s in ("random", "directed")]
    print(f"{j:4.2f}  {row[0]:7.3f}  {row[1]:8.3f}")

# At small thresholds errors are rare and the directed walk gains the most.
