"""
Directed search against the random baseline
============================================

Two classifiers that disagree exactly on sentences containing "shot".
Errors cluster (every sentence with the verb "shot" is one), which is the
situation a neighbourhood search is built for: once directed search
finds an error it refuses to step back to a non-error input.
"""
import statistics

from gramdiff import CampaignConfig, derive_seed, grammars, improvement, run_campaign
from gramdiff.toys import keyword_pair

g = grammars.load("example")
f1, f2 = keyword_pair(["shot"])
seeds = [derive_seed(0, i) for i in range(20)]

means = {}
for strategy in ("directed", "no-backtrack", "random"):
    reports = [run_campaign(CampaignConfig(g, f1, f2, 0.5, 500, strategy, s)) for s in seeds]
    means[strategy] = statistics.mean(r.err_r for r in reports)
    print(f"{strategy:13s} mean err_r {means[strategy]:.3f}"
          f"  backtracks/campaign {statistics.mean(r.n_backtracks for r in reports):.0f}")

print(f"Imp% over random:       {improvement(means['directed'], means['random']):.1f}")
print(f"Imp% over no-backtrack: {improvement(means['directed'], means['no-backtrack']):.1f}")

# %%
# The trace keeps every step.  EN marks a rejected move from an error to a
# non-error input; the walk stays on the current sentence.
rep = run_campaign(CampaignConfig(g, f1, f2, 0.5, 12, "directed", seeds[0], initial_mode="force-error"))
for rec in rep.trace:
    print(rec.index, rec.transition or "--", "kept" if rec.accepted else "back", rec.sentence)
