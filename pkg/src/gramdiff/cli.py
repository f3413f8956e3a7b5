"""Command line entry point.

Verbs:

``run``       campaign suite from a JSON config
``gen``       sample sentences from a grammar
``perturb``   one perturbation step, for debugging grammars
``murq``      retraining experiment
``validate``  grammar lint

Exit codes: 0 success, 1 usage or cannot-perturb, 2 config error,
3 grammar error, 4 a classifier failed and some campaigns are partial.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import random
import statistics
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jsonschema

from . import grammars as bundled
from .classifiers import ModelClassifier, load_model
from .derivation import (
    DEFAULT_MAX_DEPTH,
    CannotPerturb,
    DerivationTree,
    format_tree,
    generate,
    leaves,
    perturb,
    yield_sentence,
)
from .grammar import Grammar, GrammarError, load_grammar
from .httpclient import HttpClassifier
from .oracle import Classifier
from .retrain import FRACTIONS, MurqConfig, run_murq
from .search import (
    CampaignConfig,
    CampaignReport,
    derive_seed,
    improvement,
    run_campaign,
    summary_rows,
    write_summary_csv,
)
from .toys import ConstantClassifier, KeywordClassifier, LexiconClassifier, SentimentLexicon, distort, hashed_lexicon

log = logging.getLogger("gramdiff")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_GRAMMAR, EXIT_TRANSPORT = 0, 1, 2, 3, 4
FORMATS = ("jsonl", "json", "csv")


class ConfigError(Exception):
    pass


def suite_schema() -> dict:
    text = (resources.files("gramdiff") / "suite_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def resolve_grammar(ref: str, base: Optional[Path] = None) -> Grammar:
    """``builtin:NAME`` for a bundled grammar, anything else is a file path
    (relative to ``base`` when given)."""
    if ref.startswith("builtin:"):
        name = ref[len("builtin:"):]
        try:
            return bundled.load(name)
        except KeyError as exc:
            raise GrammarError(exc.args[0]) from None
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = base / path
    try:
        return load_grammar(path)
    except OSError as exc:
        raise GrammarError(f"cannot read grammar {path}: {exc.strerror}") from None


def grammar_tag(ref: str) -> str:
    return ref[len("builtin:"):] if ref.startswith("builtin:") else Path(ref).stem


def build_classifier(cid: str, entry: dict, base: Path) -> Classifier:
    kind = entry["kind"]
    if kind == "constant":
        return ConstantClassifier(cid, entry["labels"])
    if kind == "keyword":
        return KeywordClassifier(cid, entry["keywords"], entry.get("hit", ["HIT"]), entry.get("miss", ["MISS"]))
    if kind == "lexicon":
        if "lexicon" in entry:
            lex = dict(entry["lexicon"])
        else:
            try:
                vocab = resolve_grammar(entry["vocabulary"], base).terminals
            except GrammarError as exc:
                raise ConfigError(f"classifier {cid}: {exc}") from None
            lex = hashed_lexicon(vocab, entry["labels"], entry.get("salt", cid))
        if "distort" in entry:
            labels = entry.get("labels") or sorted(set(lex.values()))
            lex = distort(lex, labels, entry["distort"]["rate"], entry["distort"].get("salt", cid))
        return LexiconClassifier(cid, lex)
    if kind == "sentiment":
        return SentimentLexicon(cid, entry["weights"], entry.get("scale", 1.0))
    if kind == "model":
        path = Path(entry["path"])
        if not path.is_absolute():
            path = base / path
        try:
            return ModelClassifier(cid, load_model(path))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"classifier {cid}: cannot load model {path}: {exc}") from None
    if kind == "http":
        return HttpClassifier(
            cid, entry["url"], timeout=entry.get("timeout", 10.0), retries=entry.get("retries", 3),
            backoff=entry.get("backoff", 0.5), headers=entry.get("headers"),
        )
    raise ConfigError(f"classifier {cid}: unknown kind {kind!r}")


@dataclass
class PlannedCampaign:
    name: str
    base: str
    grammar_ref: str
    config: CampaignConfig
    repeat: int


def load_suite(path, seed=None, output_dir=None, iterations=None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, suite_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from None
    if seed is not None:
        doc["seed"] = seed
    if output_dir is not None:
        doc["output_dir"] = str(output_dir)
    if iterations is not None:
        for c in doc["campaigns"]:
            c["iterations"] = iterations
    doc.setdefault("seed", 0)
    doc.setdefault("output_dir", "out")
    doc.setdefault("parallelism", 1)
    doc.setdefault("formats", list(FORMATS))
    doc.setdefault("sweep", {})
    names = [c.get("name", f"c{i}") for i, c in enumerate(doc["campaigns"])]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: campaign names must be unique")
    for c in doc["campaigns"]:
        for role in ("f1", "f2"):
            if c[role] not in doc["classifiers"]:
                raise ConfigError(f"{path}: campaign refers to undefined classifier {c[role]!r}")
    return doc


def plan_suite(doc: dict, base: Path) -> List[PlannedCampaign]:
    """Expand campaigns over the sweep axes and repeats.

    Seeds depend only on the suite seed, the campaign's position and the
    repeat, so every strategy, threshold and grammar variant of a campaign
    sees the same seed family and the comparisons are paired.
    """
    classifiers = {cid: build_classifier(cid, entry, base) for cid, entry in doc["classifiers"].items()}
    sweep = doc["sweep"]
    grammar_cache: Dict[str, Grammar] = {}
    planned = []
    for idx, c in enumerate(doc["campaigns"]):
        bname = c.get("name", f"c{idx}")
        grefs = sweep.get("grammars") or [c["grammar"]]
        thresholds = sweep.get("thresholds") or [c["threshold"]]
        strategies = sweep.get("strategies") or [c.get("strategy", "directed")]
        for gref, j, strat in itertools.product(grefs, thresholds, strategies):
            if gref not in grammar_cache:
                grammar_cache[gref] = resolve_grammar(gref, base)
            for rep in range(c.get("repeats", 1)):
                cfg = CampaignConfig(
                    grammar=grammar_cache[gref],
                    f1=classifiers[c["f1"]],
                    f2=classifiers[c["f2"]],
                    threshold=j,
                    iterations=c["iterations"],
                    strategy=strat,
                    seed=derive_seed(doc["seed"], idx, rep),
                    initial_mode=c.get("initial_mode", "any"),
                    max_initial_probes=c.get("max_initial_probes", 100),
                    max_depth=c.get("max_depth", DEFAULT_MAX_DEPTH),
                    strict_perturb=c.get("strict_perturb", False),
                    top_k=c.get("top_k", 5),
                    grammar_name=gref,
                )
                name = f"{bname}__{strat}__{grammar_tag(gref)}__j{j:g}__r{rep}"
                planned.append(PlannedCampaign(name, bname, gref, cfg, rep))
    return planned


COMPARISON_FIELDS = ("name", "grammar", "pair", "threshold", "repeats",
                     "err_r_directed", "err_r_no_backtrack", "err_r_random",
                     "unique_ratio_directed", "imp_pct", "imp_pct_vs_no_backtrack")


def comparison_rows(planned: Sequence[PlannedCampaign], reports: Sequence[CampaignReport]):
    """Mean err_r per strategy for each (campaign, grammar, threshold), with
    the relative improvement of directed search over the baselines."""
    groups: Dict[tuple, Dict[str, list]] = {}
    for p, rep in zip(planned, reports):
        c = rep.config
        key = (p.base, p.grammar_ref, f"{c['f1']}|{c['f2']}", c["threshold"])
        groups.setdefault(key, {}).setdefault(c["strategy"], []).append(rep)
    rows = []
    for (name, gref, pair, j), by_strat in groups.items():
        mean = {s: statistics.mean(r.err_r for r in reps) for s, reps in by_strat.items()}
        row = {
            "name": name, "grammar": gref, "pair": pair, "threshold": j,
            "repeats": max(len(v) for v in by_strat.values()),
            "err_r_directed": mean.get("directed", ""),
            "err_r_no_backtrack": mean.get("no-backtrack", ""),
            "err_r_random": mean.get("random", ""),
            "unique_ratio_directed": (statistics.mean(r.unique_ratio for r in by_strat["directed"])
                                      if "directed" in by_strat else ""),
            "imp_pct": "",
            "imp_pct_vs_no_backtrack": "",
        }
        if "directed" in mean:
            for other, col in (("random", "imp_pct"), ("no-backtrack", "imp_pct_vs_no_backtrack")):
                if other in mean:
                    imp = improvement(mean["directed"], mean[other])
                    row[col] = "" if imp is None else imp
        rows.append(row)
    return rows


def run_suite(doc: dict, base: Path, out=None) -> int:
    out = out or sys.stdout
    planned = plan_suite(doc, base)
    outdir = Path(doc["output_dir"])
    if not outdir.is_absolute():
        outdir = base / outdir
    try:
        (outdir / "campaigns").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {outdir}: {exc.strerror}") from None
    formats = set(doc["formats"])
    log.info("running %d campaigns with parallelism %d", len(planned), doc["parallelism"])

    with ThreadPoolExecutor(max_workers=doc["parallelism"]) as pool:
        reports = list(pool.map(lambda p: run_campaign(p.config), planned))

    # writing happens here, on one thread, after every campaign finished
    for p, rep in zip(planned, reports):
        if "jsonl" in formats:
            rep.write_jsonl(outdir / "campaigns" / f"{p.name}.jsonl")
        if "json" in formats:
            (outdir / "campaigns" / f"{p.name}.json").write_text(rep.to_json(indent=2) + "\n", encoding="utf-8")
    rows = comparison_rows(planned, reports)
    if "csv" in formats:
        with open(outdir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
            write_summary_csv(summary_rows(reports, [p.name for p in planned]), fh)
        with open(outdir / "comparison.csv", "w", encoding="utf-8", newline="") as fh:
            write_summary_csv(rows, fh, COMPARISON_FIELDS)
    partial = [p.name for p, r in zip(planned, reports) if r.partial]
    manifest = {
        "seed": doc["seed"],
        "campaigns": [p.name for p in planned],
        "partial": partial,
        "formats": sorted(formats),
    }
    (outdir / "suite.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    for row in rows:
        cells = [f"{row['name']} {grammar_tag(row['grammar'])} J={row['threshold']:g}"]
        for s in ("directed", "no_backtrack", "random"):
            v = row[f"err_r_{s}"]
            if v != "":
                cells.append(f"{s}={v:.3f}")
        if row["imp_pct"] != "":
            cells.append(f"Imp%={row['imp_pct']:.1f}")
        print("  ".join(cells), file=out)
    if partial:
        for p, r in zip(planned, reports):
            if r.partial:
                print(f"partial: {p.name}: {r.abort_reason}", file=sys.stderr)
        return EXIT_TRANSPORT
    return EXIT_OK


# -- verbs -------------------------------------------------------------------


def cmd_run(args) -> int:
    doc = load_suite(args.config, args.seed, args.output_dir, args.iterations)
    return run_suite(doc, Path(args.config).resolve().parent)


def cmd_gen(args) -> int:
    g = resolve_grammar(args.grammar)
    rng = random.Random(args.seed)
    for k in range(args.n):
        t = generate(g, rng, args.max_depth)
        if args.format == "json":
            print(json.dumps(t.to_dict()))
        elif args.format == "tree":
            if k:
                print()
            print(yield_sentence(t).text)
            print(format_tree(t))
        else:
            print(yield_sentence(t).text)
    return EXIT_OK


def _changed_leaf(a: DerivationTree, b: DerivationTree):
    for (path, la, _), (_, lb, _) in zip(leaves(a), leaves(b)):
        if la.node.text != lb.node.text:
            return path, la.node.text, lb.node.text
    return None


def cmd_perturb(args) -> int:
    g = resolve_grammar(args.grammar)
    rng = random.Random(args.seed)
    if args.tree:
        try:
            with open(args.tree, encoding="utf-8") as fh:
                t = DerivationTree.from_dict(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read tree {args.tree}: {exc}") from None
    else:
        t = generate(g, rng, args.max_depth)
    try:
        p = perturb(t, g, rng, strict=args.strict)
    except CannotPerturb as exc:
        print(f"{yield_sentence(t).text}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    path, old, new = _changed_leaf(t, p)
    if args.json:
        print(json.dumps({"before": t.to_dict(), "after": p.to_dict(), "path": list(path),
                          "old": old, "new": new}))
        return EXIT_OK
    print(f"before: {yield_sentence(t).text}")
    print(f"after:  {yield_sentence(p).text}")
    print(f"leaf:   {list(path)} {old!r} -> {new!r}")
    if args.show_trees:
        print(format_tree(t))
        print(format_tree(p))
    return EXIT_OK


def cmd_validate(args) -> int:
    status = EXIT_OK
    for ref in args.grammars:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                g = resolve_grammar(ref)
            except GrammarError as exc:
                pos = f":{exc.line}:{exc.column}" if exc.line is not None else ""
                print(f"{ref}{pos}: error: {exc.message}")
                status = EXIT_GRAMMAR
                continue
        for w in caught:
            print(f"{ref}: warning: {w.message}")
        perturbable = sum(1 for lhs in g.nonterminals if len(g.single_terminals[lhs]) > 1)
        print(f"{ref}: ok: {len(g.nonterminals)} nonterminals, {len(g.terminals)} terminals, "
              f"min depth {g.min_depth[g.start]}, {perturbable} perturbable nonterminals")
    return status


def cmd_murq(args) -> int:
    cfg = MurqConfig(
        resolve_grammar(args.grammar1), resolve_grammar(args.grammar2), resolve_grammar(args.campaign_grammar),
        train_size=args.train_size, test_size=args.test_size, campaign_size=args.campaign_size,
        repetitions=args.repetitions, fractions=args.fractions, threshold=args.threshold,
        oracle=args.oracle, seed=args.seed, workers=args.workers,
    )
    with warnings.catch_warnings():
        # small runs often have fewer errors than a fraction asks for
        warnings.simplefilter("ignore")
        report = run_murq(cfg)
    text = report.to_csv()
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "murq.csv").write_text(text, encoding="utf-8")
        (out / "murq.json").write_text(report.to_json(indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _fractions(text: str):
    try:
        vals = [float(x) / 100 for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated percentages, e.g. 0,5,15") from None
    if not vals:
        raise argparse.ArgumentTypeError("no fractions given")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gramdiff", description="Grammar-based differential testing of text classifiers.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="More logging (repeat for debug).")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="Run a campaign suite from a JSON config.")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="Override the suite seed.")
    p.add_argument("--output-dir", help="Override the output directory.")
    p.add_argument("--iterations", type=int, help="Override the iteration count of every campaign.")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gen", help="Sample sentences from a grammar.")
    p.add_argument("grammar", help="Grammar file or builtin:NAME.")
    p.add_argument("-n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--format", choices=("text", "tree", "json"), default="text")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("perturb", help="Show one perturbation step.")
    p.add_argument("grammar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tree", help="Tree JSON to perturb instead of a generated one.")
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--strict", action="store_true", help="Give up if the first chosen leaf is fixed.")
    p.add_argument("--show-trees", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_perturb)

    p = sub.add_parser("murq", help="Retraining experiment.")
    p.add_argument("--grammar1", default="builtin:toy1")
    p.add_argument("--grammar2", default="builtin:toy2")
    p.add_argument("--campaign-grammar", default="builtin:toy_mixed")
    p.add_argument("--train-size", type=int, default=200, help="Training sentences per grammar.")
    p.add_argument("--test-size", type=int, default=500, help="Held-out sentences per grammar.")
    p.add_argument("--campaign-size", type=int, default=1000)
    p.add_argument("--repetitions", type=int, default=50)
    p.add_argument("--fractions", type=_fractions, default=list(FRACTIONS),
                   help="Comma-separated percentages of error inputs to add.")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--oracle", choices=("nb", "perceptron"), default="nb")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir")
    p.set_defaults(fn=cmd_murq)

    p = sub.add_parser("validate", help="Lint grammar files.")
    p.add_argument("grammars", nargs="+")
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GrammarError as exc:
        print(f"grammar error: {exc}", file=sys.stderr)
        return EXIT_GRAMMAR
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
