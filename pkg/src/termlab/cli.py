"""Command-line interface.

Subcommands write CSV (and optional SVG) files under ``--out-dir``. Option
values are resolved as command-line flag > ``--config`` file > built-in
default. A config file holds ``key = value`` lines whose keys are option
names without the leading dashes (``min-freq = 2``, ``C = 10``).

Exit codes: 0 success, 2 input or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from termlab import __version__
from termlab.agreement import AGREEMENT_COLUMNS, agreement_table
from termlab.corpus import read_vertical
from termlab.dataset import Mapping, label_distribution, load_header_map, read_dataset
from termlab.errors import InputError, NumericalError
from termlab.evaluation import (
    DEFAULT_CURVE_SIZES,
    OVERALL,
    learning_curve,
    loto_cv,
    roc_points,
    single_statistic_rank,
)
from termlab.learner import LearnerConfig, parse_flags
from termlab.learner.persist import save_model
from termlab.patterns import extract_corpus, read_candidates_csv, read_pattern_file
from termlab.report import svg_line_plot, write_atomic, write_csv
from termlab.stats import score_all

log = logging.getLogger("termlab")

MWT_STATS = ("freq", "chisq", "dice", "ll", "mi", "tfidf", "tscore", "cvalue")
SWT_STATS = ("freq", "tfidf")
SCORED_COLUMNS = ("doc_id", "area", "lemma_seq", "surface_seq", "pattern_id", "length",
                  "freq", "tfidf", "chisq", "dice", "mi", "tscore", "ll")


def _existing_file(value: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise InputError(f"no such file: {value}")
    return path


def _mapping(value: str):
    if value in ("none", "", None):
        return None
    try:
        return Mapping(value.lower())
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown mapping {value!r}") from None


def _bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {value!r}")


def read_config(path) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}", source=path) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError("expected key = value", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file with option defaults")
    p.add_argument("--out-dir", default="termlab-out", help="directory for all outputs")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel cross-validation folds (default: CPU count)")
    p.add_argument("-v", "--verbose", action="store_true")


def _dataset_args(p):
    p.add_argument("--dataset", required=True, help="annotated candidate dataset (CSV or JSON)")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="dataset format (default: from file extension)")
    p.add_argument("--header-map", help="canonical=published column name file")


def _learner_args(p):
    p.add_argument("--C", dest="C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None,
                   help="RBF width (default: 1 / (d * Var(X)) on the training fold)")
    p.add_argument("--epsilon", type=float, default=0.1, help="SVR tube width")
    p.add_argument("--tol", type=float, default=1e-3, help="SMO KKT tolerance")
    p.add_argument("--cache-rows", type=int, default=1024, help="kernel rows kept in cache")
    p.add_argument("--save-models", action="store_true", help="write per-fold model JSON files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="termlab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"termlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract term candidates with MSD patterns")
    _common(p)
    p.add_argument("--corpus", required=True, help="vertical corpus (.gz accepted)")
    p.add_argument("--patterns", required=True, help="pattern file")
    p.add_argument("--min-freq", type=int, default=3)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="compute termhood statistics for candidates")
    _common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True, help="CSV written by 'extract'")
    p.add_argument("--cvalue", action="store_true", help="add a C-value column")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("agreement", help="inter-annotator agreement table")
    _common(p)
    _dataset_args(p)
    p.add_argument("--mapping", type=_mapping, default=None,
                   help="none (4 categories), exclusive or inclusive")
    p.add_argument("--by-round", action="store_true")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("rank", help="AUC of single statistics or the SVR combination")
    _common(p)
    _dataset_args(p)
    _learner_args(p)
    p.add_argument("--stat", default=None,
                   help="comma list of statistics and/or 'all' (default: every statistic "
                        "of the subset plus 'all')")
    p.add_argument("--subset", choices=("MWT", "SWT"), default="MWT", type=str.upper)
    p.add_argument("--mapping", type=_mapping, default=Mapping.EXCLUSIVE)
    p.add_argument("--cvalue", action="store_true", help="add C-value to the 'all' combiner")
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("classify", help="leave-one-thesis-out SVM classification")
    _common(p)
    _dataset_args(p)
    _learner_args(p)
    p.add_argument("--features", action="append", default=None,
                   help="comma list from base, freq, cvalue, candidate-length, "
                        "avg-token-length, pattern, context, oversample; repeat for "
                        "several variants (default: base)")
    p.add_argument("--subset", choices=("MWT", "SWT"), default="MWT", type=str.upper)
    p.add_argument("--mapping", action="append", type=_mapping, default=None,
                   help="exclusive or inclusive; repeatable (default: inclusive)")
    p.add_argument("--corpus", help="vertical corpus, needed by the context feature")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("learning-curve", help="F1 as a function of training-set size")
    _common(p)
    _dataset_args(p)
    _learner_args(p)
    p.add_argument("--sizes", default=None,
                   help="comma list of sizes, 'all' for the full folds "
                        "(default: 100,200,400,800,1600,3200,all)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--subset", choices=("MWT", "SWT"), default="MWT", type=str.upper)
    p.add_argument("--mapping", type=_mapping, default=Mapping.INCLUSIVE)
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=cmd_learning_curve)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = read_config(known.config)
        sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        for subparser in sub_action.choices.values():
            dests = {a.dest: a for a in subparser._actions}
            defaults = {}
            for key, value in values.items():
                action = dests.get(key)
                if action is None:
                    continue
                if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                    defaults[key] = _bool(value)
                elif isinstance(action, argparse._AppendAction):
                    defaults[key] = [v.strip() if action.type is None else action.type(v.strip())
                                     for v in value.split(";")]
                else:
                    defaults[key] = value
            subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _learner_config(args) -> LearnerConfig:
    return LearnerConfig(C=args.C, gamma=args.gamma, epsilon=args.epsilon, tol=args.tol,
                         cache_rows=args.cache_rows)


def _load_dataset(args):
    hmap = load_header_map(_existing_file(args.header_map)) if args.header_map else None
    return read_dataset(_existing_file(args.dataset), args.format, hmap)


def cmd_extract(args) -> list[Path]:
    corpus_path = _existing_file(args.corpus)
    pattern_path = _existing_file(args.patterns)
    if args.min_freq < 1:
        raise InputError("--min-freq must be >= 1")
    patterns = read_pattern_file(pattern_path)
    corpus = read_vertical(corpus_path)
    cands = extract_corpus(corpus, patterns, args.min_freq)
    rows = [{"doc_id": c.doc_id, "area": c.area, "lemma_seq": c.lemma_seq,
             "surface_seq": c.surface_seq, "pattern_id": c.pattern_id, "length": c.length,
             "freq": c.freq} for c in cands]
    log.info("%d candidates from %d documents", len(cands), len(corpus))
    out = write_csv(Path(args.out_dir) / "candidates.csv", list(rows[0]) if rows else
                    ["doc_id", "area", "lemma_seq", "surface_seq", "pattern_id", "length", "freq"],
                    rows)
    return [out]


def cmd_score(args) -> list[Path]:
    corpus_path = _existing_file(args.corpus)
    cand_path = _existing_file(args.candidates)
    corpus = read_vertical(corpus_path)
    with open(cand_path, encoding="utf-8", newline="") as fh:
        cands = read_candidates_csv(fh, source=cand_path)
    for c in cands:
        if c.doc_id not in corpus:
            raise InputError(f"candidate document {c.doc_id!r} is not in the corpus")
    scored = score_all(corpus, cands)
    columns = list(SCORED_COLUMNS) + (["cvalue"] if args.cvalue else [])
    rows = []
    for c in cands:
        st = scored[c].as_dict()
        rows.append({"doc_id": c.doc_id, "area": c.area, "lemma_seq": c.lemma_seq,
                     "surface_seq": c.surface_seq, "pattern_id": c.pattern_id,
                     "length": c.length, **st})
    return [write_csv(Path(args.out_dir) / "scored.csv", columns, rows)]


def cmd_agreement(args) -> list[Path]:
    ds = _load_dataset(args)
    rows = agreement_table(ds, args.mapping, args.by_round)
    name = "agreement" if args.mapping is None else f"agreement-{args.mapping.value}"
    out = [write_csv(Path(args.out_dir) / f"{name}.csv", AGREEMENT_COLUMNS, rows)]
    out.append(write_csv(Path(args.out_dir) / "label_distribution.csv",
                         ("area", "label", "count", "proportion"), label_distribution(ds)))
    return out


def _save_models(report, out_dir: Path, name: str):
    for thesis, (feat, model) in sorted(report.models.items()):
        save_model(out_dir / "models" / name / f"{thesis}.json", feat, model)


def cmd_rank(args) -> list[Path]:
    ds = _load_dataset(args)
    mapping = args.mapping or Mapping.EXCLUSIVE
    if args.stat:
        names = [s.strip() for s in args.stat.split(",") if s.strip()]
    else:
        names = list(MWT_STATS if args.subset == "MWT" else SWT_STATS) + ["all"]
    allowed = set(MWT_STATS if args.subset == "MWT" else SWT_STATS) | {"all"}
    bad = [s for s in names if s not in allowed]
    if bad:
        raise InputError(f"unknown statistic(s) for {args.subset}: {', '.join(bad)}")
    out_dir = Path(args.out_dir)
    auc_rows, roc_rows, curves = [], [], {}
    for name in names:
        if name == "all":
            flags = {"base", "freq"} | ({"cvalue"} if args.cvalue else set())
            label = "all+cv" if args.cvalue else "all"
            report = loto_cv(ds, "rank", args.subset, mapping, flags, _learner_config(args),
                             jobs=args.jobs, name=label, seed=args.seed,
                             keep_models=args.save_models)
            if args.save_models:
                _save_models(report, out_dir, label)
        else:
            report = single_statistic_rank(ds, name, args.subset, mapping)
        for row in report.rows:
            auc_rows.append({"statistic": report.name, "subset": args.subset,
                             "mapping": mapping.value, "scope": row["scope"], "auc": row["value"],
                             "n": row["n"]})
        points = roc_points(report.scores, report.gold)
        curves[report.name] = [(p.fpr, p.tpr) for p in points]
        roc_rows += [{"statistic": report.name, "fpr": p.fpr, "tpr": p.tpr,
                      "threshold": p.threshold} for p in points]
        log.info("%s overall AUC %.3f", report.name, report.metric(OVERALL, "auc"))
    out = [write_csv(out_dir / "auc.csv", ("statistic", "subset", "mapping", "scope", "auc", "n"),
                     auc_rows),
           write_csv(out_dir / "roc.csv", ("statistic", "fpr", "tpr", "threshold"), roc_rows)]
    if not args.no_svg:
        curves["baseline"] = [(0.0, 0.0), (1.0, 1.0)]
        svg = svg_line_plot(curves, f"ROC ({args.subset}, {mapping.value})", "FPR", "TPR",
                            (0, 1), (0, 1), dashed=("baseline",))
        out.append(write_atomic(out_dir / "roc.svg", svg))
    return out


def cmd_classify(args) -> list[Path]:
    ds = _load_dataset(args)
    variants = args.features or ["base"]
    mappings = [m for m in (args.mapping or [Mapping.INCLUSIVE]) if m is not None]
    corpus = read_vertical(_existing_file(args.corpus)) if args.corpus else None
    parsed = []
    for v in variants:
        names = [s.strip().lower().replace("-", "_") for s in v.split(",") if s.strip()]
        over = "oversample" in names
        flags = parse_flags([n for n in names if n != "oversample"])
        if "context" in flags and corpus is None:
            raise InputError("the context feature needs --corpus")
        parsed.append((v, flags, over))
    rows = []
    out_dir = Path(args.out_dir)
    for mapping in mappings:
        for label, flags, over in parsed:
            report = loto_cv(ds, "classify", args.subset, mapping, flags, _learner_config(args),
                             corpus=corpus, oversample=over, jobs=args.jobs, name=label,
                             seed=args.seed, keep_models=args.save_models)
            if args.save_models:
                _save_models(report, out_dir, f"{mapping.value}-{label.replace(',', '+')}")
            for scope in report.scopes:
                rows.append({"features": label, "subset": args.subset, "mapping": mapping.value,
                             "scope": scope,
                             "precision": report.metric(scope, "precision"),
                             "recall": report.metric(scope, "recall"),
                             "f1": report.metric(scope, "f1")})
            log.info("%s/%s overall F1 %.3f", mapping.value, label, report.metric(OVERALL, "f1"))
    return [write_csv(out_dir / "classify.csv",
                      ("features", "subset", "mapping", "scope", "precision", "recall", "f1"),
                      rows)]


def _parse_sizes(text):
    if not text:
        return list(DEFAULT_CURVE_SIZES)
    sizes = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        if item == "all":
            sizes.append(None)
        else:
            try:
                sizes.append(int(item))
            except ValueError:
                raise InputError(f"bad size {item!r}") from None
    return sizes


def cmd_learning_curve(args) -> list[Path]:
    ds = _load_dataset(args)
    sizes = _parse_sizes(args.sizes)
    if None not in sizes:
        sizes.append(None)
    rows = learning_curve(ds, sizes, args.mapping or Mapping.INCLUSIVE, args.subset,
                          _learner_config(args), seed=args.seed, repeats=args.repeats,
                          jobs=args.jobs)
    full = {r["scope"]: r["f1"] for r in rows if r["size"] == "all"}
    for r in rows:
        r["full_f1"] = full[r["scope"]]
    out_dir = Path(args.out_dir)
    out = [write_csv(out_dir / "learning_curve.csv",
                     ("size", "scope", "f1", "full_f1", "repeats"), rows)]
    if not args.no_svg:
        series, dashed = {}, []
        numeric = [r for r in rows if r["size"] != "all"]
        xmax = max((r["size"] for r in numeric), default=1)
        for scope in sorted(full):
            series[scope] = [(r["size"], r["f1"]) for r in numeric if r["scope"] == scope]
            series[f"{scope} (full)"] = [(0, full[scope]), (xmax, full[scope])]
            dashed.append(f"{scope} (full)")
        svg = svg_line_plot(series, "Learning curves", "training instances", "F1",
                            ylim=(0, 1), dashed=dashed)
        out.append(write_atomic(out_dir / "learning_curve.svg", svg))
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except InputError as exc:
        print(f"termlab: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        outputs = args.func(args)
    except InputError as exc:
        print(f"termlab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"termlab: numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in outputs:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
