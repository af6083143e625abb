"""Ranking and classification evaluation with leave-one-thesis-out folds.

Overall metrics pool the held-out predictions of every thesis; per-area
metrics pool the theses of that area. Nothing is macro-averaged.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from termlab.dataset import Dataset, Mapping, average_annotation, gold_binary
from termlab.errors import InputError
from termlab.learner import (
    CLASSIFICATION,
    REGRESSION,
    FeatureConfig,
    FoldFeaturizer,
    KernelSpec,
    LearnerConfig,
    oversample_indices,
    smo_train,
    static_features,
)
from termlab.learner.features import digest

OVERALL = "Overall"
DEFAULT_CURVE_SIZES = (100, 200, 400, 800, 1600, 3200, None)


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    threshold: float


def _check_binary(scores, gold):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    gold = np.asarray(gold).ravel()
    if scores.shape != gold.shape:
        raise ValueError("scores and gold differ in length")
    if not np.isin(gold, (0, 1)).all():
        raise ValueError("gold labels must be 0/1")
    n_pos = int(gold.sum())
    if n_pos == 0 or n_pos == len(gold):
        raise ValueError("AUC needs at least one positive and one negative")
    return scores, gold.astype(bool), n_pos, len(gold) - n_pos


def auc(scores, gold) -> float:
    """Mann-Whitney AUC with average ranks for tied scores."""
    scores, gold, n_pos, n_neg = _check_binary(scores, gold)
    ranks = rankdata(scores, method="average")
    r_pos = ranks[gold].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_points(scores, gold) -> list[RocPoint]:
    """Threshold sweep from ``+inf`` (nothing predicted positive) downwards.

    One point per distinct score, so tied scores move diagonally and the
    trapezoidal area equals :func:`auc`.
    """
    scores, gold, n_pos, n_neg = _check_binary(scores, gold)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    g = gold[order]
    tps = np.cumsum(g)
    fps = np.cumsum(~g)
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    points = [RocPoint(0.0, 0.0, math.inf)]
    points += [RocPoint(fps[k] / n_neg, tps[k] / n_pos, float(s[k])) for k in last]
    return points


def roc_area(points: Sequence[RocPoint]) -> float:
    x = np.array([p.fpr for p in points])
    y = np.array([p.tpr for p in points])
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def prf1(pred, gold) -> tuple[float, float, float]:
    pred = np.asarray(pred).astype(bool).ravel()
    gold = np.asarray(gold).astype(bool).ravel()
    if pred.shape != gold.shape:
        raise ValueError("pred and gold differ in length")
    tp = int((pred & gold).sum())
    n_pred, n_gold = int(pred.sum()), int(gold.sum())
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class EvalReport:
    """Metrics per scope (each area, then ``Overall``) plus pooled predictions."""

    task: str
    name: str
    subset: str
    mapping: str
    rows: list[dict] = field(default_factory=list)
    folds: list[dict] = field(default_factory=list)
    scores: np.ndarray | None = None
    gold: np.ndarray | None = None
    areas: list[str] = field(default_factory=list)
    models: dict = field(default_factory=dict, repr=False)

    def metric(self, scope: str, name: str) -> float:
        for row in self.rows:
            if row["scope"] == scope and row["metric"] == name:
                return row["value"]
        raise KeyError((scope, name))

    @property
    def scopes(self) -> list[str]:
        return sorted(set(self.areas)) + [OVERALL]


def _scoped_rows(report: EvalReport, scores, gold, areas, task: str):
    areas = np.asarray(areas, dtype=object)
    for scope in sorted(set(areas)) + [OVERALL]:
        mask = np.ones(len(areas), bool) if scope == OVERALL else areas == scope
        s, g = scores[mask], gold[mask]
        if task == "rank":
            try:
                value = auc(s, g)
            except ValueError:
                value = float("nan")
            report.rows.append({"scope": scope, "metric": "auc", "value": value, "n": int(mask.sum())})
        else:
            p, r, f = prf1(s > 0, g)
            for metric, value in (("precision", p), ("recall", r), ("f1", f)):
                report.rows.append({"scope": scope, "metric": metric, "value": value,
                                    "n": int(mask.sum())})


def single_statistic_rank(ds: Dataset, statistic: str, subset: str = "MWT",
                          mapping: Mapping = Mapping.EXCLUSIVE) -> EvalReport:
    """AUC of ranking by a raw statistic column; no learning involved."""
    sub = ds.subset(subset)
    if statistic == "cvalue":
        scores = static_features(sub.instances, FeatureConfig(subset, {"cvalue"}))[:, 0]
    else:
        values = [inst.stat(statistic) for inst in sub]
        if any(v is None for v in values):
            raise InputError(f"statistic {statistic!r} is missing for some {subset} instances")
        scores = np.asarray(values, dtype=np.float64)
    gold = np.array([gold_binary(inst, mapping) for inst in sub])
    areas = [inst.area for inst in sub]
    report = EvalReport("rank", statistic, subset, mapping.value, scores=scores, gold=gold,
                        areas=areas)
    _scoped_rows(report, scores, gold, areas, "rank")
    return report


@dataclass(frozen=True)
class FoldSpec:
    task: str
    mapping: Mapping
    features: FeatureConfig
    learner: LearnerConfig
    oversample: bool = False


@dataclass
class FoldResult:
    thesis: str
    test_index: np.ndarray
    scores: np.ndarray
    n_train: int
    artifacts_digest: str
    model_digest: str
    featurizer: FoldFeaturizer | None = None
    model: object = None


def fit_fold(instances: Sequence, static: np.ndarray, train_index: Sequence[int], spec: FoldSpec,
             corpus=None):
    """Fit the featurizer and SVM on the given training rows only.

    Returns ``(featurizer, model)``. This is the only place fold-specific
    state is learned, so test rows can never influence it.
    """
    train_index = list(train_index)
    if spec.oversample:
        base = [instances[i] for i in train_index]
        train_index = [train_index[k] for k in oversample_indices(base, spec.mapping)]
    train = [instances[i] for i in train_index]
    feat = FoldFeaturizer(spec.features, corpus, context_C=spec.learner.context_C)
    feat.fit(train, static[train_index])
    x = feat.transform(train, static[train_index])
    lc = spec.learner
    kernel = KernelSpec("rbf", lc.gamma)
    if spec.task == "rank":
        y = np.array([average_annotation(inst, spec.mapping) for inst in train])
        model = smo_train(x, y, REGRESSION, kernel, C=lc.C, epsilon=lc.epsilon, tol=lc.tol,
                          cache_rows=lc.cache_rows)
    else:
        y = np.array([gold_binary(inst, spec.mapping) for inst in train])
        if len(np.unique(y)) < 2:
            raise InputError("training fold contains a single class")
        model = smo_train(x, y, CLASSIFICATION, kernel, C=lc.C, tol=lc.tol,
                          cache_rows=lc.cache_rows)
    return feat, model


def _model_digest(model) -> str:
    return digest({"gamma": model.kernel.gamma, "bias": round(model.bias, 8),
                   "coef": np.round(model.dual_coef, 8).tolist(),
                   "sv": np.round(np.asarray(model.support_vectors), 8).tolist()})


def run_fold(instances, static, thesis: str, spec: FoldSpec, corpus=None,
             train_size: int | None = None, seed: int = 42, fold_no: int = 0,
             repeat: int = 0, keep_models: bool = False) -> FoldResult:
    theses = np.array([inst.thesis_id for inst in instances], dtype=object)
    train_index = np.flatnonzero(theses != thesis)
    test_index = np.flatnonzero(theses == thesis)
    if train_size is not None and train_size < len(train_index):
        rng = np.random.default_rng([seed, train_size, fold_no, repeat])
        train_index = np.sort(rng.choice(train_index, size=train_size, replace=False))
    feat, model = fit_fold(instances, static, train_index, spec, corpus)
    test = [instances[i] for i in test_index]
    scores = model.decision_function(feat.transform(test, static[test_index]))
    return FoldResult(thesis, test_index, scores, len(train_index), digest(feat.artifacts()),
                      _model_digest(model), feat if keep_models else None,
                      model if keep_models else None)


def _run_folds(instances, static, spec, corpus, jobs, train_size=None, seed=42, repeat=0,
               keep_models=False):
    theses = sorted({inst.thesis_id for inst in instances})
    if len(theses) < 2:
        raise InputError("leave-one-thesis-out needs at least 2 theses")
    args = [(instances, static, t, spec, corpus, train_size, seed, k, repeat, keep_models)
            for k, t in enumerate(theses)]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            return list(pool.map(_run_fold_star, args))
    return [run_fold(*a) for a in args]


def _run_fold_star(a):
    return run_fold(*a)


def loto_cv(ds: Dataset, task: str = "classify", subset: str = "MWT",
            mapping: Mapping = Mapping.INCLUSIVE, features=frozenset({"base"}),
            learner_config: LearnerConfig = LearnerConfig(), corpus=None,
            oversample: bool = False, jobs: int | None = 1, name: str | None = None,
            train_size: int | None = None, seed: int = 42, repeat: int = 0,
            keep_models: bool = False) -> EvalReport:
    """Leave-one-thesis-out cross-validation.

    ``task="rank"`` trains an epsilon-SVR on average annotations and reports
    AUC of its decision values; ``task="classify"`` trains an SVM classifier
    on majority gold and reports precision/recall/F1 of the positive class.
    """
    if task not in ("rank", "classify"):
        raise ValueError(f"unknown task {task!r}")
    sub = ds.subset(subset)
    fconf = features if isinstance(features, FeatureConfig) else FeatureConfig(subset, features)
    if "context" in fconf.flags and corpus is None:
        raise InputError("the context feature needs a corpus")
    instances = list(sub.instances)
    static = static_features(instances, fconf)
    spec = FoldSpec(task, mapping, fconf, learner_config, oversample)
    results = _run_folds(instances, static, spec, corpus, jobs, train_size, seed, repeat,
                         keep_models)

    scores = np.empty(len(instances))
    for res in results:
        scores[res.test_index] = res.scores
    gold = np.array([gold_binary(inst, mapping) for inst in instances])
    areas = [inst.area for inst in instances]
    report = EvalReport(task, name or ",".join(sorted(fconf.flags)), subset, mapping.value,
                        scores=scores, gold=gold, areas=areas)
    thesis_area = sub.thesis_area()
    for res in results:
        report.folds.append({"thesis": res.thesis, "area": thesis_area[res.thesis],
                             "n_train": res.n_train, "n_test": len(res.test_index),
                             "artifacts": res.artifacts_digest, "model": res.model_digest})
        if keep_models:
            report.models[res.thesis] = (res.featurizer, res.model)
    _scoped_rows(report, scores, gold, areas, task)
    return report


def learning_curve(ds: Dataset, sizes: Sequence[int | None] = DEFAULT_CURVE_SIZES,
                   mapping: Mapping = Mapping.INCLUSIVE, subset: str = "MWT",
                   learner_config: LearnerConfig = LearnerConfig(), features=frozenset({"base"}),
                   seed: int = 42, repeats: int = 5, jobs: int | None = 1) -> list[dict]:
    """Positive-class F1 per area when each fold trains on ``s`` sampled instances.

    ``None`` in ``sizes`` stands for the full training folds. Points are the
    mean over ``repeats`` seeded subsamples; a size at least as large as a
    fold's training set uses that fold unchanged, so the full-data point is
    exactly the :func:`loto_cv` result.
    """
    sub = ds.subset(subset)
    theses = sub.theses
    train_sizes = [sum(1 for i in sub if i.thesis_id != t) for t in theses]
    max_train = max(train_sizes)
    concrete = [s for s in sizes if s is not None]
    if concrete != sorted(concrete):
        raise InputError("learning-curve sizes must be ascending")
    if any(s < 2 or s > max_train for s in concrete):
        raise InputError(f"learning-curve sizes must lie in [2, {max_train}]")
    rows = []
    for size in sizes:
        reps = 1 if size is None or size >= max_train else repeats
        per_scope: dict[str, list[float]] = {}
        for rep in range(reps):
            rep_report = loto_cv(sub, "classify", subset, mapping, features, learner_config,
                                 jobs=jobs, train_size=size, seed=seed, repeat=rep)
            for scope in rep_report.scopes:
                per_scope.setdefault(scope, []).append(rep_report.metric(scope, "f1"))
        for scope, values in per_scope.items():
            rows.append({"size": "all" if size is None else size, "scope": scope,
                         "f1": float(np.mean(values)), "repeats": reps})
    return rows
