"""Feature assembly for the term ranker and classifier.

Columns come in two kinds. Static columns (statistics, C-value, length
one-hot, average token length) depend on a single instance or on its own
thesis and are computed once. Fold-fitted columns (pattern one-hot, context
certainty) and the standardizer are learned from training instances only.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from termlab.dataset import Instance, Mapping, gold_binary, map_labels
from termlab.errors import InputError
from termlab.learner.context import ContextClassifier
from termlab.stats import c_values

FLAGS = ("base", "freq", "cvalue", "candidate_length", "avg_token_length", "pattern", "context")
MWT_BASE = ("freq", "chisq", "dice", "ll", "mi", "tfidf", "tscore")
SWT_BASE = ("tfidf",)
LENGTHS = (2, 3, 4)


def parse_flags(text) -> frozenset:
    """``"base,pattern"`` or an iterable of names; hyphens and underscores are equivalent."""
    items = text.split(",") if isinstance(text, str) else list(text)
    flags = set()
    for item in items:
        name = item.strip().lower().replace("-", "_")
        if not name:
            continue
        if name not in FLAGS:
            raise InputError(f"unknown feature flag {item.strip()!r} (known: {', '.join(FLAGS)})")
        flags.add(name)
    return frozenset(flags)


@dataclass(frozen=True)
class FeatureConfig:
    subset: str = "MWT"
    flags: frozenset = frozenset({"base"})
    context_window: int = 3

    def __post_init__(self):
        object.__setattr__(self, "subset", self.subset.upper())
        object.__setattr__(self, "flags", parse_flags(self.flags))
        if self.subset not in ("MWT", "SWT"):
            raise ValueError(f"unknown subset {self.subset!r}")

    def static_columns(self) -> list[str]:
        cols: list[str] = []
        if "base" in self.flags:
            if self.subset == "MWT":
                cols.extend(MWT_BASE)
                if "cvalue" in self.flags:
                    cols.append("cvalue")
            else:
                cols.extend(SWT_BASE)
                if "freq" in self.flags:
                    cols.append("freq")
        else:
            if "freq" in self.flags:
                cols.append("freq")
            if "cvalue" in self.flags:
                cols.append("cvalue")
        if "candidate_length" in self.flags:
            cols.extend(f"length={k}" for k in LENGTHS)
        if "avg_token_length" in self.flags:
            cols.append("avg_token_length")
        return cols


def avg_token_length(surface: str) -> float:
    tokens = surface.split()
    return sum(len(t) for t in tokens) / len(tokens) if tokens else 0.0


def static_features(instances: Sequence[Instance], config: FeatureConfig) -> np.ndarray:
    """Instance-local columns. ``instances`` must hold complete theses when C-value is used."""
    cols = config.static_columns()
    cvals = c_values(instances) if "cvalue" in cols else None
    out = np.zeros((len(instances), len(cols)))
    for r, inst in enumerate(instances):
        for c, name in enumerate(cols):
            if name == "cvalue":
                v = cvals[r]
            elif name == "avg_token_length":
                v = avg_token_length(inst.surface_seq)
            elif name.startswith("length="):
                v = float(inst.length == int(name[7:]))
            else:
                v = inst.stat(name)
            if v is None:
                raise InputError(f"instance {inst.thesis_id}/{inst.lemma_seq!r} lacks {name!r}")
            out[r, c] = v
    if not np.isfinite(out).all():
        raise InputError("non-finite feature values")
    return out


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        # constant columns map to 0
        std = np.where(std > 1e-12 * np.maximum(1.0, np.abs(mean)), std, 1.0)
        return cls(mean, std)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def fit_standardizer(train) -> Standardizer:
    return Standardizer.fit(train)


def oversample_indices(instances: Sequence[Instance], mapping: Mapping) -> list[int]:
    """Originals in order, then one extra copy of every unanimously labelled instance."""
    unanimous = [i for i, inst in enumerate(instances) if len(set(map_labels(inst, mapping))) == 1]
    return list(range(len(instances))) + unanimous


def oversample(instances: Sequence[Instance], mapping: Mapping) -> list[Instance]:
    return [instances[i] for i in oversample_indices(instances, mapping)]


@dataclass
class FoldFeaturizer:
    """Feature space whose data-dependent parts are fitted on one training fold."""

    config: FeatureConfig
    corpus: object = None
    context_C: float = 1.0
    patterns: list[str] = field(default_factory=list)
    context: ContextClassifier | None = None
    standardizer: Standardizer | None = None

    @property
    def names(self) -> list[str]:
        names = self.config.static_columns()
        if "pattern" in self.config.flags:
            names += [f"pattern={p}" for p in self.patterns]
        if "context" in self.config.flags:
            names.append("context")
        return names

    def fit(self, train: Sequence[Instance], train_static: np.ndarray) -> "FoldFeaturizer":
        if "pattern" in self.config.flags:
            self.patterns = sorted({inst.pattern for inst in train})
        if "context" in self.config.flags:
            keys = [(inst.thesis_id, inst.lemma_seq) for inst in train]
            gold = [gold_binary(inst, Mapping.INCLUSIVE) for inst in train]
            self.context = ContextClassifier(self.corpus, self.config.context_window,
                                             C=self.context_C).fit(keys, gold)
        self.standardizer = Standardizer.fit(self._raw(train, train_static))
        return self

    def _raw(self, instances: Sequence[Instance], static: np.ndarray) -> np.ndarray:
        parts = [np.asarray(static, dtype=np.float64).reshape(len(instances), -1)]
        if "pattern" in self.config.flags:
            col = {p: j for j, p in enumerate(self.patterns)}
            onehot = np.zeros((len(instances), len(self.patterns)))
            for r, inst in enumerate(instances):
                j = col.get(inst.pattern)
                if j is not None:
                    onehot[r, j] = 1.0
            parts.append(onehot)
        if "context" in self.config.flags:
            keys = [(inst.thesis_id, inst.lemma_seq) for inst in instances]
            parts.append(self.context.certainty(keys).reshape(-1, 1))
        return np.hstack(parts)

    def transform(self, instances: Sequence[Instance], static: np.ndarray) -> np.ndarray:
        if self.standardizer is None:
            raise RuntimeError("featurizer is not fitted")
        return self.standardizer.apply(self._raw(instances, static))

    def artifacts(self) -> dict:
        out = {"names": self.names, "patterns": list(self.patterns)}
        if self.standardizer is not None:
            out["mean"] = np.round(self.standardizer.mean, 10).tolist()
            out["std"] = np.round(self.standardizer.std, 10).tolist()
        if self.context is not None:
            out["context"] = self.context.artifacts()
        return out

    def to_dict(self) -> dict:
        return {"config": {"subset": self.config.subset, "flags": sorted(self.config.flags),
                           "context_window": self.config.context_window},
                **self.artifacts()}


def assemble_features(instances: Sequence[Instance], config: FeatureConfig,
                      fold_context: FoldFeaturizer, static: np.ndarray | None = None) -> np.ndarray:
    """Standardized feature rows for ``instances`` in a fitted fold's feature space."""
    if static is None:
        static = static_features(instances, config)
    return fold_context.transform(instances, static)


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()
