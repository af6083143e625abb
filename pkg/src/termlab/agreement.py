"""Inter-annotator agreement: Fleiss' kappa and pairwise observed agreement."""

from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import Hashable, Sequence

import numpy as np

from termlab.dataset import AnnotationLabel, Dataset, Mapping, map_labels
from termlab.errors import NumericalError

AGREEMENT_COLUMNS = ("scope", "kappa", "avg", "min", "max", "items")


def rating_matrix(items: Sequence[Sequence[Hashable]], categories: Sequence[Hashable] | None = None
                  ) -> np.ndarray:
    """Turn per-item label lists into an items x categories count matrix."""
    if categories is None:
        categories = sorted({lab for row in items for lab in row}, key=repr)
    col = {c: j for j, c in enumerate(categories)}
    m = np.zeros((len(items), len(categories)), dtype=np.int64)
    for i, row in enumerate(items):
        for lab in row:
            m[i, col[lab]] += 1
    return m


def fleiss_kappa(m) -> float:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("rating matrix must be a non-empty 2-D array")
    if m.shape[1] < 2:
        raise ValueError("need at least 2 categories")
    if (m < 0).any():
        raise ValueError("negative rating counts")
    raters = m.sum(axis=1)
    r = int(raters[0])
    if r < 2 or (raters != r).any():
        raise ValueError("every item must be rated by the same number (>= 2) of raters")
    n_items = m.shape[0]
    m = m.astype(np.float64)
    p_item = ((m * m).sum(axis=1) - r) / (r * (r - 1))
    p_bar = p_item.mean()
    p_cat = m.sum(axis=0) / (n_items * r)
    p_e = float((p_cat * p_cat).sum())
    if p_bar == 1.0:
        return 1.0
    if p_e == 1.0:
        raise NumericalError("Fleiss kappa undefined: expected agreement is 1")
    return float((p_bar - p_e) / (1.0 - p_e))


def pairwise_observed(labels: Sequence[Sequence[Hashable]]) -> dict[str, float]:
    """Share of items on which each rater pair agrees, summarised over pairs."""
    if not labels:
        raise ValueError("no items")
    r = len(labels[0])
    if r < 2 or any(len(row) != r for row in labels):
        raise ValueError("every item needs the same number (>= 2) of labels")
    shares = []
    for a, b in combinations(range(r), 2):
        shares.append(sum(row[a] == row[b] for row in labels) / len(labels))
    return {"avg": sum(shares) / len(shares), "min": min(shares), "max": max(shares)}


def _item_labels(instances, mapping: Mapping | None):
    if mapping is None:
        return [inst.labels for inst in instances]
    return [map_labels(inst, mapping) for inst in instances]


def agreement_row(scope: str, instances, mapping: Mapping | None = None) -> dict:
    labels = _item_labels(instances, mapping)
    cats = list(AnnotationLabel) if mapping is None else [0, 1]
    obs = pairwise_observed(labels)
    return {"scope": scope, "kappa": fleiss_kappa(rating_matrix(labels, cats)),
            **obs, "items": len(labels)}


def agreement_table(ds: Dataset, mapping: Mapping | None = None,
                    by_round: bool = False) -> list[dict]:
    """Per-area rows followed by an ``Overall`` row.

    With ``by_round`` each area is further split into ``<area>/round <k>``
    rows. ``mapping`` switches from the four categories to binarized labels.
    """
    groups = defaultdict(list)
    for inst in ds:
        groups[inst.area].append(inst)
    rows = []
    for area in sorted(groups):
        if by_round:
            rounds = defaultdict(list)
            for inst in groups[area]:
                rounds[inst.round].append(inst)
            for k in sorted(rounds):
                rows.append(agreement_row(f"{area}/round {k}", rounds[k], mapping))
        rows.append(agreement_row(area, groups[area], mapping))
    rows.append(agreement_row("Overall", list(ds), mapping))
    return rows
