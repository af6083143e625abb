"""JSON persistence of a trained fold model.

Layout::

    {
      "format": "termlab-model/1",
      "features": {"config": {...}, "names": [...], "patterns": [...],
                   "mean": [...], "std": [...], "context": {...}},
      "svm": {"task": ..., "kernel": {"kind": "rbf", "gamma": g},
              "support_vectors": [[...], ...], "dual_coef": [...], "bias": b}
    }

Support vectors live in the standardized feature space; apply
``(x - mean) / std`` to raw features in ``names`` order before predicting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from termlab.learner.features import FoldFeaturizer, Standardizer
from termlab.learner.smo import SvmModel

FORMAT = "termlab-model/1"


def model_to_dict(featurizer: FoldFeaturizer, model: SvmModel) -> dict:
    return {"format": FORMAT, "features": featurizer.to_dict(), "svm": model.to_dict()}


def save_model(path, featurizer: FoldFeaturizer, model: SvmModel) -> None:
    from termlab.report import write_atomic

    write_atomic(path, json.dumps(model_to_dict(featurizer, model), indent=1, sort_keys=True) + "\n")


def load_model(path) -> tuple[list[str], Standardizer, SvmModel]:
    """Return ``(feature names, standardizer, svm)`` from a saved model file."""
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("format") != FORMAT:
        raise ValueError(f"unsupported model format {d.get('format')!r}")
    f = d["features"]
    std = Standardizer(np.asarray(f["mean"], dtype=np.float64), np.asarray(f["std"], dtype=np.float64))
    return list(f["names"]), std, SvmModel.from_dict(d["svm"])
