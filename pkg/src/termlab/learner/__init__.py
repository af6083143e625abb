"""Feature assembly and from-scratch kernel SVMs."""

from dataclasses import dataclass

from termlab.learner.context import ContextClassifier, context_counts
from termlab.learner.features import (
    FeatureConfig,
    FoldFeaturizer,
    Standardizer,
    assemble_features,
    avg_token_length,
    fit_standardizer,
    oversample,
    oversample_indices,
    parse_flags,
    static_features,
)
from termlab.learner.smo import (
    CLASSIFICATION,
    REGRESSION,
    KernelSpec,
    SvmModel,
    smo_train,
    solve_dual,
)


@dataclass(frozen=True)
class LearnerConfig:
    """SVM hyperparameters; ``gamma=None`` means ``1 / (d * Var(X))`` on the training fold."""

    C: float = 1.0
    gamma: float | None = None
    epsilon: float = 0.1
    tol: float = 1e-3
    cache_rows: int = 1024
    context_C: float = 1.0


__all__ = [
    "CLASSIFICATION", "REGRESSION", "ContextClassifier", "FeatureConfig", "FoldFeaturizer",
    "KernelSpec", "LearnerConfig", "Standardizer", "SvmModel", "assemble_features",
    "avg_token_length", "context_counts", "fit_standardizer", "oversample", "oversample_indices",
    "parse_flags", "smo_train", "solve_dual", "static_features",
]
