"""Context-based termhood classifier.

Each candidate is represented by the counts of lemmas found within a fixed
token window around every occurrence of its lemma sequence in its own
thesis (windows are clipped at sentence boundaries and exclude the
occurrence itself). A linear SVM trained on these bags yields a raw margin
that is later used as a single feature.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from termlab.corpus import Corpus, Document
from termlab.learner.smo import CLASSIFICATION, KernelSpec, SvmModel, smo_train


def _occurrence_index(doc: Document, n: int) -> dict:
    key = ("occurrences", n)
    idx = doc._cache.get(key)
    if idx is None:
        idx = defaultdict(list)
        for s, lemmas in enumerate(doc.lemma_sentences()):
            for i in range(len(lemmas) - n + 1):
                idx[lemmas[i:i + n]].append((s, i))
        idx = doc._cache[key] = dict(idx)
    return idx


def context_counts(doc: Document, lemma_seq: str, window: int = 3) -> Counter:
    lemmas = tuple(lemma_seq.split(" "))
    n = len(lemmas)
    sentences = doc.lemma_sentences()
    counts: Counter = Counter()
    for s, i in _occurrence_index(doc, n).get(lemmas, ()):
        sent = sentences[s]
        counts.update(sent[max(0, i - window):i])
        counts.update(sent[i + n:i + n + window])
    return counts


class ContextClassifier:
    def __init__(self, corpus: Corpus | None, window: int = 3, C: float = 1.0, tol: float = 1e-3):
        self.corpus = corpus
        self.window = window
        self.C = C
        self.tol = tol
        self.vocabulary: dict[str, int] = {}
        self.model: SvmModel | None = None
        self.constant: float | None = None

    def _bag(self, thesis_id: str, lemma_seq: str) -> Counter:
        if self.corpus is None or thesis_id not in self.corpus:
            return Counter()
        return context_counts(self.corpus[thesis_id], lemma_seq, self.window)

    def _matrix(self, bags: Sequence[Counter]) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for r, bag in enumerate(bags):
            for lemma, c in bag.items():
                j = self.vocabulary.get(lemma)
                if j is not None:
                    rows.append(r)
                    cols.append(j)
                    vals.append(float(c))
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(bags), max(1, len(self.vocabulary))))

    def fit(self, keys: Sequence[tuple[str, str]], gold: Sequence[int]) -> "ContextClassifier":
        """Train on (thesis_id, lemma_seq) keys of training-fold candidates only."""
        bags = [self._bag(t, l) for t, l in keys]
        self.vocabulary = {w: j for j, w in enumerate(sorted({w for b in bags for w in b}))}
        gold = np.asarray(gold)
        if len(np.unique(gold)) < 2:
            # no contrast to learn from: every candidate gets the same certainty
            self.constant = 1.0 if gold.size and gold[0] > 0 else -1.0
            return self
        x = self._matrix(bags)
        self.model = smo_train(x, gold, CLASSIFICATION, KernelSpec("linear"), C=self.C, tol=self.tol)
        return self

    def certainty(self, keys: Sequence[tuple[str, str]]) -> np.ndarray:
        if self.constant is not None:
            return np.full(len(keys), self.constant)
        if self.model is None:
            raise RuntimeError("context classifier is not fitted")
        x = self._matrix([self._bag(t, l) for t, l in keys])
        return self.model.decision_function(x)

    def artifacts(self) -> dict:
        out = {"vocabulary": sorted(self.vocabulary), "constant": self.constant}
        if self.model is not None:
            out["weights"] = np.asarray(
                self.model.support_vectors.T @ self.model.dual_coef).ravel().round(10).tolist()
            out["bias"] = round(self.model.bias, 10)
        return out
