"""Termhood statistics: association measures, tf-idf and C-value.

Association measures for an n-gram ``w1..wn`` use one shared 2x2 table that
splits each n-gram window into its prefix ``w1..w(n-1)`` and its final lemma
``wn``. Log bases: PMI and C-value use base 2, log-likelihood and idf use the
natural logarithm.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

from termlab.corpus import Corpus, Document, ngram_counts
from termlab.errors import InputError

STAT_NAMES = ("freq", "tfidf", "chisq", "dice", "mi", "tscore", "ll", "cvalue")
ASSOCIATION_STATS = ("chisq", "dice", "mi", "tscore", "ll")


@dataclass(frozen=True)
class ContingencyTable:
    o11: int
    o12: int
    o21: int
    o22: int

    def __post_init__(self):
        if min(self.o11, self.o12, self.o21, self.o22) < 0:
            raise ValueError(f"negative cell in {self}")
        if self.n < 1:
            raise ValueError("empty contingency table")

    @property
    def r1(self):
        return self.o11 + self.o12

    @property
    def r2(self):
        return self.o21 + self.o22

    @property
    def c1(self):
        return self.o11 + self.o21

    @property
    def c2(self):
        return self.o12 + self.o22

    @property
    def n(self):
        return self.o11 + self.o12 + self.o21 + self.o22

    @property
    def e11(self) -> float:
        return self.r1 * self.c1 / self.n

    def expected(self) -> tuple[float, float, float, float]:
        n = self.n
        return (self.r1 * self.c1 / n, self.r1 * self.c2 / n,
                self.r2 * self.c1 / n, self.r2 * self.c2 / n)

    @property
    def degenerate(self) -> bool:
        """True when some marginal is zero, i.e. an expected cell vanishes."""
        return min(self.r1, self.r2, self.c1, self.c2) == 0

    def transpose(self) -> "ContingencyTable":
        return ContingencyTable(self.o11, self.o21, self.o12, self.o22)


@dataclass(frozen=True)
class CandidateStats:
    freq: int
    tfidf: float
    chisq: float | None = None
    dice: float | None = None
    mi: float | None = None
    tscore: float | None = None
    ll: float | None = None
    cvalue: float | None = None
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name in STAT_NAMES}


class _PrefixIndex:
    """Prefix and final-lemma marginals over the n-gram windows of a document."""

    def __init__(self, doc: Document, n: int):
        grams = ngram_counts(doc, n)
        self.grams = grams
        self.prefix: Counter = Counter()
        self.last: Counter = Counter()
        for gram, c in grams.counts.items():
            self.prefix[gram[:-1]] += c
            self.last[gram[-1]] += c


def _prefix_index(doc: Document, n: int) -> _PrefixIndex:
    key = ("prefix-index", n)
    idx = doc._cache.get(key)
    if idx is None:
        idx = doc._cache[key] = _PrefixIndex(doc, n)
    return idx


def build_table(candidate, doc: Document) -> ContingencyTable:
    lemmas = tuple(candidate.lemma_seq.split(" "))
    n = len(lemmas)
    if n < 2:
        raise InputError(f"contingency table needs a multi-word candidate: {candidate.lemma_seq!r}")
    idx = _prefix_index(doc, n)
    o11 = idx.grams.counts.get(lemmas, 0)
    r1 = idx.prefix.get(lemmas[:-1], 0)
    c1 = idx.last.get(lemmas[-1], 0)
    total = idx.grams.windows
    return ContingencyTable(o11, r1 - o11, c1 - o11, total - r1 - c1 + o11)


def chi_square(t: ContingencyTable) -> float:
    """Pearson chi-square without continuity correction; 0 on degenerate tables."""
    if t.degenerate:
        return 0.0
    num = t.o11 * t.o22 - t.o12 * t.o21
    return t.n * num * num / (t.r1 * t.r2 * t.c1 * t.c2)


def log_likelihood(t: ContingencyTable) -> float:
    """Dunning's G2 = 2 * sum O ln(O/E), with 0 ln 0 = 0; 0 on degenerate tables."""
    if t.degenerate:
        return 0.0
    g = 0.0
    for o, e in zip((t.o11, t.o12, t.o21, t.o22), t.expected()):
        if o > 0:
            g += o * math.log(o / e)
    # rounding can push exact independence a hair below zero
    return max(0.0, 2.0 * g)


def dice(t: ContingencyTable) -> float:
    if t.r1 + t.c1 == 0:
        return 0.0
    return 2.0 * t.o11 / (t.r1 + t.c1)


def pmi(t: ContingencyTable) -> float:
    if t.o11 < 1:
        raise ValueError("PMI undefined for o11 = 0")
    return math.log2(t.o11 * t.n / (t.r1 * t.c1))


def t_score(t: ContingencyTable) -> float:
    if t.o11 < 1:
        raise ValueError("t-score undefined for o11 = 0")
    return (t.o11 - t.e11) / math.sqrt(t.o11)


def document_frequency(lemma_seq: str, corpus: Corpus) -> int:
    key = tuple(lemma_seq.split(" "))
    n = len(key)
    return sum(1 for doc in corpus if key in ngram_counts(doc, n).counts)


def tf_idf(candidate, corpus: Corpus) -> float:
    df = document_frequency(candidate.lemma_seq, corpus)
    if df == 0:
        raise InputError(f"candidate {candidate.lemma_seq!r} does not occur in the corpus")
    return candidate.freq * math.log(len(corpus) / df)


def _contains(outer: Sequence[str], inner: Sequence[str]) -> bool:
    k = len(inner)
    return any(tuple(outer[i:i + k]) == tuple(inner) for i in range(len(outer) - k + 1))


def c_value(candidate, all_candidates: Iterable) -> float:
    """Non-recursive C-value of a multi-word candidate.

    ``all_candidates`` must come from the candidate's own document. Any object
    with ``lemma_seq`` and ``freq`` attributes is accepted.
    """
    lemmas = candidate.lemma_seq.split(" ")
    if len(lemmas) < 2:
        raise InputError(f"C-value needs a multi-word candidate: {candidate.lemma_seq!r}")
    containers = [b.freq for b in all_candidates
                  if len(b.lemma_seq.split(" ")) > len(lemmas)
                  and _contains(b.lemma_seq.split(" "), lemmas)]
    weight = math.log2(len(lemmas))
    if not containers:
        return weight * candidate.freq
    return weight * (candidate.freq - sum(containers) / len(containers))


def c_values(candidates: Sequence) -> list[float | None]:
    """C-value of every candidate against the others of its document.

    Same result as calling :func:`c_value` per candidate but indexes nested
    sub-sequences once, so it scales to full theses. Unigrams get ``None``.
    """
    nested: dict[tuple[str, tuple], list[int]] = defaultdict(list)
    doc_key = [getattr(c, "doc_id", None) or getattr(c, "thesis_id", None) for c in candidates]
    for c, d in zip(candidates, doc_key):
        lemmas = tuple(c.lemma_seq.split(" "))
        subs = {lemmas[i:j] for i in range(len(lemmas))
                for j in range(i + 2, len(lemmas) + 1) if j - i < len(lemmas)}
        for sub in subs:
            nested[(d, sub)].append(c.freq)
    out = []
    for c, d in zip(candidates, doc_key):
        lemmas = tuple(c.lemma_seq.split(" "))
        if len(lemmas) < 2:
            out.append(None)
            continue
        weight = math.log2(len(lemmas))
        containers = nested.get((d, lemmas))
        if not containers:
            out.append(weight * c.freq)
        else:
            out.append(weight * (c.freq - sum(containers) / len(containers)))
    return out


def score_all(corpus: Corpus, candidates: Sequence) -> dict:
    """Map every candidate to its :class:`CandidateStats`.

    Single-word candidates only get ``freq`` and ``tfidf``.
    """
    cvals = c_values(candidates)
    out = {}
    for cand, cv in zip(candidates, cvals):
        doc = corpus[cand.doc_id]
        tfidf = tf_idf(cand, corpus)
        if cand.length < 2:
            out[cand] = CandidateStats(freq=cand.freq, tfidf=tfidf)
            continue
        t = build_table(cand, doc)
        out[cand] = CandidateStats(
            freq=cand.freq, tfidf=tfidf, chisq=chi_square(t), dice=dice(t), mi=pmi(t),
            tscore=t_score(t), ll=log_likelihood(t), cvalue=cv, degenerate=t.degenerate)
    return out
