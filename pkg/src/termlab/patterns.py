"""Morphosyntactic term patterns and candidate extraction.

A pattern file holds one pattern per line; each pattern is a comma-separated
list of 1 to 4 slot expressions, every slot a regular expression that must
match a token's full MSD tag, e.g. ``Nc.*,S.*,Nc.*,Nc.*g.*``.
"""

from __future__ import annotations

import csv
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from termlab.corpus import Corpus, Document
from termlab.errors import InputError

MAX_SLOTS = 4

# literals, '.', quantifiers *+?, character classes, alternation and grouping
_SLOT_ALPHABET = re.compile(r"^[\w.*+?\[\]^\-|()]+$")

CANDIDATE_COLUMNS = ("doc_id", "area", "lemma_seq", "surface_seq", "pattern_id", "length", "freq")


@dataclass(frozen=True)
class MsdPattern:
    id: str
    slots: tuple[re.Pattern, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class Candidate:
    lemma_seq: str
    surface_seq: str
    doc_id: str
    pattern_id: str
    length: int
    freq: int
    area: str = ""

    @property
    def lemmas(self) -> tuple[str, ...]:
        return tuple(self.lemma_seq.split(" "))


def parse_pattern_file(text: str, source=None) -> list[MsdPattern]:
    patterns = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if any(not p for p in parts):
            raise InputError("empty slot in pattern", lineno, source)
        if len(parts) > MAX_SLOTS:
            raise InputError(f"pattern has {len(parts)} slots, at most {MAX_SLOTS} allowed",
                             lineno, source)
        slots = []
        for p in parts:
            if not _SLOT_ALPHABET.match(p):
                raise InputError(f"slot {p!r} uses unsupported regex syntax", lineno, source)
            try:
                slots.append(re.compile(p))
            except re.error as exc:
                raise InputError(f"invalid regex in slot {p!r}: {exc}", lineno, source) from exc
        patterns.append(MsdPattern(f"L{lineno}", tuple(slots), ",".join(parts)))
    return patterns


def read_pattern_file(path) -> list[MsdPattern]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read pattern file: {exc}", source=path) from exc
    return parse_pattern_file(text, source=path)


def extract_candidates(doc: Document, patterns: Sequence[MsdPattern],
                       min_freq: int = 3) -> list[Candidate]:
    """Extract lemma-sequence candidates of ``doc`` matching any pattern.

    Matches are grouped per (lemma sequence, pattern); groups seen fewer than
    ``min_freq`` times are dropped. The surface form reported is the most
    frequent inflected window, ties going to the lexicographically smallest.
    Output is sorted alphabetically by lemma sequence (then pattern order),
    so frequency never leaks into the list order.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    match_cache: dict[tuple[int, int, str], bool] = {}

    def slot_ok(p_idx, s_idx, msd):
        key = (p_idx, s_idx, msd)
        hit = match_cache.get(key)
        if hit is None:
            hit = match_cache[key] = patterns[p_idx].slots[s_idx].fullmatch(msd) is not None
        return hit

    surfaces: dict[tuple[tuple[str, ...], int], Counter] = defaultdict(Counter)
    for sentence in doc.sentences:
        msds = [t.msd for t in sentence]
        for p_idx, pattern in enumerate(patterns):
            n = len(pattern.slots)
            for start in range(len(sentence) - n + 1):
                if all(slot_ok(p_idx, k, msds[start + k]) for k in range(n)):
                    window = sentence[start:start + n]
                    key = (tuple(t.lemma for t in window), p_idx)
                    surfaces[key][" ".join(t.form for t in window)] += 1

    out = []
    for (lemmas, p_idx), forms in surfaces.items():
        freq = sum(forms.values())
        if freq < min_freq:
            continue
        surface = min(forms.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        out.append((" ".join(lemmas), p_idx, Candidate(
            lemma_seq=" ".join(lemmas),
            surface_seq=surface,
            doc_id=doc.id,
            pattern_id=patterns[p_idx].id,
            length=len(lemmas),
            freq=freq,
            area=doc.area,
        )))
    out.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in out]


def extract_corpus(corpus: Corpus, patterns: Sequence[MsdPattern],
                   min_freq: int = 3) -> list[Candidate]:
    result = []
    for doc in corpus:
        result.extend(extract_candidates(doc, patterns, min_freq))
    return result


def write_candidates_csv(candidates: Iterable[Candidate], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CANDIDATE_COLUMNS)
    for c in candidates:
        writer.writerow([c.doc_id, c.area, c.lemma_seq, c.surface_seq, c.pattern_id,
                         c.length, c.freq])


def read_candidates_csv(fh, source=None) -> list[Candidate]:
    reader = csv.DictReader(fh)
    missing = set(CANDIDATE_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise InputError(f"candidate file lacks column(s) {sorted(missing)}", source=source)
    out = []
    for row in reader:
        try:
            length, freq = int(row["length"]), int(row["freq"])
        except ValueError as exc:
            raise InputError(f"non-integer length/freq: {exc}", reader.line_num, source) from exc
        if length != len(row["lemma_seq"].split(" ")):
            raise InputError("length does not match lemma_seq", reader.line_num, source)
        out.append(Candidate(row["lemma_seq"], row["surface_seq"], row["doc_id"],
                             row["pattern_id"], length, freq, row["area"]))
    return out
