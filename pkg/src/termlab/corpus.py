"""Vertical-format corpus reader and per-document n-gram counting.

The vertical format holds one token per line as ``form<TAB>lemma<TAB>msd``.
Documents are wrapped in ``<doc id="..." area="...">`` / ``</doc>`` lines and a
blank line ends a sentence::

    <doc id="chem01" area="Chemistry">
    Sistem\tsistem\tNcmsn
    deluje\tdelovati\tVmpr3s

    Analiza\tanaliza\tNcfsn
    </doc>
"""

from __future__ import annotations

import gzip
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from termlab.errors import InputError

_DOC_OPEN = re.compile(r'^<doc(?P<attrs>(?:\s+[A-Za-z_][\w-]*="[^"]*")*)\s*>$')
_ATTR = re.compile(r'([A-Za-z_][\w-]*)="([^"]*)"')


@dataclass(frozen=True)
class Token:
    form: str
    lemma: str
    msd: str

    def __post_init__(self):
        if not self.form or not self.lemma or not self.msd:
            raise InputError(f"token fields must be non-empty: {self!r}")


@dataclass(frozen=True)
class NgramCounts:
    """Lemma n-gram counts of one document plus the number of windows ``N_n``."""

    n: int
    counts: Counter
    windows: int

    def __getitem__(self, key) -> int:
        return self.counts.get(_as_key(key), 0)

    def __contains__(self, key) -> bool:
        return _as_key(key) in self.counts


def _as_key(key) -> tuple:
    if isinstance(key, str):
        return tuple(key.split(" "))
    return tuple(key)


@dataclass(frozen=True, eq=False)
class Document:
    """One document (a thesis). Immutable; derived counts are memoised."""

    id: str
    area: str
    sentences: tuple[tuple[Token, ...], ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        for s in self.sentences:
            if not s:
                raise InputError(f"document {self.id!r} contains an empty sentence")

    def lemma_sentences(self) -> tuple[tuple[str, ...], ...]:
        if "lemmas" not in self._cache:
            self._cache["lemmas"] = tuple(tuple(t.lemma for t in s) for s in self.sentences)
        return self._cache["lemmas"]

    def __len__(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))
        seen = set()
        for d in self.documents:
            if d.id in seen:
                raise InputError(f"duplicate document id {d.id!r}")
            seen.add(d.id)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.id == doc_id:
                return d
        raise KeyError(doc_id)

    def __contains__(self, doc_id) -> bool:
        return any(d.id == doc_id for d in self.documents)


def ngram_counts(doc: Document, n: int) -> NgramCounts:
    """Count contiguous lemma n-grams inside sentences of ``doc``.

    Windows never cross a sentence boundary, so a sentence of length ``L``
    contributes ``max(0, L - n + 1)`` windows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    key = ("ngrams", n)
    cached = doc._cache.get(key)
    if cached is not None:
        return cached
    counts: Counter = Counter()
    windows = 0
    for lemmas in doc.lemma_sentences():
        m = len(lemmas) - n + 1
        if m <= 0:
            continue
        windows += m
        counts.update(lemmas[i:i + n] for i in range(m))
    result = NgramCounts(n, counts, windows)
    doc._cache[key] = result
    return result


def parse_vertical(text: str, source=None) -> Corpus:
    documents = []
    seen_ids: dict[str, int] = {}
    current = None  # (id, area, sentences, open_line)
    sentence: list[Token] = []

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if current is None:
            if not line.strip():
                continue
            m = _DOC_OPEN.match(line.strip())
            if m is None:
                if line.strip().startswith("<doc"):
                    raise InputError("malformed doc tag", lineno, source)
                raise InputError("text outside of <doc> element", lineno, source)
            attrs = dict(_ATTR.findall(m.group("attrs")))
            if "id" not in attrs or not attrs["id"]:
                raise InputError("malformed doc tag: missing id attribute", lineno, source)
            unknown = set(attrs) - {"id", "area"}
            if unknown:
                raise InputError(f"malformed doc tag: unknown attribute(s) {sorted(unknown)}",
                                 lineno, source)
            doc_id = attrs["id"]
            if doc_id in seen_ids:
                raise InputError(
                    f"duplicate document id {doc_id!r} (first seen on line {seen_ids[doc_id]})",
                    lineno, source)
            seen_ids[doc_id] = lineno
            current = (doc_id, attrs.get("area", ""), [], lineno)
            continue

        if not line.strip():
            if sentence:
                current[2].append(tuple(sentence))
                sentence = []
            continue
        if line.strip() == "</doc>":
            if sentence:
                current[2].append(tuple(sentence))
                sentence = []
            documents.append(Document(current[0], current[1], tuple(current[2])))
            current = None
            continue
        if line.lstrip().startswith("<doc"):
            raise InputError("nested <doc> element", lineno, source)
        fields = line.split("\t")
        if len(fields) != 3:
            raise InputError(f"token line must have 3 TAB-separated fields, got {len(fields)}",
                             lineno, source)
        if not all(fields):
            raise InputError("token line has an empty field", lineno, source)
        sentence.append(Token(*fields))

    if current is not None:
        raise InputError(f"unclosed <doc> element opened on line {current[3]}", None, source)
    return Corpus(tuple(documents))


def read_vertical(path) -> Corpus:
    """Read a vertical file; names ending in ``.gz`` are decompressed."""
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rt", encoding="utf-8", newline="") as fh:
                text = fh.read()
        else:
            text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read corpus: {exc}", source=path) from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"corpus is not valid UTF-8: {exc}", source=path) from exc
    return parse_vertical(text, source=path)


def serialize_vertical(corpus: Corpus) -> str:
    out = []
    for doc in corpus:
        out.append(f'<doc id="{doc.id}" area="{doc.area}">')
        for i, sentence in enumerate(doc.sentences):
            if i:
                out.append("")
            out.extend(f"{t.form}\t{t.lemma}\t{t.msd}" for t in sentence)
        out.append("</doc>")
    return "\n".join(out) + "\n"
