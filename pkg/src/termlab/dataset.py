"""Annotated term-candidate datasets: I/O, label mappings and gold aggregation.

One row per (thesis, candidate) with four annotator labels and the
precomputed statistics. Canonical column names are listed in ``COLUMNS``;
a header map translates other names onto them.

CSV: UTF-8, comma-delimited, minimally quoted, header row, LF line endings.
Empty fields mean "absent" (association statistics of single-word rows).
JSON: an array of flat objects with the same keys; absent values are ``null``.
Floats are written with 6 significant digits (``%.6g``), so a write/read
round-trip preserves every field up to that precision.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping as TMapping

from termlab.errors import InputError

ANNOTATORS = 4
STAT_COLUMNS = ("freq", "tfidf", "chisq", "dice", "mi", "tscore", "ll")
LABEL_COLUMNS = ("ann1", "ann2", "ann3", "ann4")
COLUMNS = ("thesis_id", "area", "round", "lemma_seq", "surface_seq", "pattern", "length",
           *LABEL_COLUMNS, *STAT_COLUMNS)
MANDATORY = ("thesis_id", "area", "lemma_seq", *LABEL_COLUMNS, "freq", "tfidf")


class AnnotationLabel(enum.Enum):
    IN_DOMAIN = "in_domain"
    OUT_OF_DOMAIN = "out_of_domain"
    ACADEMIC = "academic"
    IRRELEVANT = "irrelevant"

    @classmethod
    def parse(cls, text: str) -> "AnnotationLabel":
        key = "".join(ch for ch in text.strip().lower() if ch.isalnum())
        try:
            return _LABEL_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown annotation label {text!r}") from None


_LABEL_ALIASES = {
    "indomain": AnnotationLabel.IN_DOMAIN,
    "indomainterm": AnnotationLabel.IN_DOMAIN,
    "outofdomain": AnnotationLabel.OUT_OF_DOMAIN,
    "outdomain": AnnotationLabel.OUT_OF_DOMAIN,
    "outofdomainterm": AnnotationLabel.OUT_OF_DOMAIN,
    "academic": AnnotationLabel.ACADEMIC,
    "academicvocabulary": AnnotationLabel.ACADEMIC,
    "general": AnnotationLabel.ACADEMIC,
    "irrelevant": AnnotationLabel.IRRELEVANT,
    "irrelevantsequence": AnnotationLabel.IRRELEVANT,
}


class Mapping(enum.Enum):
    EXCLUSIVE = "exclusive"
    INCLUSIVE = "inclusive"

    def positive(self, label: AnnotationLabel) -> int:
        if self is Mapping.EXCLUSIVE:
            return int(label is AnnotationLabel.IN_DOMAIN)
        return int(label is not AnnotationLabel.IRRELEVANT)


@dataclass(frozen=True)
class Instance:
    thesis_id: str
    area: str
    round: int
    lemma_seq: str
    surface_seq: str
    pattern: str
    length: int
    labels: tuple[AnnotationLabel, ...]
    freq: float
    tfidf: float
    chisq: float | None = None
    dice: float | None = None
    mi: float | None = None
    tscore: float | None = None
    ll: float | None = None

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if len(self.labels) != ANNOTATORS:
            raise ValueError(f"expected {ANNOTATORS} labels, got {len(self.labels)}")

    def stat(self, name: str) -> float | None:
        return getattr(self, name)


@dataclass(frozen=True)
class Dataset:
    instances: tuple[Instance, ...]

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        areas: dict[str, str] = {}
        for inst in self.instances:
            if areas.setdefault(inst.thesis_id, inst.area) != inst.area:
                raise InputError(f"thesis {inst.thesis_id!r} assigned to two areas")

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    @property
    def theses(self) -> list[str]:
        return sorted({i.thesis_id for i in self.instances})

    @property
    def areas(self) -> list[str]:
        return sorted({i.area for i in self.instances})

    def thesis_area(self) -> dict[str, str]:
        return {i.thesis_id: i.area for i in self.instances}

    def subset(self, name: str) -> "Dataset":
        """``"MWT"`` keeps length >= 2, ``"SWT"`` keeps length 1."""
        name = name.upper()
        if name == "MWT":
            return Dataset(tuple(i for i in self.instances if i.length >= 2))
        if name == "SWT":
            return Dataset(tuple(i for i in self.instances if i.length == 1))
        if name == "ALL":
            return self
        raise ValueError(f"unknown subset {name!r}")


def map_labels(inst: Instance, m: Mapping) -> tuple[int, ...]:
    return tuple(m.positive(lab) for lab in inst.labels)


def average_annotation(inst: Instance, m: Mapping) -> float:
    return sum(map_labels(inst, m)) / ANNOTATORS


def gold_binary(inst: Instance, m: Mapping) -> int:
    """Majority gold with ties counted positive: 1 iff >= 2 of 4 annotators say term."""
    return int(sum(map_labels(inst, m)) >= 2)


def load_header_map(path) -> dict[str, str]:
    """Read a ``canonical_name = published_name`` file (``#`` comments allowed)."""
    result = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read header map: {exc}", source=path) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError("expected key=value", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in COLUMNS:
            raise InputError(f"unknown canonical column {key!r}", lineno, path)
        result[key] = value
    return result


def _parse_float(value, row, column, source):
    if value is None or (isinstance(value, str) and not value.strip()):
        return None
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InputError(f"non-numeric value {value!r} in column {column!r} (row {row})",
                         source=source) from None
    if not math.isfinite(x):
        raise InputError(f"non-finite value {value!r} in column {column!r} (row {row})",
                         source=source)
    return x


def _instance_from_record(rec: TMapping, row: int, hmap: dict, source) -> Instance:
    def get(col, default=None):
        v = rec.get(hmap.get(col, col), default)
        return v.strip() if isinstance(v, str) else v

    labels = []
    for col in LABEL_COLUMNS:
        raw = get(col)
        try:
            labels.append(AnnotationLabel.parse(str(raw)))
        except ValueError:
            raise InputError(f"unknown label {raw!r} in column {hmap.get(col, col)!r} (row {row})",
                             source=source) from None
    stats = {c: _parse_float(get(c), row, c, source) for c in STAT_COLUMNS}
    for c in ("freq", "tfidf"):
        if stats[c] is None:
            raise InputError(f"missing value in column {hmap.get(c, c)!r} (row {row})",
                             source=source)
    lemma_seq = str(get("lemma_seq"))
    length = get("length")
    try:
        length = int(float(length)) if length not in (None, "") else len(lemma_seq.split())
        rnd = get("round")
        rnd = int(float(rnd)) if rnd not in (None, "") else 0
    except ValueError:
        raise InputError(f"non-integer length/round (row {row})", source=source) from None
    surface = get("surface_seq")
    return Instance(
        thesis_id=str(get("thesis_id")), area=str(get("area")), round=rnd,
        lemma_seq=lemma_seq, surface_seq=str(surface) if surface else lemma_seq,
        pattern=str(get("pattern") or ""), length=length, labels=tuple(labels), **stats)


def _check_columns(present: Iterable[str], hmap: dict, source):
    present = set(present)
    missing = [hmap.get(c, c) for c in MANDATORY if hmap.get(c, c) not in present]
    if missing:
        raise InputError(f"missing mandatory column(s): {', '.join(missing)}", source=source)


def parse_dataset(text: str, format: str = "csv", header_map: dict | None = None,
                  source=None) -> Dataset:
    hmap = dict(header_map or {})
    if format == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            raise InputError("empty dataset file (no header row)", source=source)
        _check_columns(reader.fieldnames, hmap, source)
        rows = [(reader.line_num, rec) for rec in reader]
    elif format == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}", source=source) from exc
        if not isinstance(data, list):
            raise InputError("JSON dataset must be an array of objects", source=source)
        rows = []
        for k, rec in enumerate(data, start=1):
            if not isinstance(rec, dict):
                raise InputError(f"JSON element {k} is not an object", source=source)
            _check_columns(rec.keys(), hmap, source)
            rows.append((k, rec))
    else:
        raise ValueError(f"unknown dataset format {format!r}")
    return Dataset(tuple(_instance_from_record(rec, row, hmap, source) for row, rec in rows))


def read_dataset(path, format: str | None = None, header_map: dict | None = None) -> Dataset:
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise InputError(f"cannot read dataset: {exc}", source=path) from exc
    return parse_dataset(text, format, header_map, source=path)


def fmt_float(x) -> str:
    """Locale-independent 6-significant-digit rendering used in every output."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".6g")


def _record(inst: Instance) -> dict:
    rec = {
        "thesis_id": inst.thesis_id, "area": inst.area, "round": inst.round,
        "lemma_seq": inst.lemma_seq, "surface_seq": inst.surface_seq,
        "pattern": inst.pattern, "length": inst.length,
    }
    for col, lab in zip(LABEL_COLUMNS, inst.labels):
        rec[col] = lab.value
    for col in STAT_COLUMNS:
        rec[col] = inst.stat(col)
    return rec


def dumps_dataset(ds: Dataset, format: str = "csv") -> str:
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for inst in ds:
            rec = _record(inst)
            writer.writerow([fmt_float(rec[c]) if c in STAT_COLUMNS else rec[c] for c in COLUMNS])
        return buf.getvalue()
    if format == "json":
        recs = []
        for inst in ds:
            rec = _record(inst)
            for c in STAT_COLUMNS:
                if rec[c] is not None:
                    rec[c] = float(fmt_float(rec[c]))
            recs.append(rec)
        return json.dumps(recs, ensure_ascii=False, indent=1) + "\n"
    raise ValueError(f"unknown dataset format {format!r}")


def label_distribution(ds: Dataset) -> list[dict]:
    """Per-area counts and shares of each label, pooled over the four annotators."""
    per_area: dict[str, Counter] = defaultdict(Counter)
    for inst in ds:
        per_area[inst.area].update(inst.labels)
    rows = []
    for area in sorted(per_area):
        counts = per_area[area]
        total = sum(counts.values())
        for lab in AnnotationLabel:
            rows.append({"area": area, "label": lab.value, "count": counts[lab],
                         "proportion": counts[lab] / total if total else 0.0})
    return rows

