import gzip
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from termlab.corpus import (
    Corpus,
    Document,
    Token,
    ngram_counts,
    parse_vertical,
    read_vertical,
    serialize_vertical,
)
from termlab.errors import InputError

from conftest import random_corpus


def doc_text(*sentences, doc_id="d1", area="Chemistry"):
    lines = [f'<doc id="{doc_id}" area="{area}">']
    for k, s in enumerate(sentences):
        if k:
            lines.append("")
        lines += [f"{w}\t{w.lower()}\tNcmsn" for w in s.split()]
    lines.append("</doc>")
    return "\n".join(lines) + "\n"


def make_doc(*sentences):
    return Document("d", "X", tuple(tuple(Token(w, w, "Ncmsn") for w in s.split()) for s in sentences))


def test_single_document_three_tokens():
    corpus = parse_vertical(doc_text("Sistem za analizo"))
    assert len(corpus) == 1
    doc = corpus.documents[0]
    assert doc.id == "d1" and doc.area == "Chemistry"
    assert len(doc.sentences) == 1
    assert [t.form for t in doc.sentences[0]] == ["Sistem", "za", "analizo"]
    assert doc.sentences[0][0].lemma == "sistem"


def test_blank_line_splits_sentences():
    corpus = parse_vertical(doc_text("a b", "c"))
    assert [len(s) for s in corpus.documents[0].sentences] == [2, 1]


def test_repeated_blank_lines_do_not_create_empty_sentences():
    text = '<doc id="x" area="A">\na\ta\tN\n\n\n\nb\tb\tN\n\n</doc>\n'
    assert [len(s) for s in parse_vertical(text).documents[0].sentences] == [1, 1]


def test_duplicate_document_id():
    with pytest.raises(InputError, match="duplicate document id") as exc:
        parse_vertical(doc_text("a") + doc_text("b"))
    assert exc.value.line == 4


@pytest.mark.parametrize("text, message, line", [
    ('<doc id="a" area="X"\na\ta\tN\n</doc>\n', "malformed doc tag", 1),
    ('<doc area="X">\n</doc>\n', "missing id", 1),
    ('<doc id="a" area="X">\na\ta\n</doc>\n', "3 TAB-separated fields", 2),
    ('<doc id="a" area="X">\na\ta\tN\tx\n</doc>\n', "3 TAB-separated fields", 2),
    ('a\ta\tN\n', "outside of <doc>", 1),
    ('<doc id="a" area="X">\n<doc id="b" area="X">\n', "nested", 2),
    ('<doc id="a" area="X">\na\ta\tN\n', "unclosed", None),
    ('<doc id="a" area="X">\na\t\tN\n</doc>\n', "empty field", 2),
])
def test_malformed_input_reports_line(text, message, line):
    with pytest.raises(InputError, match=message) as exc:
        parse_vertical(text)
    assert exc.value.line == line


def test_gzip_input(tmp_path):
    path = tmp_path / "c.vert.gz"
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        fh.write(doc_text("šola in življenje"))
    corpus = read_vertical(path)
    assert corpus.documents[0].sentences[0][2].form == "življenje"


def test_corpus_lookup_and_duplicate_guard():
    d = make_doc("a")
    corpus = Corpus((d,))
    assert corpus["d"] is d and "d" in corpus and "e" not in corpus
    with pytest.raises(InputError):
        Corpus((d, make_doc("b")))


def test_token_fields_must_be_non_empty():
    with pytest.raises(InputError):
        Token("", "a", "N")


@pytest.mark.parametrize("sentences, n, windows", [
    (["a b c d e"], 2, 4),
    (["a b c", "d"], 3, 1),
    (["a b c", "d"], 1, 4),
    (["a"], 2, 0),
])
def test_window_totals(sentences, n, windows):
    assert ngram_counts(make_doc(*sentences), n).windows == windows


def test_ngram_count_value():
    counts = ngram_counts(make_doc("a b a b"), 2)
    assert counts["a b"] == 2
    assert counts[("b", "a")] == 1
    assert counts["b b"] == 0


def test_windows_do_not_cross_sentences():
    counts = ngram_counts(make_doc("a b", "c d"), 2)
    assert "b c" not in counts
    assert counts.windows == 2


def test_ngram_counts_reject_nonpositive_n():
    with pytest.raises(ValueError):
        ngram_counts(make_doc("a"), 0)


lemma_lists = st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=12),
                       min_size=1, max_size=6)


@given(lemma_lists, st.integers(1, 4))
def test_counts_sum_to_window_total(sentences, n):
    doc = Document("d", "X", tuple(tuple(Token(w, w, "N") for w in s) for s in sentences))
    counts = ngram_counts(doc, n)
    assert sum(counts.counts.values()) == counts.windows
    assert counts.windows == sum(max(0, len(s) - n + 1) for s in sentences)


@given(lemma_lists, st.integers(1, 3), st.randoms())
def test_counts_independent_of_construction_order(sentences, n, rnd):
    # same multiset of sentences in a different order gives the same counts
    shuffled = list(sentences)
    rnd.shuffle(shuffled)
    a = Document("a", "X", tuple(tuple(Token(w, w, "N") for w in s) for s in sentences))
    b = Document("b", "X", tuple(tuple(Token(w, w, "N") for w in s) for s in shuffled))
    assert ngram_counts(a, n).counts == ngram_counts(b, n).counts


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_serialize_round_trip(seed):
    corpus = random_corpus(random.Random(seed), n_docs=3, max_tokens=40)
    again = parse_vertical(serialize_vertical(corpus))
    assert [(d.id, d.area, d.sentences) for d in again] == \
           [(d.id, d.area, d.sentences) for d in corpus]
