import io
import random
import re
from collections import Counter
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from termlab.corpus import Document, Token
from termlab.errors import InputError
from termlab.patterns import (
    extract_candidates,
    parse_pattern_file,
    read_candidates_csv,
    write_candidates_csv,
)

from conftest import SYNTH_PATTERNS, random_document


def doc(*sentences):
    """Sentences given as 'form/lemma/msd' items separated by spaces."""
    return Document("t1", "Chemistry", tuple(
        tuple(Token(*item.split("/")) for item in s.split()) for s in sentences))


def test_four_slot_pattern():
    (p,) = parse_pattern_file("Nc.*,S.*,Nc.*,Nc.*g.*")
    assert len(p.slots) == 4
    assert p.id == "L1"
    assert p.slots[3].fullmatch("Ncfsg") and not p.slots[3].fullmatch("Ncfsn")


def test_one_slot_pattern():
    (p,) = parse_pattern_file("N.*")
    assert len(p.slots) == 1


def test_comments_blank_lines_and_ids():
    pats = parse_pattern_file("# header\n\nN.*   # nouns\nA.*,N.*\n")
    assert [p.id for p in pats] == ["L3", "L4"]
    assert [p.source for p in pats] == ["N.*", "A.*,N.*"]


@pytest.mark.parametrize("text, message", [
    ("N.*,,A.*", "empty slot"),
    ("A,B,C,D,E", "at most 4"),
    ("N[.*", "invalid regex"),
    ("N{2}", "unsupported"),
    ("N.*\\d", "unsupported"),
])
def test_bad_patterns(text, message):
    with pytest.raises(InputError, match=message):
        parse_pattern_file(text)


def test_bundled_sample_patterns_parse():
    text = resources.files("termlab").joinpath("data/patterns.txt").read_text(encoding="utf-8")
    pats = parse_pattern_file(text)
    assert pats and all(1 <= len(p.slots) <= 4 for p in pats)


def test_slots_are_anchored():
    (p,) = parse_pattern_file("Nc")
    d = doc("sistem/sistem/Ncmsn sistem/sistem/Ncmsn sistem/sistem/Ncmsn")
    assert extract_candidates(d, [p], min_freq=1) == []


def test_threshold_three_occurrences_emitted():
    pats = parse_pattern_file("Nc.*")
    d = doc("Sistem/sistem/Ncmsn deluje/delovati/Vmpr3s", "sistem/sistem/Ncmsn",
            "sistem/sistem/Ncmsn")
    (c,) = extract_candidates(d, pats, min_freq=3)
    assert (c.lemma_seq, c.freq, c.length, c.doc_id, c.area) == ("sistem", 3, 1, "t1", "Chemistry")
    # most frequent surface form wins
    assert c.surface_seq == "sistem"


def test_threshold_two_occurrences_dropped():
    pats = parse_pattern_file("Nc.*")
    d = doc("sistem/sistem/Ncmsn", "sistem/sistem/Ncmsn")
    assert extract_candidates(d, pats, min_freq=3) == []


def test_surface_tie_broken_lexicographically():
    pats = parse_pattern_file("Nc.*")
    d = doc("sistema/sistem/Ncmsg", "Sistem/sistem/Ncmsn")
    (c,) = extract_candidates(d, pats, min_freq=1)
    assert c.surface_seq == "Sistem"


def test_output_sorted_alphabetically_not_by_frequency():
    pats = parse_pattern_file("Nc.*")
    d = doc(" ".join(["zrak/zrak/Ncmsn"] * 9), "analiza/analiza/Ncfsn " * 3, "metoda/metoda/Ncfsn " * 5)
    out = extract_candidates(d, pats, min_freq=3)
    assert [c.lemma_seq for c in out] == ["analiza", "metoda", "zrak"]


def test_one_candidate_per_pattern():
    pats = parse_pattern_file("Nc.*\nN.*")
    d = doc("sistem/sistem/Ncmsn " * 3)
    out = extract_candidates(d, pats, min_freq=3)
    assert [(c.lemma_seq, c.pattern_id) for c in out] == [("sistem", "L1"), ("sistem", "L2")]


def test_matches_stay_within_sentences():
    pats = parse_pattern_file("A.*,Nc.*")
    d = doc("nova/nov/Agpfsn", "metoda/metoda/Ncfsn")
    assert extract_candidates(d, pats, min_freq=1) == []


def test_min_freq_must_be_positive():
    with pytest.raises(ValueError):
        extract_candidates(doc("a/a/N"), parse_pattern_file("N"), min_freq=0)


def brute_force_counts(document, patterns):
    """Enumerate every window of every sentence and test every slot."""
    counts = Counter()
    for s in document.sentences:
        for p in patterns:
            n = len(p.source.split(","))
            for i in range(len(s) - n + 1):
                window = s[i:i + n]
                if all(re.fullmatch(rx, t.msd) for rx, t in zip(p.source.split(","), window)):
                    counts[(" ".join(t.lemma for t in window), p.id)] += 1
    return counts


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 3))
def test_frequencies_match_window_enumeration(seed, min_freq):
    d = random_document(random.Random(seed), "d0")
    pats = parse_pattern_file(SYNTH_PATTERNS)
    out = extract_candidates(d, pats, min_freq)
    expected = {k: v for k, v in brute_force_counts(d, pats).items() if v >= min_freq}
    assert {(c.lemma_seq, c.pattern_id): c.freq for c in out} == expected
    assert all(c.length == len(c.lemma_seq.split()) for c in out)
    keys = [c.lemma_seq.encode("utf-8") for c in out]
    assert keys == sorted(keys)
    assert extract_candidates(d, pats, min_freq) == out


def test_candidate_csv_round_trip():
    pats = parse_pattern_file("Nc.*\nA.*,Nc.*")
    d = doc("nova/nov/Agpfsn metoda/metoda/Ncfsn " * 3)
    cands = extract_candidates(d, pats, min_freq=1)
    buf = io.StringIO()
    write_candidates_csv(cands, buf)
    assert buf.getvalue().splitlines()[0] == "doc_id,area,lemma_seq,surface_seq,pattern_id,length,freq"
    buf.seek(0)
    assert read_candidates_csv(buf) == cands
