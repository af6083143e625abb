import os
import random
from pathlib import Path

import numpy as np
import pytest

from termlab.corpus import Corpus, Document, Token
from termlab.dataset import AnnotationLabel, Dataset, Instance

AREAS = ("Chemistry", "Computer science", "Political science")

SYNTH_MSDS = ("Ncmsn", "Ncfsg", "Agpmsn", "Sl", "Vmpr3s")
SYNTH_PATTERNS = """\
Nc.*
A.*,Nc.*
Nc.*,Nc.*g.*
Nc.*,Nc.*
A.*,Nc.*,Nc.*g.*
Nc.*,S.*,Nc.*
Nc.*,S.*,Nc.*,Nc.*g.*
A.*,Nc.*,Nc.*,Nc.*
"""


def pytest_addoption(parser):
    parser.addoption("--kas-term", default=os.environ.get("TERMLAB_KAS_TERM"),
                     help="path to the published annotated dataset (CSV or JSON)")
    parser.addoption("--kas-term-header-map", default=os.environ.get("TERMLAB_KAS_TERM_HEADER_MAP"),
                     help="header map file for the published dataset")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.outcome != "passed"):
        return
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "NOT RUN"}[rep.outcome]
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if rep.skipped and isinstance(rep.longrepr, tuple):
        detail = rep.longrepr[2].removeprefix("Skipped: ")
    elif rep.failed and call.excinfo is not None:
        detail = (detail + "; " if detail else "") + str(call.excinfo.value).splitlines()[0]
    results = item.config._criteria.setdefault(marker.args[0], [])
    results.append((status, f"{item.name}: {detail}" if detail else item.name))


def pytest_terminal_summary(terminalreporter, config):
    criteria = getattr(config, "_criteria", {})
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(criteria):
        results = criteria[number]
        statuses = {s for s, _ in results}
        overall = "FAIL" if "FAIL" in statuses else "NOT RUN" if statuses == {"NOT RUN"} else "PASS"
        terminalreporter.write_line(f"criterion {number:>2}: {overall}")
        for status, detail in results:
            terminalreporter.write_line(f"    {status:7} {detail}")


def random_document(rng: random.Random, doc_id: str, area: str = "A", max_tokens: int = 200,
                    n_lemmas: int = 6) -> Document:
    lemmas = [f"l{k}" for k in range(rng.randint(2, n_lemmas))]
    total = rng.randint(1, max_tokens)
    sentences, left = [], total
    while left > 0:
        length = min(left, rng.randint(1, 15))
        sentences.append(tuple(
            Token(f"f{rng.randrange(3)}", rng.choice(lemmas), rng.choice(SYNTH_MSDS))
            for _ in range(length)))
        left -= length
    return Document(doc_id, area, tuple(sentences))


def random_corpus(rng: random.Random, n_docs: int = 4, **kw) -> Corpus:
    return Corpus(tuple(random_document(rng, f"d{k}", AREAS[k % 3], **kw) for k in range(n_docs)))


def synthetic_dataset(seed: int = 0, per_thesis: int = 40, theses_per_area: int = 5,
                      noise=(0.6, 1.2, 0.9)) -> Dataset:
    """A small stand-in for the annotated dataset with a learnable signal.

    A latent termness drives the annotations; statistics are noisy,
    partly non-linear views of it. ``noise`` sets annotator noise per area,
    so area difficulty is controlled.
    """
    rng = np.random.default_rng(seed)
    patterns = ["A.*,Nc.*", "Nc.*,Nc.*g.*", "A.*,Nc.*,Nc.*g.*", "Nc.*,S.*,Nc.*"]
    out = []
    for a, area in enumerate(AREAS):
        for t in range(theses_per_area):
            tid = f"{area[:4].lower()}{t:02d}"
            for k in range(per_thesis):
                length = int(rng.choice([1, 2, 2, 3, 4]))
                pat = int(rng.integers(len(patterns)))
                latent = rng.normal() + (0.8 if pat == 1 else 0.0)
                score = latent + noise[a] * rng.normal(size=4)
                cat = np.digitize(score, [-0.8, 0.0, 0.6])  # 0 irrelevant .. 3 in-domain
                labs = tuple({0: AnnotationLabel.IRRELEVANT, 1: AnnotationLabel.ACADEMIC,
                              2: AnnotationLabel.OUT_OF_DOMAIN,
                              3: AnnotationLabel.IN_DOMAIN}[int(c)] for c in cat)
                freq = float(3 + rng.poisson(np.exp(0.5 * latent + 1)))
                words = [f"w{rng.integers(50)}" for _ in range(length)]
                surface = " ".join("x" * int(max(2, 6 + 2 * latent + rng.normal())) for _ in words)
                stats = {}
                if length >= 2:
                    stats = dict(chisq=float(np.exp(latent + rng.normal())),
                                 dice=float(1 / (1 + np.exp(-latent - rng.normal()))),
                                 mi=float(latent + rng.normal()),
                                 tscore=float(rng.normal()),
                                 ll=float(np.exp(0.5 * latent + rng.normal())))
                out.append(Instance(
                    thesis_id=tid, area=area, round=t + 1, lemma_seq=" ".join(words),
                    surface_seq=surface, pattern=patterns[pat] if length > 1 else "Nc.*",
                    length=length, labels=labs, freq=freq,
                    tfidf=float(freq * (latent + 3 + rng.normal())), **stats))
    return Dataset(tuple(out))


@pytest.fixture(scope="session")
def synth_ds():
    return synthetic_dataset()


@pytest.fixture(scope="session")
def kas_term(request):
    """The published dataset, when available locally; otherwise the test is skipped."""
    from termlab.dataset import load_header_map, read_dataset

    path = request.config.getoption("--kas-term")
    if not path or not Path(path).is_file():
        pytest.skip("published annotated dataset not available "
                    "(pass --kas-term PATH or set TERMLAB_KAS_TERM)")
    hmap_path = request.config.getoption("--kas-term-header-map")
    hmap = load_header_map(hmap_path) if hmap_path else None
    return read_dataset(path, header_map=hmap)
