"""Shared fixtures: randomized hidden-state docs, a 3-blob point cloud, and a
3-theme synthetic corpus with a constructed theme-separable dump."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from layertopic.corpus import Document
from layertopic.embedding import HiddenStateDoc


def make_random_doc(rng: np.random.Generator, doc_id: int = 0, max_layers: int = 13,
                    max_tokens: int = 32, max_dim: int = 16) -> HiddenStateDoc:
    layers = int(rng.integers(5, max_layers + 1))
    tokens = int(rng.integers(1, max_tokens + 1))
    dim = int(rng.integers(2, max_dim + 1))
    states = rng.normal(0, 2.0, size=(layers, tokens, dim)).astype(np.float32)
    return HiddenStateDoc(doc_id=doc_id, states=states)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240901)


@pytest.fixture
def blobs():
    """300 points, 3 well-separated Gaussian blobs in 10-D, labels attached."""
    gen = np.random.default_rng(42)
    centers = np.zeros((3, 10))
    centers[0, 0] = 10.0
    centers[1, 4] = 10.0
    centers[2, 8] = 10.0
    X = np.vstack([gen.normal(c, 0.5, size=(100, 10)) for c in centers]).astype(np.float32)
    labels = np.repeat(np.arange(3), 100)
    return X, labels


THEME_WORDS = {
    0: [
        "planet", "orbit", "comet", "galaxy", "nebula", "asteroid", "telescope", "lunar",
        "solar", "cosmic", "meteor", "stellar", "quasar", "eclipse", "satellite", "rover",
        "crater", "astronaut", "gravity", "spacecraft", "photon", "plasma", "vacuum",
        "launch", "module", "probe", "horizon", "radiation", "spectrum", "universe",
    ],
    1: [
        "sonata", "violin", "melody", "rhythm", "chord", "tempo", "orchestra", "piano",
        "concerto", "harmony", "cello", "opera", "singer", "quartet", "compose", "lyric",
        "ballad", "chorus", "drummer", "guitar", "trumpet", "flute", "octave", "key",
        "score", "encore", "maestro", "acoustic", "studio", "album",
    ],
    2: [
        "glacier", "tundra", "rainforest", "savanna", "coral", "reef", "wetland", "prairie",
        "canyon", "delta", "estuary", "fjord", "monsoon", "drought", "erosion", "sediment",
        "basin", "plateau", "ridge", "marsh", "lagoon", "dune", "permafrost", "watershed",
        "biome", "habitat", "flora", "fauna", "climate", "terrain",
    ],
}


@dataclass
class ThemeFixture:
    docs: list[Document]
    states: list[HiddenStateDoc]
    theme_of_doc: np.ndarray
    theme_words: dict[int, list[str]]


def build_theme_fixture(
    num_docs: int = 90,
    words_per_doc: int = 20,
    num_layer_slices: int = 5,
    tokens: int = 8,
    hidden_dim: int = 16,
    seed: int = 1234,
    years: tuple[int, int] = (2009, 2021),
) -> ThemeFixture:
    """90 documents over 3 disjoint theme vocabularies, plus a constructed
    hidden-state dump whose states are theme-separable at every layer."""
    gen = np.random.default_rng(seed)
    centers = np.zeros((3, hidden_dim), dtype=np.float64)
    centers[0, 0] = 8.0
    centers[1, 5] = 8.0
    centers[2, 10] = 8.0

    docs: list[Document] = []
    states: list[HiddenStateDoc] = []
    themes = np.repeat(np.arange(3), num_docs // 3)
    year_lo, year_hi = years
    for doc_id, theme in enumerate(themes):
        words = gen.choice(THEME_WORDS[int(theme)], size=words_per_doc, replace=True)
        year = int(year_lo + (doc_id % (year_hi - year_lo + 1)))
        docs.append(Document(doc_id=doc_id, raw_text=" ".join(words), timestamp=year))
        noise = gen.normal(0, 0.4, size=(num_layer_slices, tokens, hidden_dim))
        tensor = (centers[int(theme)][None, None, :] + noise).astype(np.float32)
        states.append(HiddenStateDoc(doc_id=doc_id, states=tensor))
    return ThemeFixture(docs=docs, states=states, theme_of_doc=themes, theme_words=THEME_WORDS)


@pytest.fixture(scope="session")
def theme_fixture() -> ThemeFixture:
    return build_theme_fixture()


@pytest.fixture(scope="session")
def theme_dump(tmp_path_factory, theme_fixture) -> str:
    from layertopic.formats import write_dump

    path = tmp_path_factory.mktemp("dump") / "themes.hsd1"
    write_dump(path, theme_fixture.states)
    return str(path)


@pytest.fixture(scope="session")
def theme_corpus_csv(tmp_path_factory, theme_fixture) -> str:
    import csv

    path = tmp_path_factory.mktemp("corpus") / "themes.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "year"])
        for doc in theme_fixture.docs:
            writer.writerow([doc.raw_text, doc.timestamp])
    return str(path)
