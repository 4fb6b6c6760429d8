"""Shared fixtures: the tiny hand-traced model and the synthetic language.

The synthetic language keeps within-word character transitions sparse (each
letter may only be followed by 3 letters) so that boundary symbols carry
visibly higher transition freedom than word-internal symbols, the same shape
natural languages show.
"""
import random
import time
from collections import Counter

import pytest

import freetok as ft

SYNTH_SEED = 20260809
HELD_OUT_SEED = 99
ALPHABET = "abcdefghijklmnopqrstuvwxyz"
PUNCT = ".,!?"


def make_vocabulary(rng, size=200, alphabet=ALPHABET, fanout=3,
                    min_len=3, max_len=8):
    """Random words sampled as walks on a sparse letter-successor graph."""
    successors = {c: rng.sample(alphabet, fanout) for c in alphabet}
    words = set()
    while len(words) < size:
        length = rng.randint(min_len, max_len)
        word = rng.choice(alphabet)
        while len(word) < length:
            word += rng.choice(successors[word[-1]])
        words.add(word)
    return sorted(words)


def make_lines(rng, vocab, count, min_words=5, max_words=12):
    """Sentences: 5-12 vocabulary words joined by spaces, trailing punctuation."""
    lines = []
    for _ in range(count):
        words = rng.choices(vocab, k=rng.randint(min_words, max_words))
        lines.append(" ".join(words) + rng.choice(PUNCT))
    return lines


@pytest.fixture
def tiny_model():
    """The worked example model: one line 'ab ab ac', unigrams only."""
    return ft.NGramModel(max_n=1).train(["ab ab ac"])


@pytest.fixture
def tiny_model2():
    return ft.NGramModel(max_n=2).train(["ab ab ac"])


@pytest.fixture(scope="session")
def synth_vocab():
    return make_vocabulary(random.Random(SYNTH_SEED))


@pytest.fixture(scope="session")
def synth_train_lines(synth_vocab):
    return make_lines(random.Random(SYNTH_SEED), synth_vocab, 10000)


@pytest.fixture(scope="session")
def synth_held_out(synth_vocab):
    return make_lines(random.Random(HELD_OUT_SEED), synth_vocab, 100)


@pytest.fixture(scope="session")
def synth_timings():
    return {}


@pytest.fixture(scope="session")
def synth_model(synth_train_lines, synth_timings):
    start = time.perf_counter()
    model = ft.NGramModel(max_n=2).train(synth_train_lines)
    synth_timings["train"] = time.perf_counter() - start
    return model


@pytest.fixture(scope="session")
def synth_lexicon(synth_train_lines):
    """The true vocabulary with its corpus frequencies, plus delimiters."""
    counts = Counter()
    for line in synth_train_lines:
        counts.update(line[:-1].split(" "))
    return ft.Lexicon(dict(counts)).with_delimiters()


# The English-language grid: dvf pair, 14 rank sets, 5 compression levels,
# tokenization thresholds 0.1..0.9.
ENGLISH_GRID = ft.GridSpec(
    metric_pairs=[("dvf-", "dvf+")],
    n_sets=[(1,), (2,), (3,), (4,), (5,), (6,), (7,), (1, 2), (2, 3), (1, 2, 3),
            (1, 2, 3, 4), (4, 5, 6, 7), (1, 2, 3, 4, 5), (1, 2, 3, 4, 5, 6, 7)],
    compressions=[0, 0.0001, 0.001, 0.01, 0.1],
    thresholds=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])


@pytest.fixture(scope="session")
def synth_grid_rows(synth_model, synth_held_out, synth_timings):
    start = time.perf_counter()
    rows = ft.grid_search(synth_model, synth_held_out, ft.DelimiterTokenizer(),
                          ENGLISH_GRID)
    synth_timings["grid"] = time.perf_counter() - start
    return rows


@pytest.fixture(scope="session")
def synth_winning_config(synth_grid_rows):
    best = ft.best_row(synth_grid_rows)
    return ft.TokenizerConfig.from_mnemonics(
        f"{best.b_metric},{best.f_metric}", n_set=best.n_set,
        threshold=best.threshold, compression=best.compression)
