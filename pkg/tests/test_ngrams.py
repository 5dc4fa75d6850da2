import itertools
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from shiftsim.ngrams import (
    BadLetterError,
    TextTooShortError,
    corpus_counts,
    corpus_distributions,
    empirical_kgram_distribution,
    kgram_index,
    letter_segments,
    load_corpus,
    normalize_text,
    resample_cluster,
)
from shiftsim.model import ShiftSimError

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "synthtext"


class TestNormalize:
    def test_case_fold_and_strip(self):
        assert normalize_text("AbC!") == "abc"

    def test_empty(self):
        assert normalize_text("") == ""

    def test_apostrophe(self):
        assert normalize_text("don't") == "dont"

    def test_unicode_dropped(self):
        assert normalize_text("café 36 θ") == "caf"

    def test_segments(self):
        assert letter_segments("ab, cd ef!") == ["ab", "cd", "ef"]


class TestKgramIndex:
    def test_examples(self):
        assert kgram_index("aa") == 0
        assert kgram_index("ab") == 1
        assert kgram_index("ba") == 26

    def test_bad_letter(self):
        with pytest.raises(BadLetterError):
            kgram_index("a!")
        with pytest.raises(BadLetterError):
            kgram_index("")

    def test_bijection_k1_k2(self):
        for k in (1, 2):
            seen = {kgram_index("".join(g)) for g in itertools.product("abcdefghijklmnopqrstuvwxyz", repeat=k)}
            assert seen == set(range(26**k))

    def test_bijection_k3_sampled(self):
        rng = np.random.default_rng(3)
        grams = set()
        codes = set()
        for _ in range(2000):
            gram = "".join(chr(97 + c) for c in rng.integers(0, 26, 3))
            grams.add(gram)
            codes.add(kgram_index(gram))
        assert len(codes) == len(grams)
        assert all(0 <= c < 26**3 for c in codes)


class TestEmpiricalDistribution:
    def test_point_mass(self):
        g = empirical_kgram_distribution("aaa", 2)
        assert g.dim == 676
        assert g.dist.probs[0] == 1.0

    def test_abab(self):
        g = empirical_kgram_distribution("abab", 2)
        assert g.dist.probs[kgram_index("ab")] == pytest.approx(2 / 3, abs=1e-15)
        assert g.dist.probs[kgram_index("ba")] == pytest.approx(1 / 3, abs=1e-15)

    def test_window_count(self):
        text = "abcdefghij"
        for k in (1, 2, 3):
            g = empirical_kgram_distribution(text, k)
            counts = np.rint(g.dist.probs * (len(text) - k + 1))
            assert counts.sum() == len(text) - k + 1

    def test_invariant_to_nonletter_padding(self):
        base = empirical_kgram_distribution("hello world", 2)
        padded = empirical_kgram_distribution("?? hello world --\n", 2)
        assert np.array_equal(base.dist.probs, padded.dist.probs)

    def test_k1_matches_counting_oracle(self):
        text = "the quick brown fox jumps over the lazy dog"
        letters = normalize_text(text)
        counter = Counter(letters)
        g = empirical_kgram_distribution(text, 1)
        for ch, cnt in counter.items():
            assert g.dist.probs[kgram_index(ch)] == pytest.approx(cnt / len(letters), abs=1e-15)

    def test_windows_span_gaps_by_default(self):
        joined = empirical_kgram_distribution("ab cd", 2)
        assert joined.dist.probs[kgram_index("bc")] > 0
        broken = empirical_kgram_distribution("ab cd", 2, break_at_gaps=True)
        assert broken.dist.probs[kgram_index("bc")] == 0.0
        assert broken.dist.probs[kgram_index("ab")] == pytest.approx(0.5, abs=1e-15)

    def test_too_short(self):
        with pytest.raises(TextTooShortError):
            empirical_kgram_distribution("a", 2)

    def test_k_capped(self):
        with pytest.raises(ShiftSimError):
            empirical_kgram_distribution("abcdef", 5)


class TestCorpus:
    def test_load_sorted_by_name(self):
        corpus = load_corpus(FIXTURE_DIR)
        assert list(corpus.names) == sorted(corpus.names)
        assert len(corpus.names) == 5
        assert corpus.alphabet_size == 26

    def test_missing_directory(self, tmp_path):
        with pytest.raises(ShiftSimError):
            load_corpus(tmp_path / "nope")

    def test_distributions_and_counts_consistent(self):
        corpus = load_corpus(FIXTURE_DIR)
        dists = corpus_distributions(corpus, 2)
        counts = corpus_counts(corpus, 2)
        for g, c in zip(dists, counts):
            assert np.array_equal(g.dist.probs, c / c.sum())

    def test_resample_deterministic(self):
        corpus = load_corpus(FIXTURE_DIR)
        g = corpus_distributions(corpus, 2)[0]
        a = resample_cluster(g, 500, seed=4)
        b = resample_cluster(g, 500, seed=4)
        assert np.array_equal(a, b)
        assert a.min() >= 0 and a.max() < g.dim

    def test_resample_point_mass(self):
        g = empirical_kgram_distribution("zzzz", 2)
        draws = resample_cluster(g, 50, seed=1)
        assert np.all(draws == kgram_index("zz"))
