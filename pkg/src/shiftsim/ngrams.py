"""Letter k-gram distributions from text corpora.

Normalization lowercases and strips everything outside a..z; by default the
survivors are concatenated, so k-gram windows may span former punctuation or
whitespace (pass ``break_at_gaps=True`` to count windows per contiguous
letter run instead).  A corpus is a directory of .txt files, one cluster per
file, and each cluster's empirical k-gram frequency is treated as its ground
truth distribution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Distribution, ShiftSimError
from .synthetic import sample_cluster

ALPHABET = "abcdefghijklmnopqrstuvwxyz"
ALPHABET_SIZE = 26
MAX_GRAM = 4  # 26^4 = 456,976 entries; larger blows up memory

_NON_LETTER = re.compile(r"[^a-z]+")


class BadLetterError(ShiftSimError):
    pass


class TextTooShortError(ShiftSimError):
    pass


@dataclass(frozen=True, eq=False)
class KGramDistribution:
    k: int
    dim: int
    dist: Distribution


@dataclass(frozen=True)
class Corpus:
    names: tuple[str, ...]
    texts: tuple[str, ...]
    alphabet_size: int = ALPHABET_SIZE


def normalize_text(raw: str) -> str:
    """Lowercase and drop every non a..z character."""
    return _NON_LETTER.sub("", raw.lower())


def letter_segments(raw: str) -> list[str]:
    """Contiguous letter runs of the normalized text, gaps preserved as breaks."""
    return [seg for seg in _NON_LETTER.split(raw.lower()) if seg]


def kgram_index(gram: str) -> int:
    """Base-26 positional code of a k-letter gram, first letter most significant."""
    if not gram:
        raise BadLetterError("empty gram")
    code = 0
    for ch in gram:
        pos = ord(ch) - 97
        if not 0 <= pos < 26:
            raise BadLetterError(f"{ch!r} is not a lowercase letter")
        code = code * 26 + pos
    return code


def _check_k(k: int) -> None:
    if not 1 <= k <= MAX_GRAM:
        raise ShiftSimError(f"k must lie in [1, {MAX_GRAM}]")


def _window_codes(letters: str, k: int) -> np.ndarray:
    codes = np.frombuffer(letters.encode("ascii"), dtype=np.uint8).astype(np.int64) - 97
    if np.any(codes < 0) or np.any(codes >= 26):
        raise BadLetterError("text contains non a..z characters after normalization")
    m = codes.size - k + 1
    out = np.zeros(m, dtype=np.int64)
    for j in range(k):
        out *= 26
        out += codes[j : j + m]
    return out


def empirical_kgram_distribution(text: str, k: int, break_at_gaps: bool = False) -> KGramDistribution:
    """Sliding-window k-gram counts of a raw text, normalized to a Distribution."""
    _check_k(k)
    segments = letter_segments(text) if break_at_gaps else [normalize_text(text)]
    dim = 26**k
    counts = np.zeros(dim, dtype=np.int64)
    total = 0
    for seg in segments:
        if len(seg) < k:
            continue
        codes = _window_codes(seg, k)
        counts += np.bincount(codes, minlength=dim)
        total += codes.size
    if total == 0:
        raise TextTooShortError(f"no k-gram window of length {k} fits the text")
    return KGramDistribution(k=k, dim=dim, dist=Distribution(counts / total))


def load_corpus(directory) -> Corpus:
    """Read every .txt file of a directory; cluster name = file stem."""
    paths = sorted(Path(directory).glob("*.txt"))
    if not paths:
        raise ShiftSimError(f"no .txt files found in {directory}")
    names = tuple(p.stem for p in paths)
    texts = tuple(p.read_text(encoding="utf-8", errors="ignore") for p in paths)
    return Corpus(names=names, texts=texts)


def corpus_distributions(corpus: Corpus, k: int, break_at_gaps: bool = False) -> list[KGramDistribution]:
    return [empirical_kgram_distribution(text, k, break_at_gaps) for text in corpus.texts]


def corpus_counts(corpus: Corpus, k: int, break_at_gaps: bool = False) -> list[np.ndarray]:
    """Raw k-gram count vectors per cluster (for the heterogeneity tests)."""
    _check_k(k)
    dim = 26**k
    out = []
    for text in corpus.texts:
        segments = letter_segments(text) if break_at_gaps else [normalize_text(text)]
        counts = np.zeros(dim, dtype=np.int64)
        got_any = False
        for seg in segments:
            if len(seg) < k:
                continue
            counts += np.bincount(_window_codes(seg, k), minlength=dim)
            got_any = True
        if not got_any:
            raise TextTooShortError(f"no k-gram window of length {k} fits a cluster text")
        out.append(counts)
    return out


def resample_cluster(gt: KGramDistribution, n: int, seed: int) -> np.ndarray:
    """Draw n datapoints with replacement from a cluster's empirical distribution."""
    return sample_cluster(gt.dist, n, seed)
