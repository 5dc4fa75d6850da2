#!/usr/bin/env python3
"""Generate the bundled 5-cluster synthetic text fixture.

Each cluster is letter text drawn from an order-1 Markov chain over a..z.
All clusters share a skewed base chain; each cluster additionally boosts a
handful of its own transition pairs, so bigram distributions agree on most
entries but differ strongly on a few. Output: tests/fixtures/synthtext/*.txt
(already committed; rerun only to regenerate).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

CLUSTERS = 5
LENGTH = 60_000
SEED = 20240521
BOOSTED_PAIRS = 8
BOOST = 4.0
OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "synthtext"


def build_transitions(rng: np.random.Generator, cluster: int) -> np.ndarray:
    base_rng = np.random.Generator(np.random.PCG64(SEED))
    letter_weights = base_rng.gamma(shape=0.8, scale=1.0, size=26) + 0.05
    trans = np.tile(letter_weights, (26, 1))
    # shared hotspots so the base chain has bigram structure of its own
    for _ in range(40):
        c, n = base_rng.integers(0, 26, size=2)
        trans[c, n] *= 4.0
    # cluster-specific heterogeneity
    for _ in range(BOOSTED_PAIRS):
        c, n = rng.integers(0, 26, size=2)
        trans[c, n] *= BOOST
    return trans / trans.sum(axis=1, keepdims=True)


def sample_text(rng: np.random.Generator, trans: np.ndarray, length: int) -> str:
    letters = np.empty(length, dtype=np.int64)
    cdfs = np.cumsum(trans, axis=1)
    cdfs[:, -1] = 1.0
    state = int(rng.integers(0, 26))
    uniforms = rng.random(length)
    for i in range(length):
        state = int(np.searchsorted(cdfs[state], uniforms[i], side="right"))
        letters[i] = state
    chars = (letters + 97).astype(np.uint8).tobytes().decode("ascii")
    # break into space-separated chunks and lines; normalization strips these
    words = [chars[i : i + 6] for i in range(0, len(chars), 6)]
    lines = [" ".join(words[i : i + 10]) for i in range(0, len(words), 10)]
    return "\n".join(lines) + "\n"


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for t in range(CLUSTERS):
        rng = np.random.Generator(np.random.PCG64([SEED, t + 1]))
        trans = build_transitions(rng, t)
        text = sample_text(rng, trans, LENGTH)
        (OUT_DIR / f"cluster{t}.txt").write_text(text, encoding="ascii")
        print(f"wrote cluster{t}.txt ({LENGTH} letters)")


if __name__ == "__main__":
    main()
