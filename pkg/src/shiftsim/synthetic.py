"""Ground-truth generators for the synthetic experiments.

Central distributions (uniform, truncated geometric), the s-sparse
perturbation that reassigns s randomly chosen entries with Uniform[0,1]
draws rescaled to preserve their original mass, and seeded categorical
sampling via inverse CDF.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Distribution, ShiftSimError
from .seeds import derive_seed


class BetaOutOfRangeError(ShiftSimError):
    pass


class SBudgetExceedsDimError(ShiftSimError):
    pass


class DegenerateDrawError(ShiftSimError):
    pass


_REDRAW_LIMIT = 100
_DEGENERATE_SUM = 1e-300


@dataclass(frozen=True, eq=False)
class PerturbationRecord:
    cluster_id: int
    changed_indices: np.ndarray
    original_mass: float


def uniform_central(d: int) -> Distribution:
    if d < 2:
        raise ShiftSimError("d must be at least 2")
    return Distribution(np.full(d, 1.0 / d))


def truncated_geometric_central(d: int, beta: float) -> Distribution:
    """Entries proportional to beta^k, normalized in closed form."""
    if d < 2:
        raise ShiftSimError("d must be at least 2")
    if not 0.0 < beta < 1.0:
        raise BetaOutOfRangeError(f"beta must lie in (0, 1), got {beta}")
    weights = np.power(beta, np.arange(d, dtype=np.float64))
    probs = weights * ((1.0 - beta) / (1.0 - beta**d))
    return Distribution(probs)


def perturb_sparse(
    center: Distribution,
    s: int,
    rng_seed: int,
    cluster_id: int = 0,
) -> tuple[Distribution, PerturbationRecord]:
    """Reassign s random entries with rescaled Uniform[0,1] draws.

    The redrawn values are scaled so their sum equals the original mass of
    the selected entries; unselected entries are copied bit for bit, so the
    output differs from the center in at most s entries.
    """
    d = center.dim
    if not 1 <= s <= d:
        raise SBudgetExceedsDimError(f"s must lie in [1, {d}], got {s}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    chosen = np.sort(rng.choice(d, size=s, replace=False))
    mass = float(center.probs[chosen].sum())
    probs = center.probs.copy()
    if s > 1:
        draws = rng.random(s)
        for _ in range(_REDRAW_LIMIT):
            if draws.sum() > _DEGENERATE_SUM:
                break
            draws = rng.random(s)
        else:
            raise DegenerateDrawError("uniform draws kept summing to ~0")
        probs[chosen] = draws * (mass / draws.sum())
    # s == 1: rescaling a single draw to its own sum is the identity, so the
    # selected entry keeps its exact original value.
    out = Distribution(probs)
    return out, PerturbationRecord(cluster_id=cluster_id, changed_indices=chosen, original_mass=mass)


def generate_clusters(
    center: Distribution,
    s: int,
    T: int,
    master_seed: int,
) -> tuple[list[Distribution], list[PerturbationRecord]]:
    """T independent sparse perturbations with per-cluster derived seeds."""
    truths: list[Distribution] = []
    records: list[PerturbationRecord] = []
    for t in range(T):
        if s == 0:
            truths.append(center)
            records.append(
                PerturbationRecord(
                    cluster_id=t,
                    changed_indices=np.empty(0, dtype=np.int64),
                    original_mass=0.0,
                )
            )
        else:
            truth, record = perturb_sparse(
                center, s, derive_seed(master_seed, "gen", t), cluster_id=t
            )
            truths.append(truth)
            records.append(record)
    return truths, records


def sample_cluster(p: Distribution, n: int, rng_seed: int) -> np.ndarray:
    """n i.i.d. categorical draws as one-hot indices, deterministic in the seed."""
    if n < 1:
        raise ShiftSimError("n must be at least 1")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    cdf = np.cumsum(p.probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)


def dump_truth_csv(path, truths: Sequence[Distribution], names: Sequence[str] | None = None) -> None:
    """One row per cluster, d columns, full double precision.

    ``path`` may also be an open text stream.
    """
    if names is not None and len(names) != len(truths):
        raise ShiftSimError("names and truths must have matching lengths")
    own = not hasattr(path, "write")
    fh = open(path, "w", newline="") if own else path
    try:
        writer = csv.writer(fh)
        for i, dist in enumerate(truths):
            label = names[i] if names is not None else str(i)
            writer.writerow([label] + [repr(float(v)) for v in dist.probs])
    finally:
        if own:
            fh.close()
