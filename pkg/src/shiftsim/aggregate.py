"""Robust central estimators over the T cluster-level hashed estimates.

Two entry-wise reductions: the median (even T averages the two central
order statistics) and the trimmed mean (floor(omega * T) values dropped
from each end before averaging).  Both sort per entry first, so results
are exactly permutation invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import math

import numpy as np

from .model import (
    CENTER_MEDIAN,
    CENTER_TRIMMED,
    DimensionMismatchError,
    HashedEstimate,
    NonFiniteEntryError,
    ShiftSimError,
)


class EmptyInputError(ShiftSimError):
    pass


class TrimTooLargeError(ShiftSimError):
    pass


@dataclass(frozen=True, eq=False)
class CentralEstimate:
    values: np.ndarray
    method: str
    T_used: int
    omega: float | None = None


def _stack(estimates: Sequence[HashedEstimate]) -> np.ndarray:
    if len(estimates) == 0:
        raise EmptyInputError("need at least one cluster estimate")
    dims = {e.dim for e in estimates}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed dimensions {sorted(dims)}")
    stack = np.stack([e.values for e in estimates])
    if not np.all(np.isfinite(stack)):
        raise NonFiniteEntryError("cluster estimates contain non-finite entries")
    return stack


def entrywise_median(estimates: Sequence[HashedEstimate]) -> CentralEstimate:
    """Entry-wise median across clusters."""
    stack = _stack(estimates)
    return CentralEstimate(
        values=np.median(stack, axis=0),
        method=CENTER_MEDIAN,
        T_used=stack.shape[0],
    )


def trim_count(omega: float, T: int) -> int:
    """floor(omega * T), with a guard against float rounding just below an integer."""
    return int(math.floor(omega * T + 1e-9))


def entrywise_trimmed_mean(estimates: Sequence[HashedEstimate], omega: float) -> CentralEstimate:
    """Entry-wise mean after dropping the largest and smallest floor(omega*T) values."""
    if not 0.0 <= omega < 0.5:
        raise ShiftSimError("omega must lie in [0, 0.5)")
    stack = _stack(estimates)
    T = stack.shape[0]
    g = trim_count(omega, T)
    if T - 2 * g < 1:
        raise TrimTooLargeError(f"trimming {g} per side empties T={T} clusters")
    trimmed = np.sort(stack, axis=0)[g : T - g]
    return CentralEstimate(
        values=trimmed.mean(axis=0),
        method=CENTER_TRIMMED,
        T_used=T,
        omega=float(omega),
    )
