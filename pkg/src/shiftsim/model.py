"""Domain types shared by the estimation and experiment modules.

A ``Distribution`` is a validated point on the probability simplex.
Estimate vectors are plain float64 ndarrays: final estimates are entry-wise
projected to [0, 1] but deliberately not renormalized, so they need no
simplex invariant of their own.  All types here are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIMPLEX_ATOL = 1e-9
COUNT_ATOL = 1e-12
MAX_BITS = 20


class ShiftSimError(ValueError):
    """Base for all validation and contract errors raised by this package."""


class DimensionTooSmallError(ShiftSimError):
    pass


class NegativeEntryError(ShiftSimError):
    pass


class SumNotOneError(ShiftSimError):
    def __init__(self, deviation: float):
        super().__init__(f"entries sum to 1 {deviation:+.3e} (tolerance {SIMPLEX_ATOL})")
        self.deviation = deviation


class NonFiniteEntryError(ShiftSimError):
    pass


class DimensionMismatchError(ShiftSimError):
    pass


class NonPositiveAlphaError(ShiftSimError):
    pass


def _as_readonly_f64(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Distribution:
    """A d-dimensional discrete probability distribution, d >= 2."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _as_readonly_f64(self.probs)
        if arr.ndim != 1 or arr.size < 2:
            raise DimensionTooSmallError(f"need a 1-d vector with d >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntryError("distribution entries must be finite")
        if np.any(arr < 0.0):
            k = int(np.argmin(arr))
            raise NegativeEntryError(f"entry {k} is negative ({arr[k]!r})")
        deviation = float(arr.sum() - 1.0)
        if abs(deviation) > SIMPLEX_ATOL:
            raise SumNotOneError(deviation)
        object.__setattr__(self, "probs", arr)

    @property
    def dim(self) -> int:
        return self.probs.size


def validate_distribution(raw) -> Distribution:
    """Validate a raw vector as a simplex point; never renormalizes."""
    return Distribution(np.asarray(raw, dtype=np.float64))


def sparsity_distance(a, b, tol: float = 0.0) -> int:
    """Number of entries where ``a`` and ``b`` differ by more than ``tol``."""
    if tol < 0:
        raise ShiftSimError("tol must be nonnegative")
    av = a.probs if isinstance(a, Distribution) else np.asarray(a, dtype=np.float64)
    bv = b.probs if isinstance(b, Distribution) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise DimensionMismatchError(f"shapes {av.shape} and {bv.shape}")
    return int(np.count_nonzero(np.abs(av - bv) > tol))


@dataclass(frozen=True, eq=False)
class HashedEstimate:
    """Decoded per-cluster frequency vector b-check with its provenance.

    Entry k equals N_k / sample_size for an integer match count N_k, which
    is validated at construction.
    """

    values: np.ndarray
    sample_size: int
    bits: int
    cluster_id: int
    seed: int

    def __post_init__(self):
        arr = _as_readonly_f64(self.values)
        n = int(self.sample_size)
        if n < 1:
            raise ShiftSimError("sample_size must be positive")
        if not 1 <= int(self.bits) <= MAX_BITS:
            raise ShiftSimError(f"bits must be in [1, {MAX_BITS}]")
        if arr.ndim != 1 or arr.size < 2:
            raise DimensionTooSmallError("hashed estimate needs d >= 2")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntryError("hashed estimate entries must be finite")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ShiftSimError("hashed estimate entries must lie in [0, 1]")
        # count/n stored as float64 round-trips to the count with error
        # <= count * 2^-52, so the integrality tolerance scales with n
        scaled = arr * n
        if np.max(np.abs(scaled - np.rint(scaled))) > max(COUNT_ATOL, n * 1e-15):
            raise ShiftSimError("entries must be integer counts divided by sample_size")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "sample_size", n)

    @property
    def dim(self) -> int:
        return self.values.size

    def counts(self) -> np.ndarray:
        return np.rint(self.values * self.sample_size).astype(np.int64)


CENTER_MEDIAN = "median"
CENTER_TRIMMED = "trimmed"


@dataclass(frozen=True)
class ShiftConfig:
    """Estimator hyperparameters.

    ``alpha=None`` means the default threshold ln(n) is resolved against the
    sample size when the estimator runs.  ``omega`` only matters for the
    trimmed-mean center.
    """

    bits: int
    alpha: float | None = None
    center: str = CENTER_MEDIAN
    omega: float = 0.1
    master_seed: int = 0
    renormalize_output: bool = False

    def __post_init__(self):
        if not 1 <= int(self.bits) <= MAX_BITS:
            raise ShiftSimError(f"bits must be in [1, {MAX_BITS}]")
        if self.alpha is not None and not self.alpha > 0:
            raise NonPositiveAlphaError(f"alpha must be positive, got {self.alpha}")
        if self.center not in (CENTER_MEDIAN, CENTER_TRIMMED):
            raise ShiftSimError(f"unknown center {self.center!r}")
        if not 0.0 <= self.omega < 0.5:
            raise ShiftSimError("omega must lie in [0, 0.5)")


@dataclass(frozen=True)
class HeterogeneitySpec:
    """Problem-size knobs: sparsity budget s, cluster count T, samples n."""

    s: int
    T: int
    n: int

    def __post_init__(self):
        if self.s < 0:
            raise ShiftSimError("s must be nonnegative")
        if self.T < 1:
            raise ShiftSimError("T must be at least 1")
        if self.n < 1:
            raise ShiftSimError("n must be at least 1")


@dataclass(frozen=True, eq=False)
class FineTuneReport:
    """Partition produced by one cluster's fine-tuning pass.

    ``kept_central`` holds the sorted entry indices where the central value
    was adopted; every other entry kept the local estimate.
    """

    kept_central: np.ndarray
    dim: int
    alpha_used: float
    thresholds: np.ndarray | None = field(default=None)

    def __post_init__(self):
        idx = np.asarray(self.kept_central, dtype=np.int64)
        object.__setattr__(self, "kept_central", idx)

    @property
    def replaced_count(self) -> int:
        return self.dim - self.kept_central.size
