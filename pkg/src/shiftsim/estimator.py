"""The two-stage estimator: robust collaboration, then per-cluster fine-tuning.

Stage I reduces all hashed estimates to one robust central vector.  Stage II
keeps the central value at entry k for cluster t only when

    |central_k - local_k| <= sqrt(alpha * local_k / n)

and keeps the local value otherwise; the same data feeds both stages (no
sample splitting).  Results are debiased entry-wise before being returned.
The same rule with the new cluster's sample size transfers a learned center
to a cluster that was not part of stage I.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .aggregate import CentralEstimate, entrywise_median, entrywise_trimmed_mean
from .codec import debias
from .model import (
    CENTER_MEDIAN,
    DimensionMismatchError,
    FineTuneReport,
    HashedEstimate,
    NonPositiveAlphaError,
    ShiftConfig,
)


def default_alpha(sample_size: int) -> float:
    """ln(n), the threshold scale the analysis calls for."""
    return math.log(sample_size)


def _central_values(central: CentralEstimate | np.ndarray) -> np.ndarray:
    return central.values if isinstance(central, CentralEstimate) else np.asarray(central)


def fine_tune(
    central: CentralEstimate | np.ndarray,
    local: HashedEstimate,
    alpha: float,
    keep_thresholds: bool = False,
) -> tuple[np.ndarray, FineTuneReport]:
    """Mix the central and local estimates entry by entry.

    Returns the fine-tuned vector (still on the hashed scale, not debiased)
    and the report recording which entries adopted the central value.
    """
    if not alpha > 0:
        raise NonPositiveAlphaError(f"alpha must be positive, got {alpha}")
    c = _central_values(central)
    if c.shape != local.values.shape:
        raise DimensionMismatchError(f"center {c.shape} vs local {local.values.shape}")
    thresholds = np.sqrt(alpha * local.values / local.sample_size)
    keep = np.abs(c - local.values) <= thresholds
    tuned = np.where(keep, c, local.values)
    report = FineTuneReport(
        kept_central=np.flatnonzero(keep),
        dim=local.dim,
        alpha_used=float(alpha),
        thresholds=thresholds if keep_thresholds else None,
    )
    return tuned, report


def robust_center(estimates: Sequence[HashedEstimate], config: ShiftConfig) -> CentralEstimate:
    if config.center == CENTER_MEDIAN:
        return entrywise_median(estimates)
    return entrywise_trimmed_mean(estimates, config.omega)


def _finalize(tuned: np.ndarray, bits: int, renormalize: bool) -> np.ndarray:
    est = debias(tuned, bits)
    if renormalize:
        total = est.sum()
        if total > 0:
            est = est / total
    return est


def shift_estimate(
    estimates: Sequence[HashedEstimate],
    config: ShiftConfig,
) -> tuple[list[np.ndarray], list[FineTuneReport]]:
    """Run both stages for every cluster; returns final estimates and reports."""
    center = robust_center(estimates, config)
    finals: list[np.ndarray] = []
    reports: list[FineTuneReport] = []
    for local in estimates:
        alpha = config.alpha if config.alpha is not None else default_alpha(local.sample_size)
        tuned, report = fine_tune(center, local, alpha)
        finals.append(_finalize(tuned, config.bits, config.renormalize_output))
        reports.append(report)
    return finals, reports


def transfer_to_new_cluster(
    central: CentralEstimate | np.ndarray,
    new_local: HashedEstimate,
    alpha: float | None = None,
) -> np.ndarray:
    """Adapt a learned center to a cluster that did not contribute to it.

    The fine-tuning threshold uses the new cluster's own sample size; alpha
    defaults to ln of that size.
    """
    if alpha is None:
        alpha = default_alpha(new_local.sample_size)
    tuned, _ = fine_tune(central, new_local, alpha)
    return debias(tuned, new_local.bits)
