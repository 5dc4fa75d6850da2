"""Baselines, error metrics, and heterogeneity diagnostics.

The baseline estimator is the debiased hashed estimate, applied per cluster
("local") or to the pooled sample-size-weighted frequency ("global").  The
error measure is the average over clusters of the squared l2 (and l1)
distance to the true distributions.

Tail probabilities come from scipy.special: the chi-squared p-value is the
regularized upper incomplete gamma function gammaincc(dof/2, stat/2) and the
two-sided normal p-value is erfc(|z|/sqrt(2)); both are checked against
reference values to 1e-10 in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfc, gammaincc

from .codec import debias
from .model import DimensionMismatchError, Distribution, HashedEstimate, ShiftSimError


class DegenerateCountsError(ShiftSimError):
    pass


def baseline_local(estimates: Sequence[HashedEstimate], bits: int) -> list[np.ndarray]:
    """Debiased per-cluster estimates, no collaboration."""
    return [debias(e.values, bits) for e in estimates]


def baseline_global(estimates: Sequence[HashedEstimate], bits: int) -> np.ndarray:
    """Debias of the pooled frequency (sample-size-weighted mean of the b-checks)."""
    if len(estimates) == 0:
        raise ShiftSimError("need at least one cluster estimate")
    weights = np.array([e.sample_size for e in estimates], dtype=np.float64)
    stack = np.stack([e.values for e in estimates])
    pooled = weights @ stack / weights.sum()
    return debias(pooled, bits)


@dataclass(frozen=True, eq=False)
class MetricSummary:
    avg_l2_sq: float
    avg_l1: float
    per_cluster_l2_sq: np.ndarray
    per_cluster_l1: np.ndarray
    runs: int = 1
    stderr_l2_sq: float = 0.0
    stderr_l1: float = 0.0

    @staticmethod
    def aggregate(summaries: Sequence["MetricSummary"]) -> "MetricSummary":
        """Combine single-run summaries; stderr is over the run means."""
        if not summaries:
            raise ShiftSimError("nothing to aggregate")
        l2 = np.array([s.avg_l2_sq for s in summaries])
        l1 = np.array([s.avg_l1 for s in summaries])
        r = len(summaries)
        return MetricSummary(
            avg_l2_sq=float(l2.mean()),
            avg_l1=float(l1.mean()),
            per_cluster_l2_sq=l2,
            per_cluster_l1=l1,
            runs=r,
            stderr_l2_sq=float(l2.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0,
            stderr_l1=float(l1.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0,
        )


def metrics(truth: Sequence[Distribution], estimates: Sequence[np.ndarray]) -> MetricSummary:
    """Average l2^2 and l1 estimation errors over clusters."""
    if len(truth) != len(estimates):
        raise DimensionMismatchError(f"{len(truth)} truths vs {len(estimates)} estimates")
    l2_sq = np.empty(len(truth))
    l1 = np.empty(len(truth))
    for i, (p, est) in enumerate(zip(truth, estimates)):
        est = np.asarray(est, dtype=np.float64)
        if est.shape != p.probs.shape:
            raise DimensionMismatchError(f"cluster {i}: {est.shape} vs {p.probs.shape}")
        diff = est - p.probs
        l2_sq[i] = float(diff @ diff)
        l1[i] = float(np.abs(diff).sum())
    return MetricSummary(
        avg_l2_sq=float(l2_sq.mean()),
        avg_l1=float(l1.mean()),
        per_cluster_l2_sq=l2_sq,
        per_cluster_l1=l1,
    )


def heterogeneity_gap(truths: Sequence[Distribution]) -> float:
    """T^-1 sum over clusters of ||p^t - mean distribution||_2^2.

    The large-n error plateau of the pooled baseline under heterogeneity.
    """
    stack = np.stack([p.probs for p in truths])
    deltas = stack - stack.mean(axis=0)
    return float((deltas * deltas).sum(axis=1).mean())


def chi2_sf(stat: float, dof: int) -> float:
    """Chi-squared survival function via the regularized incomplete gamma."""
    if dof < 1:
        raise DegenerateCountsError("chi-squared needs at least 1 degree of freedom")
    return float(gammaincc(dof / 2.0, stat / 2.0))


def normal_two_sided_p(z: float) -> float:
    """Two-sided standard normal p-value via the complementary error function."""
    return float(erfc(abs(z) / math.sqrt(2.0)))


def two_sample_chi_squared(
    counts_u: np.ndarray,
    counts_v: np.ndarray,
    min_expected: float = 5.0,
) -> tuple[float, float, int]:
    """Two-sample chi-squared test with small-bin pooling.

    Expected counts per sample come from the pooled proportions; bins whose
    smaller expected count falls below ``min_expected`` are merged into one
    composite bin, and the degrees of freedom are (kept bins - 1).  Returns
    (statistic, p-value, dof).
    """
    u = np.asarray(counts_u, dtype=np.float64)
    v = np.asarray(counts_v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"{u.shape} vs {v.shape}")
    if np.any(u < 0) or np.any(v < 0):
        raise DegenerateCountsError("counts must be nonnegative")
    nu, nv = u.sum(), v.sum()
    if nu <= 0 or nv <= 0:
        raise DegenerateCountsError("each sample needs a positive total count")
    pooled = u + v
    keep = pooled > 0
    eu = nu * pooled / (nu + nv)
    ev = nv * pooled / (nu + nv)
    small = keep & (np.minimum(eu, ev) < min_expected)
    big = keep & ~small
    obs_u = list(u[big])
    obs_v = list(v[big])
    exp_u = list(eu[big])
    exp_v = list(ev[big])
    if np.any(small):
        obs_u.append(u[small].sum())
        obs_v.append(v[small].sum())
        exp_u.append(eu[small].sum())
        exp_v.append(ev[small].sum())
    bins = len(obs_u)
    if bins < 2:
        raise DegenerateCountsError("fewer than 2 usable bins after pooling")
    ou = np.array(obs_u)
    ov = np.array(obs_v)
    xu = np.array(exp_u)
    xv = np.array(exp_v)
    stat = float(((ou - xu) ** 2 / xu).sum() + ((ov - xv) ** 2 / xv).sum())
    dof = bins - 1
    return stat, chi2_sf(stat, dof), dof


def pairwise_chi_squared(counts: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Chi-squared statistic and p-value for every unordered cluster pair.

    Returns symmetric (T, T) matrices; the diagonal holds 0 and 1.
    """
    T = len(counts)
    stats = np.zeros((T, T))
    pvals = np.ones((T, T))
    for i in range(T):
        for j in range(i + 1, T):
            stat, p, _ = two_sample_chi_squared(counts[i], counts[j])
            stats[i, j] = stats[j, i] = stat
            pvals[i, j] = pvals[j, i] = p
    return stats, pvals


def entrywise_tests(counts: Sequence[np.ndarray], level: float = 0.05) -> float:
    """Fraction of rejected two-proportion z-tests over all (pair, entry) cells.

    Entries where both clusters have zero counts are skipped and excluded
    from the denominator; pooled-variance z statistic, two-sided.
    """
    T = len(counts)
    if T < 2:
        raise DegenerateCountsError("need at least two clusters")
    arrs = [np.asarray(c, dtype=np.float64) for c in counts]
    totals = [a.sum() for a in arrs]
    if any(t <= 0 for t in totals):
        raise DegenerateCountsError("each cluster needs a positive total count")
    tested = 0
    rejected = 0
    for i in range(T):
        for j in range(i + 1, T):
            ci, cj = arrs[i], arrs[j]
            ni, nj = totals[i], totals[j]
            used = (ci + cj) > 0
            pi = ci[used] / ni
            pj = cj[used] / nj
            pooled = (ci[used] + cj[used]) / (ni + nj)
            var = pooled * (1.0 - pooled) * (1.0 / ni + 1.0 / nj)
            z = np.zeros(pi.size)
            ok = var > 0
            z[ok] = (pi[ok] - pj[ok]) / np.sqrt(var[ok])
            pvals = erfc(np.abs(z) / math.sqrt(2.0))
            tested += pvals.size
            rejected += int(np.count_nonzero(pvals < level))
    if tested == 0:
        raise DegenerateCountsError("no testable entries")
    return rejected / tested
