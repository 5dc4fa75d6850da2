import numpy as np
import pytest

from shiftsim.codec import debias, decode_cluster, encode_cluster, hashed_mean
from shiftsim.evaluation import (
    DegenerateCountsError,
    MetricSummary,
    baseline_global,
    baseline_local,
    chi2_sf,
    entrywise_tests,
    heterogeneity_gap,
    metrics,
    normal_two_sided_p,
    pairwise_chi_squared,
    two_sample_chi_squared,
)
from shiftsim.estimator import shift_estimate
from shiftsim.model import Distribution, DimensionMismatchError, HashedEstimate, ShiftConfig
from shiftsim.synthetic import generate_clusters, sample_cluster, uniform_central

# reference values computed with mpmath (40 digits); scipy.special backs the
# implementations and must agree to 1e-10
CHI2_SF_REFERENCE = [
    (3.841458820694124, 1, 0.05000000000000005743536969),
    (10.0, 5, 0.07523524614651217872207687),
    (0.5, 2, 0.7788007830714048682451703),
    (100.0, 80, 0.06457036892113297576169056),
    (25.0, 10, 0.005345505487134064299327981),
    (1.0, 1, 0.3173105078629141028295349),
]
NORMAL_P_REFERENCE = [
    (1.959963984540054, 0.05000000000000002175233605),
    (0.5, 0.6170750774519737927245908),
    (3.7, 0.0002155994669547765229626711),
    (0.0, 1.0),
    (2.575829303548901, 0.009999999999999998054637126),
]


def make_hashed(p, n, cluster_id, seed, bits=2):
    data = sample_cluster(p, n, seed)
    symbols = encode_cluster(data, cluster_id, seed + 1, bits)
    return decode_cluster(symbols, cluster_id, seed + 1, bits, p.dim)


class TestSpecialFunctions:
    def test_chi2_sf_reference(self):
        for stat, dof, expected in CHI2_SF_REFERENCE:
            assert chi2_sf(stat, dof) == pytest.approx(expected, abs=1e-10)

    def test_normal_p_reference(self):
        for z, expected in NORMAL_P_REFERENCE:
            assert normal_two_sided_p(z) == pytest.approx(expected, abs=1e-10)
            assert normal_two_sided_p(-z) == pytest.approx(expected, abs=1e-10)


class TestBaselines:
    def test_local_is_debiased_estimate(self):
        rng = np.random.default_rng(3)
        ests = [HashedEstimate(rng.integers(0, 101, 12) / 100, 100, 2, t, 0) for t in range(4)]
        locals_ = baseline_local(ests, 2)
        for est, out in zip(ests, locals_):
            assert np.array_equal(out, debias(est.values, 2))

    def test_local_equals_single_cluster_shift(self):
        rng = np.random.default_rng(5)
        ests = [HashedEstimate(rng.integers(0, 101, 12) / 100, 100, 2, t, 0) for t in range(3)]
        locals_ = baseline_local(ests, 2)
        for est, out in zip(ests, locals_):
            finals, _ = shift_estimate([est], ShiftConfig(bits=2))
            assert np.array_equal(finals[0], out)

    def test_global_single_cluster_equals_local(self):
        rng = np.random.default_rng(7)
        est = HashedEstimate(rng.integers(0, 101, 12) / 100, 100, 2, 0, 0)
        assert np.array_equal(baseline_global([est], 2), baseline_local([est], 2)[0])

    def test_global_matches_pooled_recount(self):
        # equal n: pooled counts across clusters == n*T times the weighted mean
        p = uniform_central(6)
        ests = [make_hashed(p, 500, t, seed=100 + t) for t in range(3)]
        pooled_counts = sum(e.counts() for e in ests)
        pooled_freq = pooled_counts / (3 * 500)
        expected = debias(pooled_freq, 2)
        assert np.allclose(baseline_global(ests, 2), expected, atol=1e-12)

    def test_global_weighted_by_sample_size(self):
        p = uniform_central(6)
        big = make_hashed(p, 1000, 0, seed=11)
        small = make_hashed(p, 250, 1, seed=13)
        pooled_counts = big.counts() + small.counts()
        expected = debias(pooled_counts / 1250, 2)
        assert np.allclose(baseline_global([big, small], 2), expected, atol=1e-12)

    def test_local_error_matches_variance_formula(self):
        # homogeneous uniform, d=300, b=2: avg error within [0.5, 2]x of the
        # closed-form sum of debiased binomial variances
        p = uniform_central(300)
        n, bits = 100_000, 2
        ests = [make_hashed(p, n, t, seed=400 + t, bits=bits) for t in range(8)]
        summary = metrics([p] * 8, baseline_local(ests, bits))
        b = hashed_mean(p, bits)
        ratio = 2**bits / (2**bits - 1)
        predicted = float(ratio**2 * np.sum(b * (1 - b)) / n)
        assert 0.5 * predicted <= summary.avg_l2_sq <= 2.0 * predicted

    def test_global_error_decreases_with_n(self):
        p = uniform_central(50)
        errs = []
        for n in (10_000, 100_000):
            ests = [make_hashed(p, n, t, seed=n + t) for t in range(5)]
            summary = metrics([p] * 5, [baseline_global(ests, 2)] * 5)
            errs.append(summary.avg_l2_sq)
        assert errs[1] < errs[0]


class TestMetrics:
    def test_exact_match_gives_zero(self):
        p = uniform_central(10)
        summary = metrics([p, p], [p.probs.copy(), p.probs.copy()])
        assert summary.avg_l2_sq == 0.0 and summary.avg_l1 == 0.0

    def test_single_entry_off(self):
        p = uniform_central(10)
        est = p.probs.copy()
        est[3] += 0.1
        summary = metrics([p, p], [est, p.probs.copy()])
        assert summary.avg_l2_sq == pytest.approx(0.005, abs=1e-15)
        assert summary.avg_l1 == pytest.approx(0.05, abs=1e-15)

    def test_decomposable_and_permutation_equivariant(self):
        rng = np.random.default_rng(11)
        truths = []
        ests = []
        for _ in range(6):
            raw = rng.random(8)
            truths.append(Distribution(raw / raw.sum()))
            ests.append(rng.random(8))
        summary = metrics(truths, ests)
        assert summary.avg_l2_sq == pytest.approx(summary.per_cluster_l2_sq.mean(), abs=1e-12)
        perm = rng.permutation(6)
        shuffled = metrics([truths[i] for i in perm], [ests[i] for i in perm])
        assert np.array_equal(np.sort(shuffled.per_cluster_l2_sq), np.sort(summary.per_cluster_l2_sq))
        assert shuffled.avg_l2_sq == pytest.approx(summary.avg_l2_sq, rel=1e-12)

    def test_dimension_checks(self):
        p = uniform_central(4)
        with pytest.raises(DimensionMismatchError):
            metrics([p], [np.zeros(5)])
        with pytest.raises(DimensionMismatchError):
            metrics([p, p], [p.probs.copy()])

    def test_aggregate_runs(self):
        p = uniform_central(4)
        singles = [metrics([p], [p.probs + 0.0]) for _ in range(3)]
        agg = MetricSummary.aggregate(singles)
        assert agg.runs == 3 and agg.avg_l2_sq == 0.0 and agg.stderr_l2_sq == 0.0

    def test_heterogeneity_gap(self):
        truths, _ = generate_clusters(uniform_central(40), 4, 6, master_seed=2)
        stack = np.stack([t.probs for t in truths])
        manual = float(((stack - stack.mean(axis=0)) ** 2).sum(axis=1).mean())
        assert heterogeneity_gap(truths) == pytest.approx(manual, rel=1e-12)


class TestChiSquared:
    def test_identical_counts(self):
        counts = np.array([40, 30, 20, 10], dtype=np.int64)
        stat, p, _ = two_sample_chi_squared(counts, counts)
        assert stat == 0.0 and p == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(13)
        u = rng.integers(0, 50, 30)
        v = rng.integers(0, 50, 30)
        su, pu, _ = two_sample_chi_squared(u, v)
        sv, pv, _ = two_sample_chi_squared(v, u)
        assert su == pytest.approx(sv, rel=1e-12) and pu == pytest.approx(pv, rel=1e-12)

    def test_bin_permutation_invariance(self):
        rng = np.random.default_rng(17)
        u = rng.integers(0, 100, 25)
        v = rng.integers(0, 100, 25)
        perm = rng.permutation(25)
        s1, p1, d1 = two_sample_chi_squared(u, v)
        s2, p2, d2 = two_sample_chi_squared(u[perm], v[perm])
        assert s1 == pytest.approx(s2, rel=1e-12) and d1 == d2

    def test_small_bins_pooled(self):
        # singletons with expected < 5 merge into one composite bin
        u = np.array([1000, 1, 0, 1])
        v = np.array([1000, 0, 1, 1])
        stat, p, dof = two_sample_chi_squared(u, v)
        assert dof == 1
        assert p > 0.5

    def test_degenerate_counts_rejected(self):
        with pytest.raises(DegenerateCountsError):
            two_sample_chi_squared(np.array([0, 0]), np.array([0, 0]))
        with pytest.raises(DegenerateCountsError):
            two_sample_chi_squared(np.array([5, -1]), np.array([3, 2]))

    def test_pairwise_matrix(self):
        rng = np.random.default_rng(19)
        counts = [rng.integers(20, 60, 10) for _ in range(4)]
        stats, pvals = pairwise_chi_squared(counts)
        assert stats.shape == (4, 4)
        assert np.array_equal(stats, stats.T) and np.array_equal(pvals, pvals.T)
        assert np.all(np.diag(stats) == 0.0) and np.all(np.diag(pvals) == 1.0)

    def test_detects_heterogeneity(self):
        u = np.array([500, 500, 500, 500])
        v = np.array([900, 100, 500, 500])
        _, p, _ = two_sample_chi_squared(u, v)
        assert p < 1e-10


class TestEntrywise:
    def test_identical_counts_zero_rejections(self):
        counts = np.array([40, 30, 20, 10], dtype=np.int64)
        assert entrywise_tests([counts, counts]) == 0.0

    def test_double_zero_entries_skipped(self):
        u = np.array([10, 0, 30])
        v = np.array([12, 0, 28])
        # no crash, and the zero-zero entry does not count
        assert 0.0 <= entrywise_tests([u, v]) <= 1.0

    def test_null_calibration_smoke(self):
        # ~5% rejections under the null; precise band checked in acceptance
        rng = np.random.default_rng(23)
        probs = np.full(50, 1 / 50)
        rejected = []
        for _ in range(60):
            u = rng.multinomial(5000, probs)
            v = rng.multinomial(5000, probs)
            rejected.append(entrywise_tests([u, v]))
        assert 0.0 <= float(np.mean(rejected)) <= 0.15
