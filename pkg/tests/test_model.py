import numpy as np
import pytest

from shiftsim.model import (
    Distribution,
    DimensionMismatchError,
    DimensionTooSmallError,
    HashedEstimate,
    HeterogeneitySpec,
    NegativeEntryError,
    NonFiniteEntryError,
    ShiftConfig,
    ShiftSimError,
    SumNotOneError,
    sparsity_distance,
    validate_distribution,
)


class TestDistribution:
    def test_uniform_pair(self):
        dist = validate_distribution([0.5, 0.5])
        assert dist.dim == 2
        assert np.array_equal(dist.probs, [0.5, 0.5])

    def test_sum_not_one_reports_deviation(self):
        with pytest.raises(SumNotOneError) as err:
            validate_distribution([0.5, 0.6])
        assert err.value.deviation == pytest.approx(0.1, abs=1e-12)

    def test_uniform_300(self):
        dist = validate_distribution([1 / 300] * 300)
        assert dist.dim == 300
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_negative_entry(self):
        with pytest.raises(NegativeEntryError):
            validate_distribution([1.2, -0.2])

    def test_dimension_too_small(self):
        with pytest.raises(DimensionTooSmallError):
            validate_distribution([1.0])

    def test_non_finite(self):
        with pytest.raises(NonFiniteEntryError):
            validate_distribution([np.nan, 1.0])

    def test_never_renormalizes(self):
        with pytest.raises(SumNotOneError):
            validate_distribution([0.25, 0.25, 0.25])

    def test_probs_are_read_only(self):
        dist = validate_distribution([0.5, 0.5])
        with pytest.raises(ValueError):
            dist.probs[0] = 0.3

    def test_randomized_valid_and_invalid(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            d = int(rng.integers(2, 50))
            raw = rng.random(d)
            valid = raw / raw.sum()
            dist = validate_distribution(valid)
            assert abs(dist.probs.sum() - 1.0) <= 1e-9
            bad = valid.copy()
            bad[int(rng.integers(0, d))] += 1e-6  # breaks the sum beyond tolerance
            with pytest.raises(SumNotOneError):
                validate_distribution(bad)


class TestSparsityDistance:
    def test_identity(self):
        dist = validate_distribution([0.2, 0.3, 0.5])
        assert sparsity_distance(dist, dist, 0.0) == 0

    def test_two_entries(self):
        a = validate_distribution([0.25, 0.25, 0.25, 0.25])
        b = validate_distribution([0.25, 0.26, 0.24, 0.25])
        assert sparsity_distance(a, b, 1e-12) == 2

    def test_dimension_mismatch(self):
        a = validate_distribution([0.5, 0.5])
        b = validate_distribution([0.3, 0.3, 0.4])
        with pytest.raises(DimensionMismatchError):
            sparsity_distance(a, b)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            d = int(rng.integers(2, 30))
            vecs = []
            for _ in range(3):
                raw = rng.random(d)
                vecs.append(validate_distribution(raw / raw.sum()))
            a, b, c = vecs
            assert sparsity_distance(a, b) == sparsity_distance(b, a)
            assert sparsity_distance(a, c) <= sparsity_distance(a, b) + sparsity_distance(b, c)


class TestHashedEstimate:
    def test_counts_round_trip(self):
        est = HashedEstimate(np.array([3, 7, 0]) / 10, sample_size=10, bits=2, cluster_id=0, seed=1)
        assert np.array_equal(est.counts(), [3, 7, 0])

    def test_rejects_non_rational_values(self):
        with pytest.raises(ShiftSimError):
            HashedEstimate(np.array([0.33, 0.33, 0.34]), sample_size=10, bits=2, cluster_id=0, seed=1)

    def test_rejects_out_of_range(self):
        with pytest.raises(ShiftSimError):
            HashedEstimate(np.array([1.1, 0.0]), sample_size=10, bits=2, cluster_id=0, seed=1)

    def test_large_n_float_round_trip_accepted(self):
        n = 100_000
        counts = np.arange(2, 302, dtype=np.int64)
        HashedEstimate(counts / n, sample_size=n, bits=2, cluster_id=0, seed=1)


class TestConfigs:
    def test_shift_config_defaults(self):
        cfg = ShiftConfig(bits=2)
        assert cfg.alpha is None and cfg.center == "median" and not cfg.renormalize_output

    def test_shift_config_rejects_bad_alpha(self):
        with pytest.raises(ShiftSimError):
            ShiftConfig(bits=2, alpha=0.0)

    def test_shift_config_rejects_bad_omega(self):
        with pytest.raises(ShiftSimError):
            ShiftConfig(bits=2, center="trimmed", omega=0.5)

    def test_heterogeneity_spec_validation(self):
        HeterogeneitySpec(s=0, T=1, n=1)
        with pytest.raises(ShiftSimError):
            HeterogeneitySpec(s=-1, T=1, n=1)
        with pytest.raises(ShiftSimError):
            HeterogeneitySpec(s=0, T=0, n=1)
