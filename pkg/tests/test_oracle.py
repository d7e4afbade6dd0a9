import math

import numpy as np
import pytest

from nriap.curves import DistCurve
from nriap.oracle import (
    DiscreteMeasure,
    bell,
    dp_mean_samples,
    enumerate_partitions,
    mc_mean_cdf,
    stick_breaking_dp,
)
from nriap.measures import BaseMeasure


class TestStickBreaking:
    def test_weights_sum_to_one(self, example_alpha, rng):
        for _ in range(20):
            d = stick_breaking_dp(example_alpha, 1e-8, rng)
            assert abs(d.weights.sum() - 1.0) <= 1e-12
            assert np.all(d.weights > 0)

    def test_first_weight_mean(self, rng):
        alpha = BaseMeasure.uniform(0.0, 1.0, 1.0)
        w1 = np.array([stick_breaking_dp(alpha, 1e-6, rng).weights[0] for _ in range(20_000)])
        # w1 ~ Beta(1, a), mean 1/(1+a) = 0.5; the first stick is never the leftover here
        se = w1.std() / math.sqrt(w1.size)
        assert abs(w1.mean() - 0.5) < 3 * se

    def test_single_atom(self, rng):
        d = stick_breaking_dp(BaseMeasure.from_atoms([1.5], [2.0]), 1e-8, rng)
        assert np.all(d.locations == 1.5)
        assert d.integrate(lambda x: x) == pytest.approx(1.5)

    def test_bad_tolerance(self, example_alpha):
        with pytest.raises(ValueError):
            stick_breaking_dp(example_alpha, 0.0)

    def test_discrete_measure_validation(self):
        with pytest.raises(ValueError):
            DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.4]))

    def test_mean_identity(self, example_alpha, rng):
        h = lambda x: x + 0.5  # noqa: E731
        m = dp_mean_samples(example_alpha, h, 100_000, rng)
        se = m.std(ddof=1) / math.sqrt(m.size)
        assert abs(m.mean() - 3.0) < 3 * se


class TestMcMeanCdf:
    def test_symmetry(self, rng):
        curve = mc_mean_cdf(BaseMeasure.uniform(0, 1, 1), lambda x: x, 20_000, [0.5], rng)
        assert isinstance(curve, DistCurve) and curve.kind == "cdf"
        assert abs(curve.values[0] - 0.5) < 3 * curve.stderr[0]

    def test_degenerate_alpha_is_a_step(self, rng):
        curve = mc_mean_cdf(BaseMeasure.from_atoms([2.0], [1.0]), lambda x: x, 1000, [1.9, 2.0 - 1e-9, 2.0 + 1e-9], rng)
        np.testing.assert_array_equal(curve.values, [0.0, 0.0, 1.0])

    def test_example_prior_mean(self, example_alpha, rng):
        curve = mc_mean_cdf(example_alpha, lambda x: x + 0.5, 20_000, np.linspace(0.5, 5.5, 11), rng)
        assert abs(curve.meta["mean"] - 3.0) < 3 * curve.meta["mean_se"]
        assert not curve.violations()

    def test_needs_enough_samples(self, example_alpha, rng):
        with pytest.raises(ValueError):
            mc_mean_cdf(example_alpha, lambda x: x, 999, [1.0], rng)


def _canonical(partition):
    return tuple(sorted(tuple(sorted(c)) for c in partition))


class TestPartitions:
    @pytest.mark.parametrize("n, count", [(1, 1), (3, 5), (4, 15), (6, 203), (8, 4140)])
    def test_counts_are_bell_numbers(self, n, count):
        parts = list(enumerate_partitions(n))
        assert len(parts) == count == bell(n)
        assert len({_canonical(p) for p in parts}) == count
        for p in parts:
            assert sorted(i for c in p for i in c) == list(range(n))

    def test_first_and_last(self):
        parts = list(enumerate_partitions(3))
        assert parts[0] == ((0, 1, 2),)
        assert parts[-1] == ((0,), (1,), (2,))

    @pytest.mark.parametrize("n", [0, 11])
    def test_range(self, n):
        with pytest.raises(ValueError):
            list(enumerate_partitions(n))

    @pytest.mark.parametrize("n", range(1, 7))
    def test_rising_factorial_identity(self, n):
        # sum over partitions of prod_cells a (c - 1)! = a (a + 1) ... (a + n - 1)
        a = 2.3
        total = sum(math.prod(a * math.factorial(len(c) - 1) for c in p) for p in enumerate_partitions(n))
        assert total == pytest.approx(math.prod(a + i for i in range(n)), rel=1e-13)
