import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from frontier_lab import ParamError
from frontier_lab.stochastic_kernels import (
    CH_BRIDGE_MIN,
    CH_MOVE,
    RandomStream,
    branch_time,
    bridge_lower_cross_prob,
    bridge_min_from_uniform,
    bridge_min_sample,
    derive_key,
    fold,
    gaussian,
    gaussian_increment,
    mix64,
    uniform,
)

N_BULK = 1_000_000


def _bulk_uniform(seed, n, channel=CH_MOVE):
    keys = derive_key(seed, np.arange(n, dtype=np.uint64))
    return uniform(keys, np.uint64(0), channel)


class TestDraws:
    def test_gaussian_moment_bands(self):
        keys = derive_key(11, np.arange(N_BULK, dtype=np.uint64))
        z = gaussian(keys, np.uint64(0), CH_MOVE)
        # 4 sigma / sqrt(n) bands
        assert abs(z.mean()) < 0.004
        assert abs((z * math.sqrt(0.25)).var() - 0.25) < 0.002

    def test_exponential_moments(self):
        u = _bulk_uniform(12, N_BULK)
        e1 = -np.log(u)
        assert abs(e1.mean() - 1.0) < 0.004
        assert abs((e1 / 2.0).mean() - 0.5) < 0.002

    def test_scalar_ops_deterministic(self):
        s = RandomStream(99, (3, 1, 4))
        a = gaussian_increment(s, 1.0)
        b = gaussian_increment(s, 1.0)
        assert a == b
        assert branch_time(s, 1.0) == branch_time(s, 1.0)
        assert bridge_min_sample(s, 0.0, 0.0, 1.0) == bridge_min_sample(s, 0.0, 0.0, 1.0)

    def test_different_paths_differ(self):
        s = RandomStream(99)
        vals = {gaussian_increment(s.child(i), 1.0) for i in range(64)}
        assert len(vals) == 64

    def test_independence_across_streams(self):
        u1 = _bulk_uniform(77, 200_000)
        u2 = _bulk_uniform(78, 200_000)
        r = np.corrcoef(u1, u2)[0, 1]
        assert abs(r) < 0.01

    def test_serial_decorrelation_along_counter(self):
        key = derive_key(5, 123)
        u = uniform(key, np.arange(200_000, dtype=np.uint64), CH_MOVE)
        r = np.corrcoef(u[:-1], u[1:])[0, 1]
        assert abs(r) < 0.01

    def test_uniformity_ks(self):
        u = _bulk_uniform(21, 100_000)
        assert stats.kstest(u, "uniform").pvalue > 1e-3

    def test_param_validation(self):
        s = RandomStream(1)
        with pytest.raises(ParamError):
            gaussian_increment(s, 0.0)
        with pytest.raises(ParamError):
            branch_time(s, -1.0)
        with pytest.raises(ParamError):
            bridge_min_sample(s, 0.0, 0.0, 0.0)

    def test_mix_fold_stability(self):
        # pinned values guard the stream layout; changing them silently would
        # break reproducibility of archived experiment outputs
        assert int(mix64(np.uint64(0))) == 0
        assert int(mix64(np.uint64(1))) == 6238072747940578789
        assert int(fold(np.uint64(1), np.uint64(2))) == 398795221420464796


class TestBridgeCrossing:
    def test_reflection_value(self):
        assert bridge_lower_cross_prob(1.0, 1.0, 0.0, 0.0, 1.0) == pytest.approx(
            math.exp(-2.0), rel=1e-12
        )

    def test_endpoint_below(self):
        assert bridge_lower_cross_prob(-0.1, 1.0, 0.0, 0.0, 1.0) == 1.0
        assert bridge_lower_cross_prob(1.0, 0.0, 0.0, 0.0, 1.0) == 1.0

    def test_far_limit(self):
        assert bridge_lower_cross_prob(60.0, 60.0, 0.0, 0.0, 1.0) < 1e-300

    @given(
        d0=st.floats(0.01, 5.0),
        d1=st.floats(0.01, 5.0),
        dt=st.floats(0.001, 4.0),
        bump=st.floats(0.0, 2.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_monotone_in_distances(self, d0, d1, dt, bump):
        p = bridge_lower_cross_prob(d0, d1, 0.0, 0.0, dt)
        p_further = bridge_lower_cross_prob(d0 + bump, d1, 0.0, 0.0, dt)
        assert 0.0 <= p <= 1.0
        assert p_further <= p + 1e-15

    def test_barrier_shift_invariance(self):
        a = bridge_lower_cross_prob(1.3, 0.8, 0.1, -0.2, 0.5)
        b = bridge_lower_cross_prob(1.2, 1.0, 0.0, 0.0, 0.5)
        assert a == pytest.approx(b, rel=1e-12)


class TestBridgeMin:
    def test_support(self):
        keys = derive_key(3, np.arange(50_000, dtype=np.uint64))
        u = uniform(keys, np.uint64(0), CH_BRIDGE_MIN)
        m = bridge_min_from_uniform(u, 0.3, -0.2, 0.7)
        assert np.all(m <= min(0.3, -0.2) + 1e-12)

    def test_tail_probability(self):
        # P(min <= -1 | endpoints 0, 0, dt 1) = exp(-2)
        keys = derive_key(4, np.arange(N_BULK, dtype=np.uint64))
        u = uniform(keys, np.uint64(0), CH_BRIDGE_MIN)
        m = bridge_min_from_uniform(u, 0.0, 0.0, 1.0)
        frac = float(np.mean(m <= -1.0))
        assert frac == pytest.approx(math.exp(-2.0), abs=0.0015)

    def test_degenerate_step(self):
        s = RandomStream(8)
        m = bridge_min_sample(s, 0.4, 0.1, 1e-12)
        assert m == pytest.approx(0.1, abs=1e-5)

    def test_kolmogorov_smirnov(self):
        x0, x1, dt = 0.2, -0.1, 0.8
        keys = derive_key(9, np.arange(100_000, dtype=np.uint64))
        u = uniform(keys, np.uint64(0), CH_BRIDGE_MIN)
        m = bridge_min_from_uniform(u, x0, x1, dt)

        def cdf(v):
            v = np.minimum(v, min(x0, x1))
            return np.exp(-2.0 * (x0 - v) * (x1 - v) / dt)

        assert stats.kstest(m, cdf).pvalue > 1e-3
