import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier_lab import SQRT2, DISPLACEMENT_CRITICAL, ParamError, make_curves
from frontier_lab.errors import SeriesDivergenceGuard
from frontier_lab.tube_analytics import (
    EnvelopePair,
    WindowSpec,
    displacement_tail_shape,
    fixed_tube_probability,
    moving_tube_envelope,
    moving_tube_short_time_bound,
    predicted_top_window_count,
    top_window_shape,
    top_window_shape_short_time,
)

A = DISPLACEMENT_CRITICAL


class TestFixedTube:
    def test_survival_from_center(self):
        # frozen from the series itself: terms beyond n=3 are < 1e-13 at t=1
        assert fixed_tube_probability(0.0, 1.0, -1.0, 1.0) == pytest.approx(
            0.37077742979952394, abs=1e-10
        )

    def test_half_window_symmetry(self):
        for t in (0.3, 1.0, 4.0):
            full = fixed_tube_probability(0.0, t, -1.0, 1.0)
            half = fixed_tube_probability(0.0, t, -1.0, 0.0)
            assert half == pytest.approx(full / 2.0, abs=1e-12)

    def test_empty_window(self):
        assert fixed_tube_probability(0.3, 1.0, 0.5, 0.5) == 0.0

    def test_additive_and_monotone(self):
        t, y = 0.7, 0.2
        p1 = fixed_tube_probability(y, t, -1.0, 0.1)
        p2 = fixed_tube_probability(y, t, 0.1, 0.8)
        both = fixed_tube_probability(y, t, -1.0, 0.8)
        assert p1 + p2 == pytest.approx(both, abs=1e-12)
        assert both <= fixed_tube_probability(y, t, -1.0, 1.0) <= 1.0

    def test_reflection_symmetry(self):
        p = fixed_tube_probability(0.4, 1.3, -0.2, 0.9)
        q = fixed_tube_probability(-0.4, 1.3, -0.9, 0.2)
        assert p == pytest.approx(q, abs=1e-13)

    def test_leading_term_dominates_at_large_t(self):
        t = 10.0
        exact = fixed_tube_probability(0.0, t, -0.5, 0.5)
        window = (2.0 / math.pi) * (
            math.sin(math.pi * 0.25) - math.sin(-math.pi * 0.25)
        )
        lead = math.exp(-math.pi**2 * t / 8.0) * window
        assert abs(math.log(exact / lead)) < 1e-6

    def test_guard_for_tiny_t(self):
        with pytest.raises(SeriesDivergenceGuard):
            fixed_tube_probability(0.0, 1e-8, -1.0, 1.0)

    def test_param_checks(self):
        with pytest.raises(ParamError):
            fixed_tube_probability(1.0, 1.0, -1.0, 1.0)
        with pytest.raises(ParamError):
            fixed_tube_probability(0.0, 1.0, 0.5, 1.5)
        with pytest.raises(ParamError):
            fixed_tube_probability(0.0, -1.0, -1.0, 1.0)

    @given(
        y=st.floats(-0.9, 0.9),
        t=st.floats(0.05, 5.0),
        p=st.floats(-1.0, 0.9),
        width=st.floats(0.01, 0.5),
    )
    @settings(max_examples=60, deadline=None)
    def test_bounds_and_symmetry_property(self, y, t, p, width):
        q = min(p + width, 1.0)
        val = fixed_tube_probability(y, t, p, q)
        assert 0.0 <= val <= 1.0
        mirrored = fixed_tube_probability(-y, t, -q, -p)
        assert val == pytest.approx(mirrored, abs=1e-12)


class TestMovingTubeEnvelope:
    def test_envelope_ratio_is_slope_width_exponent(self):
        t, s, z = 10.0, 5.0, 1.0
        f, L = make_curves("horizon_tube", t=t, z=z)
        Ls = L.value(s)
        w = WindowSpec(1.0 - 2.0 / Ls, 1.0 - 1.0 / Ls)
        env = moving_tube_envelope(f, L, s, -f.value(0.0), w, eps=0.2)
        assert not env.direction_swapped
        assert env.lower <= env.upper
        # lower/upper = exp(-(q - p) f'(s) L(s)) = exp(-sqrt2)
        assert env.lower / env.upper == pytest.approx(math.exp(-SQRT2), rel=1e-12)
        # shared factor: exp(-energy) sin(pi z / L(0)) int sin
        energy = s + SQRT2 * z + math.log((t + 1) / (t + 1 - s)) / 6.0
        # sin(pi x / L(0)) = sin(pi z / L(0)) since x = L(0) - z here
        shared = math.exp(-energy) * math.sin(math.pi * z / L.value(0.0))
        shared *= (math.cos(math.pi * w.p) - math.cos(math.pi * w.q)) / math.pi
        assert env.lower == pytest.approx(shared * math.exp((1 - w.q) * SQRT2 * Ls), rel=1e-7)

    def test_flat_floor_collapses(self):
        from frontier_lab import Constant, Curve

        f = Curve([Constant(-1.0)])
        L = Curve([Constant(2.0)])
        env = moving_tube_envelope(f, L, 6.0, 1.0, WindowSpec(0.2, 0.7), eps=0.5)
        assert env.lower == pytest.approx(env.upper, rel=1e-14)
        assert env.direction_swapped  # f'(t) = 0 counts as reversed ordering

    def test_full_window_integral(self):
        t, z = 10.0, 1.0
        f, L = make_curves("horizon_tube", t=t, z=z)
        env = moving_tube_envelope(f, L, 5.0, -f.value(0.0), WindowSpec(0.0, 1.0), eps=0.2)
        # int_0^1 sin(pi nu) d nu = 2/pi appears in both bounds
        ratio = env.upper / env.lower
        assert ratio == pytest.approx(math.exp(SQRT2 * L.value(5.0)), rel=1e-10)

    def test_rejects_pre_clock_times(self):
        f, L = make_curves("horizon_tube", t=10.0, z=1.0)
        with pytest.raises(ParamError):
            moving_tube_envelope(f, L, 0.05, -f.value(0.0), WindowSpec(0.0, 1.0), eps=0.2)


class TestShortTimeBound:
    def test_degenerate_window(self):
        f, L = make_curves("horizon_tube", t=10.0, z=1.0)
        with pytest.raises(ParamError):
            WindowSpec(0.3, 0.3)

    def test_clamped_at_one(self):
        from frontier_lab import Constant, Curve, Linear

        f = Curve([Linear(SQRT2), Constant(-1.0)])
        L = Curve([Constant(1.0)])
        val = moving_tube_short_time_bound(f, L, 0.01, 1.0, WindowSpec(0.0, 0.5))
        # L(t)^2/t^(3/2) = 1000, so the min clamps at the ceiling-side branch:
        # (L(0)+f(0)) = 0 makes the bound vanish for this degenerate start
        assert val == 0.0

    def test_hand_evaluated_configuration(self):
        # widen the tube so the start is strictly inside: L = 2 keeps all
        # three branches positive and the floor branch smallest at t = 4
        from frontier_lab import Constant, Curve, Linear

        f = Curve([Linear(SQRT2), Constant(-1.0)])
        L = Curve([Constant(2.0)])
        t = 4.0
        val = moving_tube_short_time_bound(f, L, t, 1.0, WindowSpec(0.0, 1.0))
        expo = math.exp(-0.5 * 2.0 * t - SQRT2 * (-1.0) - 0.0)
        floor_branch = 1.0 * 1.0 * 4.0 / t**1.5
        ceiling_branch = (2.0 - 1.0) * 1.0 * 4.0 / t**1.5
        assert val == pytest.approx(expo * min(floor_branch, ceiling_branch, 1.0), rel=1e-12)

    def test_degenerate_start_gives_zero(self):
        # start exactly on the tube ceiling: the ceiling-side reflection
        # branch vanishes, hence the tube probability bound is zero
        from frontier_lab import Constant, Curve, Linear

        f = Curve([Linear(SQRT2), Constant(-1.0)])
        L = Curve([Constant(1.0)])
        assert moving_tube_short_time_bound(f, L, 4.0, 1.0, WindowSpec(0.0, 1.0)) == 0.0

    def test_requires_nonneg_end_slope(self):
        from frontier_lab import Constant, Curve, Linear

        f = Curve([Linear(-1.0), Constant(-1.0)])
        L = Curve([Constant(1.0)])
        with pytest.raises(ParamError):
            moving_tube_short_time_bound(f, L, 1.0, 1.0, WindowSpec(0.0, 1.0))


class TestShapes:
    def test_top_window_shape_value(self):
        assert top_window_shape(100.0, 2.0, 50.0, 1.0) == pytest.approx(
            1.3132144899844649e-24, rel=1e-10
        )

    def test_top_window_shape_zero_z(self):
        assert top_window_shape(100.0, 0.0, 50.0, 1.0) == 0.0

    def test_short_time_clamp(self):
        # y z s^(-3/2) >= 1 activates the clamp
        v = top_window_shape_short_time(2.0, 1.0, 3.0)
        assert v == pytest.approx(math.exp(-1.0 - SQRT2 * 2.0 + SQRT2 * 3.0), rel=1e-12)
        assert top_window_shape_short_time(2.0, 0.0, 3.0) == pytest.approx(
            math.exp(-SQRT2 * 2.0 + SQRT2 * 3.0), rel=1e-12
        )
        assert top_window_shape_short_time(0.0, 1.0, 3.0) == 0.0

    def test_predicted_count_value(self):
        assert predicted_top_window_count(100.0, 2.0, 50.0) == pytest.approx(
            0.0016552919952462863, rel=1e-10
        )

    def test_predicted_count_scaling_in_z(self):
        for z in (1.0, 1.6, 2.2):
            r = predicted_top_window_count(100.0, 2 * z, 50.0) / predicted_top_window_count(
                100.0, z, 50.0
            )
            assert r == pytest.approx(2.0 * math.exp(-SQRT2 * z), rel=1e-12)

    def test_predicted_count_at_horizon(self):
        t, z = 100.0, 2.0
        assert predicted_top_window_count(t, z, t) == pytest.approx(
            z * math.exp(-SQRT2 * z) / math.sqrt(t), rel=1e-12
        )

    def test_predicted_count_validity_region(self):
        with pytest.raises(ParamError):
            predicted_top_window_count(100.0, 2.0, 10.0)
        with pytest.raises(ParamError):
            predicted_top_window_count(100.0, 0.5, 50.0)

    def test_tail_shape(self):
        assert displacement_tail_shape(1.0) == pytest.approx(0.2431167344342142, rel=1e-12)
        assert displacement_tail_shape(2.0) / displacement_tail_shape(1.0) == pytest.approx(
            2.0 * math.exp(-SQRT2), rel=1e-12
        )
        with pytest.raises(ParamError):
            displacement_tail_shape(0.5)

    def test_tail_shape_decreasing_past_argmax(self):
        # stationarity of log z - sqrt2 z is at 1/sqrt2 < 1, so the shape is
        # strictly decreasing on its stated domain
        zs = np.linspace(1.0, 6.0, 40)
        vals = [displacement_tail_shape(z) for z in zs]
        assert all(a > b for a, b in zip(vals, vals[1:]))
