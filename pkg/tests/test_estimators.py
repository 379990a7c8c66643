import math

import numpy as np
import pytest

from frontier_lab import DISPLACEMENT_CRITICAL, SQRT2, DegenerateFit, ParamError
from frontier_lab.estimators import (
    MCEstimate,
    TailRow,
    TailTable,
    displacement_checkpoints,
    displacement_quantiles,
    jaffuel_survival,
    lambda_tail,
    many_to_one_check,
    neveu_summary,
    replicas_for_halfwidth,
    tail_slope_fit,
    wilson_interval,
    worker_count,
)

A = DISPLACEMENT_CRITICAL


def synthetic_table(c: float = 0.3, noise: float = 0.0, seed: int = 0) -> TailTable:
    rng = np.random.default_rng(seed)
    rows = []
    for z in (2.0, 3.0, 4.0, 5.0):
        p = c * z * math.exp(-SQRT2 * z) * (1.0 + noise * rng.standard_normal())
        est = MCEstimate(value=p, stderr=0.0, n=1, ci95=(p, p), seed=0)
        rows.append(TailRow(z=z, p_hat=est, shape=z * math.exp(-SQRT2 * z)))
    return TailTable(t=30.0, rows=tuple(rows))


class TestWilson:
    def test_contains_point_estimate(self):
        lo, hi = wilson_interval(30, 100)
        assert lo < 0.3 < hi

    def test_width_shrinks_with_n(self):
        lo1, hi1 = wilson_interval(30, 100)
        lo2, hi2 = wilson_interval(120, 400)
        assert (hi2 - lo2) < (hi1 - lo1)
        # n^(-1/2) scaling within 10%
        assert (hi1 - lo1) / (hi2 - lo2) == pytest.approx(2.0, rel=0.1)

    def test_proportion_estimate_inside_own_ci(self):
        est = MCEstimate.from_proportion(7, 50, seed=1)
        assert est.ci95[0] <= est.value <= est.ci95[1]


class TestSlopeFit:
    def test_exact_model_recovered(self):
        slope, intercept, r2 = tail_slope_fit(synthetic_table())
        assert slope == pytest.approx(-SQRT2, abs=1e-12)
        assert intercept == pytest.approx(math.log(0.3), abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_noisy_model_close(self):
        slope, _, _ = tail_slope_fit(synthetic_table(noise=0.01, seed=4))
        assert slope == pytest.approx(-SQRT2, abs=0.02)

    def test_degenerate_too_few(self):
        t = synthetic_table()
        short = TailTable(t=30.0, rows=t.rows[:2])
        with pytest.raises(DegenerateFit):
            tail_slope_fit(short)

    def test_degenerate_zero_rows(self):
        zero = MCEstimate(value=0.0, stderr=0.0, n=1, ci95=(0.0, 0.0), seed=0)
        rows = tuple(TailRow(z=float(z), p_hat=zero, shape=1.0) for z in (2, 3, 4))
        with pytest.raises(DegenerateFit):
            tail_slope_fit(TailTable(t=30.0, rows=rows))

    def test_table_requires_increasing_z(self):
        t = synthetic_table()
        with pytest.raises(ParamError):
            TailTable(t=30.0, rows=(t.rows[1], t.rows[0]))


class TestLambdaTail:
    def test_range_validation(self):
        with pytest.raises(ParamError):
            lambda_tail(30.0, [0.5], 100, seed=1)
        with pytest.raises(ParamError):
            lambda_tail(30.0, [A * 30 ** (1 / 3) + 1.0], 100, seed=1)

    def test_out_of_proven_range_warns(self):
        with pytest.warns(UserWarning):
            lambda_tail(30.0, [5.0], 200, seed=1, dt=0.5)

    def test_pathwise_monotone_in_z(self):
        # common replica ids nest the absorption events: a lower barrier
        # (larger z) can only lose survivors
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            table = lambda_tail(20.0, [1.0, 2.0, 3.0], 3000, seed=5, dt=0.5)
        ps = [r.p_hat.value for r in table.rows]
        assert ps[0] >= ps[1] >= ps[2]
        assert all(r.shape == pytest.approx(r.z * math.exp(-SQRT2 * r.z)) for r in table.rows)

    def test_per_z_replica_counts(self):
        table = lambda_tail(20.0, [1.0, 2.0], [500, 700], seed=5, dt=0.5)
        assert table.rows[0].p_hat.n == 500
        assert table.rows[1].p_hat.n == 700


class TestPilotSizing:
    def test_halfwidth_formula(self):
        n = replicas_for_halfwidth(0.1, 0.01)
        assert 3300 <= n <= 3600

    def test_validation(self):
        with pytest.raises(ParamError):
            replicas_for_halfwidth(0.0, 0.01)
        with pytest.raises(ParamError):
            replicas_for_halfwidth(0.1, 0.0)


class TestJaffuelSurvival:
    def test_positive_and_sane_at_small_t(self):
        est = jaffuel_survival(6.0, replicas=400, seed=2, dt=0.05,
                               declare_survived_at=1000)
        assert 0.0 < est.value < 1.0
        assert est.ci95[0] > 0.01

    def test_declare_threshold_insensitivity(self):
        # doubling the early-declare threshold moves the estimate by less
        # than the Monte Carlo noise: the truncation error is negligible
        a = jaffuel_survival(8.0, replicas=400, seed=3, dt=0.05,
                             declare_survived_at=500)
        b = jaffuel_survival(8.0, replicas=400, seed=3, dt=0.05,
                             declare_survived_at=1000)
        assert abs(a.value - b.value) <= 2 * math.sqrt(a.stderr**2 + b.stderr**2) + 1e-9

    def test_rejects_tiny_t(self):
        with pytest.raises(ParamError):
            jaffuel_survival(0.5, replicas=10, seed=1)


class TestNeveu:
    def test_summary_structure_and_ratio_band(self):
        out = neveu_summary([3.0, 4.0], replicas=300, seed=11, dt=0.5)
        assert [r["y"] for r in out["rows"]] == [3.0, 4.0]
        assert out["rows"][0]["t"] == pytest.approx(18.0)
        ratio = out["ratios"][0]
        assert ratio["n"] > 250
        assert 0.3 < ratio["median"] < 3.0

    def test_monotone_absorption_in_horizon(self):
        from frontier_lab.engine import absorbed_count_at_line

        k1 = absorbed_count_at_line(3.0, 9.0, seed=11, replicas=range(200), dt=0.5)
        k2 = absorbed_count_at_line(3.0, 18.0, seed=11, replicas=range(200), dt=0.5)
        assert (k2 >= k1).all()

    def test_requires_increasing_y(self):
        with pytest.raises(ParamError):
            neveu_summary([4.0, 3.0], replicas=10, seed=1)


class TestManyToOne:
    def test_trivial_event(self):
        pop, pred, z = many_to_one_check(4.0, 0.0, 2.0, pop_replicas=2000,
                                         single_replicas=1, seed=13, dt=0.25,
                                         trivial_event=True)
        assert pred.value == pytest.approx(math.exp(2.0), rel=1e-12)
        assert abs(z) <= 3.5

    def test_tube_identity_small(self):
        pop, pred, z = many_to_one_check(6.0, 1.0, 3.0, pop_replicas=4000,
                                         single_replicas=200_000, seed=17, dt=0.02)
        assert abs(z) <= 4.0
        assert pop.value > 0 and pred.value > 0

    def test_u_validation(self):
        with pytest.raises(ParamError):
            many_to_one_check(4.0, 1.0, 5.0, 10, 10, seed=1)


class TestDisplacementLocation:
    def test_median_location_sane(self):
        q = displacement_quantiles(10.0, replicas=2000, seed=19, dt=0.25)
        # location is near a t^(1/3), inside the wide qualitative band
        assert -2.0 * math.log(10.0) <= q["offset_vs_critical"] <= 2.0
        assert q["censored_fraction"] < 0.5
        assert q["q25"] <= q["median"] <= q["q75"]

    def test_checkpoints_monotone_and_nonnegative(self):
        lam = displacement_checkpoints([5.0, 10.0], replicas=300, seed=23, dt=0.5,
                                       margin=3.0)
        finite = np.isfinite(lam)
        assert finite[0].mean() > 0.9
        assert (lam[finite] >= 0.0).all()
        both = finite.all(axis=0)
        assert (lam[0, both] <= lam[1, both] + 1e-12).all()

    def test_median_band_structure(self):
        from frontier_lab.estimators import displacement_median_band

        out = displacement_median_band(10.0, replicas=2000, seed=29, dt=1.0)
        assert out["median_in_band"]
        assert out["p_upper_edge"] > 0.5
        # lower edge barely above zero at t=10; its survival is nearly sure
        # to be far below one half
        assert out["p_lower_edge"] < 0.1


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("FRONTIER_LAB_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("FRONTIER_LAB_THREADS", "bogus")
    assert worker_count() >= 1


class TestManyToOneBattery:
    def test_identity_holds_across_configurations(self):
        # the identity is exact, so failures are pure noise at the 3-sigma
        # rate; demand at least 19 of 20 configurations inside |z| <= 3
        import itertools

        configs = list(itertools.product((4.0, 5.0, 6.0, 7.0),
                                         (0.45, 0.6, 0.75, 0.9, 1.0),
                                         (0.8,)))
        assert len(configs) == 20
        passed = 0
        zs = []
        for i, (t, ufrac, z) in enumerate(configs):
            u = round(ufrac * t / 0.05) * 0.05
            _, _, zscore = many_to_one_check(
                t, z, u, pop_replicas=1500, single_replicas=50_000,
                seed=1000 + i, dt=0.05)
            zs.append(zscore)
            if abs(zscore) <= 3.0:
                passed += 1
        assert passed >= 19, f"z-scores: {[round(v, 2) for v in zs]}"
