import math

import numpy as np
import pytest

from mrstab import sampling
from mrstab.avgpower import (KappaConvergenceError, RateMap, bc_choice, boundary_sweep,
                             expected_rate_power, threshold_constants, optimal_threshold_policy,
                             mac_choice, single_user_threshold, solve_kappa)
from mrstab.core import ChannelModel, DecodeOrder, RateSet, RateVector
from mrstab.geometry import contains

from oracles import brute_argmax, exp1_threshold

FIXED = RateSet.fixed(1.0)


class TestChoices:
    def test_mac_examples(self):
        r, _, _ = mac_choice(0.5, (0.0, 0.0), (1, 1), FIXED)
        assert r == RateVector(1, 1)
        r, order, p = mac_choice(0.5, (0.1, 0.1), (1, 1), FIXED)
        assert r == RateVector(1, 1) and order is DecodeOrder.PI1
        assert p == pytest.approx((2.0, 1.0))
        r, _, p = mac_choice(0.5, (10, 10), (0.1, 0.1), FIXED)
        assert r == RateVector(0, 0) and p == (0.0, 0.0)

    def test_bc_examples(self):
        r, p = bc_choice(0.5, 0.1, (2, 1), FIXED)
        assert r == RateVector(1, 1) and p == pytest.approx(2.0)
        r, _ = bc_choice(0.3, 0.0, (0.5, 0.2), [0, 1, 2])
        assert r == RateVector(2, 2)
        r, p = bc_choice(0.5, 0.0, (0, 0), FIXED)
        assert r == RateVector(0, 0) and p == 0.0

    def test_rejects_negative_kappa(self):
        with pytest.raises(ValueError):
            mac_choice(0.5, (-1, 0), (1, 1), FIXED)

    @pytest.mark.parametrize("network", ["mac", "bc"])
    def test_matches_brute_force_and_scaling(self, network):
        rng = np.random.default_rng(11)
        rates = [0.0, 0.5, 1.0, 1.5]
        for _ in range(400):
            w = float(rng.uniform())
            kappa = rng.exponential(0.3, size=2 if network == "mac" else 1)
            chi = rng.exponential(size=2)
            rm = RateMap(network, rates, w)
            c = int(rm.choose(kappa, chi[None, :])[0])
            for scale in (1.0, 7.5):
                r, order = brute_argmax(network, w, kappa, chi, rates, scale)
                assert rm.rates[c] == r
                if network == "mac":
                    assert int(rm.orders[c]) == order

    def test_single_user_threshold_constants(self):
        r0, k = 1.0, 0.2
        g0, g1 = threshold_constants(r0)
        assert g0 == pytest.approx(r0 / g1)
        t = single_user_threshold(0.5, k, r0)
        assert t == pytest.approx(2 * k * g1 / r0)
        assert mac_choice(0.5, (k, k), (t * 1.001, 0.0), FIXED)[0] == RateVector(1, 0)
        assert mac_choice(0.5, (k, k), (t * 0.999, 0.0), FIXED)[0] == RateVector(0, 0)


def _labels(network, w, kappa, chi, rates):
    rm = RateMap(network, rates, w)
    idx = rm.choose(kappa, chi)
    if network == "mac":
        return idx
    # BC: split each rate pair by which user is decoded last
    return idx * 2 + (chi[:, 0] >= chi[:, 1])


@pytest.mark.parametrize("network,kappa", [("mac", (0.2, 0.35)), ("bc", (0.25,))])
def test_decision_regions_convex_in_inverse_gains(network, kappa):
    rates = [0, 0.5, 1, 1.5]
    w = 0.4
    rng = np.random.default_rng(4)
    chi = rng.exponential(size=(20_000, 2))
    lab = _labels(network, w, kappa, chi, rates)
    a = rng.integers(0, len(chi), size=300_000)
    b = rng.integers(0, len(chi), size=300_000)
    same = (lab[a] == lab[b]) & (a != b)
    a, b = a[same][:10_000], b[same][:10_000]
    assert len(a) == 10_000
    mid = 2.0 / (1.0 / chi[a] + 1.0 / chi[b])
    np.testing.assert_array_equal(_labels(network, w, kappa, mid, rates), lab[a])


class TestExpectations:
    def test_deterministic(self):
        a = expected_rate_power(0.3, (0.1, 0.2), "mac", FIXED, samples=20_000, seed=3)
        b = expected_rate_power(0.3, (0.1, 0.2), "mac", FIXED, samples=20_000, seed=3)
        np.testing.assert_array_equal(a.rates, b.rates)
        np.testing.assert_array_equal(a.powers, b.powers)

    def test_large_kappa_silences(self):
        e = expected_rate_power(0.5, (1e9, 1e9), "mac", FIXED, samples=10_000)
        assert np.all(e.rates == 0) and np.all(e.powers == 0)

    def test_rejects_small_sample(self):
        with pytest.raises(ValueError):
            expected_rate_power(0.5, (1, 1), "mac", FIXED, samples=100)

    @pytest.mark.parametrize("network,kappa", [("mac", (0.15, 0.3)), ("bc", (0.2,))])
    def test_grid_quadrature_oracle(self, network, kappa):
        w = 0.45
        e = expected_rate_power(w, kappa, network, FIXED, samples=100_000, seed=8)
        n = 800
        u = (np.arange(n) + 0.5) / n
        x = -np.log1p(-u)
        c1, c2 = np.meshgrid(x, x, indexing="ij")
        chi = np.column_stack([c1.ravel(), c2.ravel()])
        rm = RateMap(network, FIXED, w)
        costs = rm.costs(chi)
        idx = rm.choose_from_costs(kappa, costs)
        rates = rm.rate_array[idx].mean(axis=0)
        power = np.take_along_axis(costs[0], idx[None, :], axis=0)[0].mean()
        np.testing.assert_array_less(np.abs(e.rates - rates), 4 * e.rate_se + 2e-3)
        assert abs(e.powers[0] - power) <= 4 * e.power_se[0] + 5e-3

    def test_power_nonincreasing_in_own_kappa(self):
        grid = np.geomspace(0.01, 5, 20)
        for i in (0, 1):
            powers = []
            for k in grid:
                kappa = [0.3, 0.3]
                kappa[i] = k
                powers.append(expected_rate_power(0.4, kappa, "mac", [0, 0.5, 1],
                                                  samples=20_000, seed=1).powers[i])
            assert np.all(np.diff(powers) <= 1e-12)


class TestSolver:
    def test_large_budget_gives_zero_kappa(self):
        pt = solve_kappa(0.5, "mac", (1e6, 1e6), FIXED, samples=20_000)
        assert pt.kappa == (0.0, 0.0)
        np.testing.assert_allclose(pt.estimate.rates, [1.0, 1.0])

    def test_symmetric_kappa(self):
        pt = solve_kappa(0.5, "mac", (1.0, 1.0), FIXED, samples=100_000, seed=2)
        k1, k2 = pt.kappa
        assert abs(k1 - k2) <= 0.02 * max(k1, k2)
        r = pt.estimate.rates
        assert abs(r[0] - r[1]) <= 3 * math.hypot(*pt.estimate.rate_se) + 0.01 * r.max()
        np.testing.assert_allclose(pt.estimate.powers, [1.0, 1.0], rtol=0.01)

    def test_bc_meets_budget(self):
        pt = solve_kappa(0.3, "bc", (2.0,), [0, 0.5, 1], samples=50_000, seed=2)
        assert pt.estimate.powers[0] == pytest.approx(2.0, rel=0.01)
        assert pt.estimate.split.sum() == pytest.approx(pt.estimate.powers[0])

    def test_zero_budget_silences_user(self):
        pt = solve_kappa(0.5, "mac", (0.0, 1.0), FIXED, samples=20_000)
        assert pt.estimate.rates[0] == 0 and pt.estimate.powers[0] == 0

    def test_non_convergence_raises(self):
        with pytest.raises(KappaConvergenceError) as info:
            solve_kappa(0.5, "mac", (1.0, 1.0), FIXED, samples=20_000, max_outer=0)
        assert info.value.w == 0.5


class TestThresholdRule:
    @pytest.mark.parametrize("r0,budget", [(1.0, 1.0), (0.5, 0.3), (2.0, 4.0)])
    def test_threshold_matches_exp1_root(self, r0, budget):
        t, rate = optimal_threshold_policy(r0, budget)
        t_ref, rate_ref = exp1_threshold(r0, budget)
        assert t == pytest.approx(t_ref, rel=1e-8)
        assert rate == pytest.approx(rate_ref, rel=1e-8)

    def test_limits(self):
        assert optimal_threshold_policy(1.0, math.inf) == (0.0, 1.0)
        assert optimal_threshold_policy(1.0, 0.0) == (math.inf, 0.0)
        with pytest.raises(ValueError):
            optimal_threshold_policy(0.0, 1.0)

    def test_sweep_endpoint_matches_single_user_optimum(self):
        sweep = boundary_sweep("mac", (1.0, 1.0), FIXED, np.linspace(0, 1, 11),
                               samples=100_000, seed=5)
        _, rate = optimal_threshold_policy(1.0, 1.0)
        end = sweep.points[-1]
        assert end.w == 1.0
        assert end.estimate.rates[0] == pytest.approx(rate, abs=0.01)
        assert sweep.region.support((1, 0)) == pytest.approx(rate, abs=0.01)


class TestSweep:
    def test_region_convex_with_origin(self):
        sweep = boundary_sweep("bc", (2.0,), FIXED, np.linspace(0, 1, 11), samples=20_000)
        region = sweep.region
        assert region.vertices[0].tolist() == [0.0, 0.0]
        assert region.area() > 0
        for p in sweep.points:
            assert contains(region, type(region)([p.estimate.rates]), 1e-12)

    def test_rejects_coarse_grid(self):
        with pytest.raises(ValueError):
            boundary_sweep("mac", (1, 1), FIXED, np.linspace(0, 1, 5))

    def test_refinement_adds_points(self):
        grid = np.linspace(0, 1, 11)
        base = boundary_sweep("mac", (1, 1), FIXED, grid, samples=10_000)
        refined = boundary_sweep("mac", (1, 1), FIXED, grid, samples=10_000,
                                 refine_tol=0.05)
        assert len(refined.points) > len(base.points)
        assert contains(refined.region, base.region, 1e-12)


def test_draws_shared_between_solvers():
    chi = sampling.draw(ChannelModel(), 70_000, 4)
    again = sampling.draw(ChannelModel(), 70_000, 4)
    np.testing.assert_array_equal(chi, again)


def test_alternate_names():
    from mrstab import avgpower
    assert avgpower.lemma1_threshold_oracle is avgpower.optimal_threshold_policy
    assert avgpower.fig5_constants is avgpower.threshold_constants
