import numpy as np
import pytest

from mrstab.avgpower import boundary_sweep
from mrstab.core import ConstraintKind, RateSet, RateVector
from mrstab.duality import (DualFamilySpec, centralized_mac_supported_set, dual_budgets,
                            duality_check, emulate_bc_with_mac, emulation_report,
                            onoff_case, union_dual_mac_regions)
from mrstab.geometry import contains, convex_hull, hausdorff_distance
from mrstab.peak import bc_supported_set, mac_partition, stability_region_peak

FIXED = RateSet.fixed(1.0)


class TestFamilySpec:
    def test_splits_sum_to_total(self):
        spec = DualFamilySpec(2.0, "peak", 21)
        for a in spec.alphas:
            b1, b2 = dual_budgets(spec.total, a)
            assert b1 + b2 == spec.total and b1 >= 0 and b2 >= 0

    def test_validation(self):
        with pytest.raises(ValueError):
            DualFamilySpec(-1.0)
        with pytest.raises(ValueError):
            DualFamilySpec(1.0, "fixed")
        assert DualFamilySpec(1.0, "average").kind is ConstraintKind.AVERAGE


class TestPeakUnion:
    def test_alpha_one_is_single_user(self):
        _, per_alpha = union_dual_mac_regions(DualFamilySpec(2.0, "peak", 11), FIXED)
        a, region = per_alpha[-1]
        assert a == 1.0
        assert region.is_segment
        assert region.support((1, 0)) == pytest.approx(np.exp(-0.5))

    def test_union_inside_bc(self):
        res = duality_check(DualFamilySpec(2.0, "peak", 21), FIXED)
        assert res.bc_contains_union
        assert not res.union_contains_bc
        hull = convex_hull(np.concatenate([r.vertices for _, r in res.per_alpha]))
        assert hull == res.union

    def test_union_inside_bc_multirate(self):
        rs = [0, 0.5, 1.0]
        res = duality_check(DualFamilySpec(1.5, "peak", 11), rs)
        assert contains(res.bc, res.union, 1e-6)
        for a, region in res.per_alpha:
            direct = stability_region_peak(mac_partition(rs, dual_budgets(1.5, a)))
            assert region == direct


class TestOnOff:
    def test_unit_rate(self):
        res = onoff_case(1.0, 1.0)
        np.testing.assert_allclose(res.bc_region.vertices,
                                   [[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]])
        np.testing.assert_allclose(res.mac_union_region.vertices,
                                   [[0, 0], [0.5, 0], [0, 0.5]])
        assert res.strict

    def test_zero_budget(self):
        res = onoff_case(1.0, 0.0)
        assert res.bc_region.is_point and res.mac_union_region.is_point
        assert not res.strict

    @pytest.mark.parametrize("r0,budget", [(0.5, 1.0), (1.0, 3.0), (2.5, 0.7)])
    def test_area_ratio_is_two(self, r0, budget):
        res = onoff_case(r0, budget)
        assert res.bc_region.area() == pytest.approx((r0 / 2) ** 2)
        assert res.bc_region.area() == pytest.approx(2 * res.mac_union_region.area())
        for a, region in res.per_alpha:
            assert region.area() == 0.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            onoff_case(0.0, 1.0)


class TestCentralizedMac:
    def test_example(self):
        full = {RateVector(a, b) for a in (0, 1) for b in (0, 1)}
        assert centralized_mac_supported_set((2, 1), 2.0, FIXED) == full
        assert centralized_mac_supported_set((2, 1), 2.0, FIXED) == \
            bc_supported_set((2, 1), 2.0, FIXED)
        assert centralized_mac_supported_set((2, 1), 0.0, FIXED) == {RateVector(0, 0)}

    def test_equals_bc_on_random_states(self):
        rng = np.random.default_rng(12)
        rs = [0, 0.5, 1, 1.5]
        for chi in rng.exponential(size=(2000, 2)):
            assert centralized_mac_supported_set(chi, 2.0, rs) == bc_supported_set(chi, 2.0, rs)

    def test_split_grid_is_inner_approximation(self):
        rng = np.random.default_rng(13)
        for chi in rng.exponential(size=(40, 2)):
            grid = centralized_mac_supported_set(chi, 2.0, [0, 1], "grid", 201)
            assert grid <= centralized_mac_supported_set(chi, 2.0, [0, 1])

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            centralized_mac_supported_set((1, 1), 1.0, FIXED, "magic")


class TestAverageEmulation:
    def test_split_powers_sum_and_decode(self):
        out = emulate_bc_with_mac(0.35, 0.25, [0, 0.5, 1], samples=20_000, seed=4)
        assert out["split_sum"] == pytest.approx(out["bc_power"], rel=1e-12)
        assert out["decodable_fraction"] == 1.0

    def test_report_over_sweep(self):
        sweep = boundary_sweep("bc", (2.0,), FIXED, np.linspace(0, 1, 11), samples=20_000)
        rows = emulation_report(sweep, FIXED, samples=20_000)
        assert len(rows) == 11
        for row, pt in zip(rows, sweep.points):
            assert abs(row["split_sum"] - row["bc_power"]) <= 1e-9
            assert row["bc_power"] == pytest.approx(pt.estimate.powers[0], rel=1e-12)
            assert row["decodable_fraction"] == 1.0


def test_average_union_close_to_bc():
    grid = np.linspace(0, 1, 21)
    res = duality_check(DualFamilySpec(2.0, "average", 11), FIXED, w_grid=grid,
                        samples=20_000, seed=1)
    assert res.relative_hausdorff <= 0.02
    assert hausdorff_distance(res.bc, res.union) == res.hausdorff
