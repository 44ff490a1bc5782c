"""MAC/BC duality checks for stability regions.

A dual MAC splits the BC power budget ``P`` as ``(alpha P, (1 - alpha) P)``.
Under peak constraints the union of dual MAC regions sits inside the BC
region (strictly, in general); under average constraints the two coincide.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import avgpower, peak
from .core import (ChannelModel, ConstraintKind, rate_grid,
                   snr_threshold, within_budget, RateSet)
from .geometry import (ConvexPolygon, contains, convex_hull,
                       hausdorff_distance)

__all__ = [
    "DualFamilySpec",
    "DualityResult",
    "OnOffResult",
    "dual_budgets",
    "mac_region",
    "bc_region",
    "union_dual_mac_regions",
    "duality_check",
    "onoff_case",
    "centralized_mac_supported_set",
    "emulate_bc_with_mac",
    "emulation_report",
]


@dataclass(frozen=True)
class DualFamilySpec:
    """BC budget and the grid of dual MAC splits."""

    total: float
    kind: ConstraintKind = ConstraintKind.PEAK
    alpha_points: int = 21

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        if self.total < 0:
            raise ValueError("total budget must be nonnegative")
        if self.kind is ConstraintKind.FIXED:
            raise ValueError("duality is defined for peak and average constraints")
        if self.alpha_points < 2:
            raise ValueError("alpha grid needs at least two points")

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.alpha_points)


def dual_budgets(total: float, alpha: float) -> tuple[float, float]:
    # the second budget is computed so the pair sums to ``total`` exactly
    b1 = alpha * total
    return b1, total - b1


def mac_region(kind, budgets, rsets, model: ChannelModel = ChannelModel(),
               w_grid=None, samples: int = 10**5, seed: int = 0,
               tol: float = 0.01) -> ConvexPolygon:
    kind = ConstraintKind(kind)
    if kind is ConstraintKind.PEAK:
        return peak.stability_region_peak(peak.mac_partition(rsets, budgets, model))
    return avgpower.boundary_sweep("mac", budgets, rsets, w_grid, model, samples, seed,
                                   tol).region


def bc_region(kind, total: float, rsets, model: ChannelModel = ChannelModel(),
              w_grid=None, samples: int = 10**5, seed: int = 0, tol: float = 0.01,
              method: str = "quadrature"):
    """BC region; returns (region, detail) where detail is cells or a sweep."""
    kind = ConstraintKind(kind)
    if kind is ConstraintKind.PEAK:
        cells = peak.bc_partition(rsets, total, model, samples=max(samples, 10**4),
                                  seed=seed, method=method)
        return peak.stability_region_peak(cells), cells
    sweep = avgpower.boundary_sweep("bc", (total,), rsets, w_grid, model, samples,
                                    seed, tol)
    return sweep.region, sweep


def union_dual_mac_regions(spec: DualFamilySpec, rsets,
                           model: ChannelModel = ChannelModel(), w_grid=None,
                           samples: int = 10**5, seed: int = 0, tol: float = 0.01,
                           workers: int = 1):
    """Hull of the union of dual MAC regions over the alpha grid.

    Returns (hull, per_alpha) with per_alpha a list of (alpha, region).
    Each alpha reuses the same channel draws, so results do not depend on
    ``workers``.
    """
    alphas = [float(a) for a in spec.alphas]

    def one(a):
        try:
            return mac_region(spec.kind, dual_budgets(spec.total, a), rsets, model,
                              w_grid, samples, seed, tol)
        except avgpower.KappaConvergenceError as exc:
            exc.alpha = a
            raise

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            regions = list(pool.map(one, alphas))
    else:
        regions = [one(a) for a in alphas]
    per_alpha = list(zip(alphas, regions))
    hull = convex_hull(np.concatenate([r.vertices for _, r in per_alpha]))
    return hull, per_alpha


@dataclass
class DualityResult:
    kind: ConstraintKind
    total: float
    bc: ConvexPolygon
    union: ConvexPolygon
    per_alpha: list
    contains_tol: float
    bc_contains_union: bool
    union_contains_bc: bool
    hausdorff: float
    bc_max_sum_rate: float

    @property
    def relative_hausdorff(self) -> float:
        if self.bc_max_sum_rate == 0:
            return 0.0
        return self.hausdorff / self.bc_max_sum_rate

    def report(self) -> dict:
        return {
            "kind": self.kind.value,
            "total_budget": self.total,
            "bc_region": self.bc.to_dict(),
            "union_hull": self.union.to_dict(),
            "per_alpha": [{"alpha": a, "region": r.to_dict()} for a, r in self.per_alpha],
            "contains_tolerance": self.contains_tol,
            "bc_contains_union": self.bc_contains_union,
            "union_contains_bc": self.union_contains_bc,
            "hausdorff": self.hausdorff,
            "bc_max_sum_rate": self.bc_max_sum_rate,
            "relative_hausdorff": self.relative_hausdorff,
        }


def duality_check(spec: DualFamilySpec, rsets, model: ChannelModel = ChannelModel(),
                  w_grid=None, samples: int = 10**5, seed: int = 0,
                  tol: float = 0.01, contains_tol: float = 1e-3,
                  bc_method: str = "quadrature", workers: int = 1) -> DualityResult:
    """Compare the BC region with the hull of its dual MAC regions."""
    bc, _ = bc_region(spec.kind, spec.total, rsets, model, w_grid, samples, seed, tol,
                      bc_method)
    union, per_alpha = union_dual_mac_regions(spec, rsets, model, w_grid, samples,
                                              seed, tol, workers)
    return DualityResult(
        kind=spec.kind, total=spec.total, bc=bc, union=union, per_alpha=per_alpha,
        contains_tol=contains_tol,
        bc_contains_union=contains(bc, union, contains_tol),
        union_contains_bc=contains(union, bc, contains_tol),
        hausdorff=hausdorff_distance(bc, union),
        bc_max_sum_rate=bc.support((1.0, 1.0)),
    )


@dataclass
class OnOffResult:
    bc_region: ConvexPolygon
    mac_union_region: ConvexPolygon
    strict: bool
    per_alpha: list = field(default_factory=list)
    gains: tuple = ()

    def report(self) -> dict:
        return {
            "gains": [list(g) for g in self.gains],
            "bc_region": self.bc_region.to_dict(),
            "mac_union_region": self.mac_union_region.to_dict(),
            "bc_area": self.bc_region.area(),
            "mac_union_area": self.mac_union_region.area(),
            "strict": self.strict,
            "per_alpha": [{"alpha": a, "region": r.to_dict()} for a, r in self.per_alpha],
        }


def onoff_case(r0: float, total: float, alpha_points: int = 21) -> OnOffResult:
    """Exact two-state ON-OFF example with equiprobable mirrored states.

    In each state one link exactly supports ``r0`` at full power and the
    other cannot, so the BC region is a square of side r0/2 while every dual
    MAC region is an axis segment.
    """
    if r0 <= 0 or total < 0:
        raise ValueError("need r0 > 0 and total >= 0")
    g = float(snr_threshold(r0))
    on = g / total if total > 0 else 1.0
    off = 0.5 * on
    states = [(on, off), (off, on)]
    probs = [0.5, 0.5]
    rs = RateSet.fixed(r0)
    bc = peak.stability_region_discrete(
        states, probs, lambda chi: peak.bc_supported_set(chi, total, rs))
    per_alpha = []
    for a in np.linspace(0.0, 1.0, alpha_points):
        budgets = dual_budgets(total, float(a))
        region = peak.stability_region_discrete(
            states, probs, lambda chi: peak.mac_supported_set(chi, budgets, rs))
        per_alpha.append((float(a), region))
    union = convex_hull(np.concatenate([r.vertices for _, r in per_alpha]))
    strict = contains(bc, union, 0.0) and not contains(union, bc, 0.0)
    return OnOffResult(bc, union, strict, per_alpha, tuple(states))


def centralized_mac_supported_set(chi, budget: float, rsets, method: str = "analytic",
                                  grid_points: int = 2001) -> frozenset:
    """Rate pairs a MAC with a shared peak budget can decode at ``chi``.

    ``analytic``: the best split spends exactly the minimum powers of the
    cheaper decode order, so r is supported iff min over orders of
    P1 + P2 <= budget. ``grid``: scan splits (a b, (1-a) b) on a uniform grid
    and test each as a distributed-power MAC (an inner approximation).
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    chi = np.asarray(chi, dtype=float)
    grid = rate_grid(rsets)
    if method == "analytic":
        out = set()
        for r in grid:
            g1, g2 = float(snr_threshold(r.r1)), float(snr_threshold(r.r2))
            sums = []
            for c1, c2 in ((g1 * (1 + g2), g2), (g1, g2 * (1 + g1))):
                sums.append(_cost(c1, chi[0]) + _cost(c2, chi[1]))
            if bool(within_budget(min(sums), budget)):
                out.add(r)
        return frozenset(out)
    if method == "grid":
        out = set()
        for a in np.linspace(0.0, 1.0, grid_points):
            out |= peak.mac_supported_set(chi, dual_budgets(budget, float(a)), rsets)
        return frozenset(out)
    raise ValueError(f"unknown method {method!r}")


def _cost(c: float, chi: float) -> float:
    if c == 0:
        return 0.0
    return c / chi if chi > 0 else math.inf


def emulate_bc_with_mac(w: float, kappa: float, rsets,
                        model: ChannelModel = ChannelModel(),
                        samples: int = 10**5, seed: int = 0) -> dict:
    """Replay a BC average-power rate map on a MAC with per-state power splits.

    At each state the MAC sends the BC's rate pair with the stronger user
    decoded first at minimum powers. Reports mean BC power, mean split
    powers, and the fraction of states the MAC decodes at those powers.
    """
    from . import sampling

    chi = sampling.draw(model, samples, seed)
    rm = avgpower.RateMap("bc", rsets, w)
    total, s1, s2 = rm.costs(chi)
    idx = rm.choose_from_costs([kappa], (total,))
    pick = lambda t: np.take_along_axis(t, idx[None, :], axis=0)[0]
    p, p1, p2 = pick(total), pick(s1), pick(s2)
    rates = rm.rate_array[idx]
    ok = np.ones(len(chi), dtype=bool)
    for k, r in enumerate(rm.rates):
        sel = idx == k
        if np.any(sel):
            ok[sel] = _mac_decodes(r, chi[sel], p1[sel], p2[sel])
    n = len(chi)
    return {
        "w": w,
        "kappa": kappa,
        "rates": rates.mean(axis=0).tolist(),
        "bc_power": float(p.mean()),
        "bc_power_se": float(p.std(ddof=1) / math.sqrt(n)),
        "split_powers": [float(p1.mean()), float(p2.mean())],
        "split_sum": float((p1 + p2).mean()),
        "decodable_fraction": float(ok.mean()),
    }


def _mac_decodes(r, chi, p1, p2) -> np.ndarray:
    """Per-state check that the MAC decodes r at powers (p1, p2) by SINR."""
    g1, g2 = float(snr_threshold(r.r1)), float(snr_threshold(r.r2))
    rx1, rx2 = chi[:, 0] * p1, chi[:, 1] * p2
    slack = 1 + 1e-9
    # pi1: user 1 first against user 2's signal, then user 2 alone
    pi1 = (rx1 * slack >= g1 * (1 + rx2)) & (rx2 * slack >= g2)
    pi2 = (rx2 * slack >= g2 * (1 + rx1)) & (rx1 * slack >= g1)
    return pi1 | pi2


def emulation_report(sweep, rsets, model: ChannelModel = ChannelModel(),
                     samples: int = 10**5, seed: int = 0) -> list[dict]:
    """Run :func:`emulate_bc_with_mac` at every point of a BC average sweep."""
    return [emulate_bc_with_mac(p.w, p.kappa[0], rsets, model, samples, seed)
            for p in sweep.points]
