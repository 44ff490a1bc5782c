"""Peak-power stability regions of two-user MAC and BC networks.

The gain space is partitioned into cells on which the complete set of
supported rate pairs is constant; the stability region is the
probability-weighted Minkowski sum of the convex hulls of those sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import sampling
from .core import (ChannelModel, RateVector, as_rate_sets, rate_grid,
                   snr_threshold, within_budget, _term)
from .geometry import ConvexPolygon, convex_hull, minkowski_sum_all, scale

__all__ = [
    "PartitionCell",
    "feasible",
    "supported_mask",
    "mac_supported_set",
    "bc_supported_set",
    "mac_thresholds",
    "mac_partition",
    "mc_partition",
    "bc_partition",
    "quadrature_partition",
    "stability_region_peak",
    "stability_region_discrete",
    "simulate_scheduler",
    "partition_report",
]

NETWORKS = ("mac", "bc")


@dataclass
class PartitionCell:
    """Gain-space cell with a constant supported rate set."""

    rate_set: tuple  # sorted RateVectors, always includes (0, 0)
    probability: float
    stderr: float = 0.0
    rectangles: list = field(default_factory=list)  # MAC: ((x0, x1), (y0, y1))

    def hull(self) -> ConvexPolygon:
        return convex_hull(self.rate_set)

    def to_dict(self) -> dict:
        out = {
            "rate_set": [list(r) for r in self.rate_set],
            "probability": self.probability,
            "stderr": self.stderr,
        }
        if self.rectangles:
            out["rectangles"] = [[list(a), list(b)] for a, b in self.rectangles]
        return out


def _budget_pair(network: str, budgets) -> tuple:
    b = tuple(float(x) for x in np.atleast_1d(budgets))
    if any(x < 0 or math.isnan(x) for x in b):
        raise ValueError("budgets must be nonnegative")
    if network == "mac":
        if len(b) != 2:
            raise ValueError("MAC needs two budgets")
        return b
    if network == "bc":
        if len(b) != 1:
            raise ValueError("BC needs one budget")
        return b
    raise ValueError(f"unknown network {network!r}")


def feasible(network: str, r, chi1, chi2, budgets):
    """Whether rate pair ``r`` is supported at gains (chi1, chi2).

    MAC: some decode order has minimum powers within the per-user budgets.
    BC: the minimum total power is within the single budget.
    """
    budgets = _budget_pair(network, budgets)
    g1, g2 = snr_threshold(r[0]), snr_threshold(r[1])
    if network == "mac":
        b1, b2 = budgets
        pi1 = within_budget(_term(g1 * (1 + g2), chi1), b1) & within_budget(_term(g2, chi2), b2)
        pi2 = within_budget(_term(g1, chi1), b1) & within_budget(_term(g2 * (1 + g1), chi2), b2)
        return pi1 | pi2
    (b,) = budgets
    c1, c2 = np.asarray(chi1, dtype=float), np.asarray(chi2, dtype=float)
    strong1 = _term(g2, c2) + _term(g1 * (1 + g2), c1)
    strong2 = _term(g1, c1) + _term(g2 * (1 + g1), c2)
    return within_budget(np.where(c1 >= c2, strong1, strong2), b)


def supported_mask(network: str, chi: np.ndarray, budgets, rsets) -> np.ndarray:
    """Boolean matrix (n, K): column k flags grid point k of ``rate_grid``."""
    chi = np.atleast_2d(np.asarray(chi, dtype=float))
    grid = rate_grid(rsets)
    cols = [feasible(network, r, chi[:, 0], chi[:, 1], budgets) for r in grid]
    return np.stack(cols, axis=1)


def _to_set(row, grid) -> tuple:
    return tuple(sorted(g for g, on in zip(grid, row) if on))


def mac_supported_set(chi, budgets, rsets) -> frozenset:
    """Rate pairs decodable under some order at powers within peak budgets."""
    grid = rate_grid(rsets)
    row = supported_mask("mac", np.asarray(chi, dtype=float)[None, :], budgets, rsets)[0]
    return frozenset(_to_set(row, grid))


def bc_supported_set(chi, budget, rsets) -> frozenset:
    """Rate pairs whose minimum BC power is within the peak budget."""
    grid = rate_grid(rsets)
    row = supported_mask("bc", np.asarray(chi, dtype=float)[None, :], budget, rsets)[0]
    return frozenset(_to_set(row, grid))


def mac_thresholds(rsets, budgets) -> tuple[np.ndarray, np.ndarray]:
    """Sorted finite gain thresholds at which MAC feasibility can change."""
    b1, b2 = _budget_pair("mac", budgets)
    t1, t2 = set(), set()
    for r in rate_grid(rsets):
        g1, g2 = float(snr_threshold(r[0])), float(snr_threshold(r[1]))
        if g1 > 0 and b1 > 0:
            t1.update((g1 / b1, g1 * (1 + g2) / b1))
        if g2 > 0 and b2 > 0:
            t2.update((g2 / b2, g2 * (1 + g1) / b2))
    return np.array(sorted(t1)), np.array(sorted(t2))


def _box_edges(t: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], t, [np.inf]])


def _representatives(edges: np.ndarray) -> np.ndarray:
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    return np.where(np.isinf(hi), np.where(lo > 0, 2 * lo, 1.0), mid)


def _sort_cells(cells: list) -> list:
    return sorted(cells, key=lambda c: (len(c.rate_set), c.rate_set))


def mac_partition(rsets, budgets, model: ChannelModel = ChannelModel()) -> list:
    """Closed-form MAC cells from the threshold grid of both gain axes.

    Feasibility of each rate pair under each order is a product of one
    threshold per axis, so the supported set is constant on every grid box.
    Box probabilities are products of per-link CDF differences.
    """
    grid = rate_grid(rsets)
    t1, t2 = mac_thresholds(rsets, budgets)
    e1, e2 = _box_edges(t1), _box_edges(t2)
    x, y = _representatives(e1), _representatives(e2)
    p1 = np.diff(model.cdf(e1, 0))
    p2 = np.diff(model.cdf(e2, 1))
    X, Y = np.meshgrid(x, y, indexing="ij")
    mask = supported_mask("mac", np.column_stack([X.ravel(), Y.ravel()]), budgets, rsets)
    cells: dict = {}
    for idx, row in enumerate(mask):
        i, j = divmod(idx, len(y))
        key = _to_set(row, grid)
        cell = cells.setdefault(key, PartitionCell(key, 0.0))
        cell.probability += float(p1[i] * p2[j])
        cell.rectangles.append(((float(e1[i]), float(e1[i + 1])),
                                (float(e2[j]), float(e2[j + 1]))))
    return _sort_cells([c for c in cells.values() if c.probability > 0])


def mc_partition(network: str, rsets, budgets, model: ChannelModel = ChannelModel(),
                 samples: int = 10**6, seed: int = 0, workers: int = 1) -> list:
    """Monte Carlo cell frequencies with binomial standard errors."""
    if samples < 1:
        raise ValueError("samples must be positive")
    grid = rate_grid(rsets)

    def count(chi):
        rows, counts = np.unique(supported_mask(network, chi, budgets, rsets),
                                 axis=0, return_counts=True)
        return {_to_set(r, grid): int(c) for r, c in zip(rows, counts)}

    totals: dict = {}
    for part in sampling.map_blocks(count, model, samples, seed, workers):
        for key, c in part.items():
            totals[key] = totals.get(key, 0) + c
    cells = []
    for key, c in totals.items():
        p = c / samples
        cells.append(PartitionCell(key, p, math.sqrt(p * (1 - p) / samples)))
    return _sort_cells(cells)


def _gauss_nodes(breaks: np.ndarray, panels: int, order: int):
    """Composite Gauss-Legendre nodes/weights on [0, 1] split at ``breaks``."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    cuts = np.unique(np.concatenate([[0.0, 1.0], breaks[(breaks > 0) & (breaks < 1)]]))
    per = max(1, panels // (len(cuts) - 1))
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        edges = np.linspace(a, b, per + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        nodes.append((0.5 * (hi - lo) * xg + 0.5 * (hi + lo)).ravel())
        weights.append((0.5 * (hi - lo) * wg).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _breakpoints(network: str, rsets, budgets) -> np.ndarray:
    b = _budget_pair(network, budgets)[0]
    out = set()
    for r in rate_grid(rsets):
        g1, g2 = float(snr_threshold(r[0])), float(snr_threshold(r[1]))
        if g1 > 0 and b > 0:
            out.update((g1 / b, g1 * (1 + g2) / b))
    return np.array(sorted(out))


def quadrature_partition(network: str, rsets, budgets,
                         model: ChannelModel = ChannelModel(),
                         panels: int = 2000, order: int = 8) -> list:
    """Deterministic cell probabilities by nested integration.

    For each rate pair, feasibility is monotone in chi2 at fixed chi1, so the
    conditional cell masses are CDF differences between bisected chi2
    thresholds. The outer chi1 integral uses composite Gauss-Legendre in
    CDF coordinates, split where single-user feasibility flips.
    """
    grid = rate_grid(rsets)
    K = len(grid)
    breaks = model.cdf(_breakpoints(network, rsets, budgets), 0)
    u1, w1 = _gauss_nodes(np.atleast_1d(breaks), panels, order)
    chi1 = model.ppf(u1, 0)
    thr = np.empty((len(u1), K))
    for k, r in enumerate(grid):
        lo = np.zeros_like(u1)
        hi = np.ones_like(u1)
        ok_hi = feasible(network, r, chi1, np.full_like(u1, np.inf), budgets)
        ok_lo = feasible(network, r, chi1, np.zeros_like(u1), budgets)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            ok = feasible(network, r, chi1, model.ppf(mid, 1), budgets)
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        thr[:, k] = np.where(ok_lo, 0.0, np.where(ok_hi, hi, 1.0))
    order_k = np.argsort(thr, axis=1, kind="stable")
    s = np.take_along_axis(thr, order_k, axis=1)
    bounds = np.concatenate([s, np.ones((len(u1), 1))], axis=1)
    lengths = np.diff(np.concatenate([np.zeros((len(u1), 1)), bounds], axis=1), axis=1)
    # interval j (0..K) holds the first j rate pairs in threshold order
    masks = np.zeros((len(u1), K + 1, K), dtype=bool)
    rows = np.arange(len(u1))
    for j in range(1, K + 1):
        masks[:, j] = masks[:, j - 1]
        masks[rows, j, order_k[:, j - 1]] = True
    weights = (w1[:, None] * lengths).ravel()
    keys, inv = np.unique(masks.reshape(-1, K), axis=0, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=weights, minlength=len(keys))
    cells = [PartitionCell(_to_set(row, grid), float(m))
             for row, m in zip(keys, mass) if m > 0]
    return _sort_cells(cells)


def bc_partition(rsets, budget, model: ChannelModel = ChannelModel(),
                 samples: int = 10**6, seed: int = 0, workers: int = 1,
                 method: str = "mc") -> list:
    """BC cells by Monte Carlo classification (or nested quadrature)."""
    if method == "mc":
        if samples < 10**4:
            raise ValueError("BC Monte Carlo partition needs at least 1e4 samples")
        return mc_partition("bc", rsets, budget, model, samples, seed, workers)
    if method == "quadrature":
        return quadrature_partition("bc", rsets, budget, model)
    raise ValueError(f"unknown method {method!r}")


def stability_region_peak(cells: Sequence[PartitionCell]) -> ConvexPolygon:
    """Sum over cells of probability times the hull of the supported set."""
    return minkowski_sum_all(scale(c.hull(), c.probability) for c in cells)


def stability_region_discrete(states, probs, supported: Callable) -> ConvexPolygon:
    """Stability region for a finite set of gain states.

    ``supported(chi)`` returns the supported rate set at state ``chi``.
    """
    polys = [scale(convex_hull(list(supported(chi))), p) for chi, p in zip(states, probs)]
    return minkowski_sum_all(polys)


def simulate_scheduler(network: str, rsets, budgets, w,
                       model: ChannelModel = ChannelModel(),
                       slots: int = 10**6, seed: int = 0, workers: int = 1):
    """Long-run rates of the stationary scheduler maximizing <w, r> per slot.

    Each slot draws a gain state and transmits the supported rate pair with
    the largest weighted sum (first in grid order on ties). Returns the mean
    rate vector and its standard errors.
    """
    grid = np.array(rate_grid(rsets))
    w = np.asarray(w, dtype=float)
    values = grid @ w

    def run(chi):
        mask = supported_mask(network, chi, budgets, rsets)
        score = np.where(mask, values[None, :], -np.inf)
        pick = grid[np.argmax(score, axis=1)]
        return pick.sum(axis=0), (pick**2).sum(axis=0)

    parts = sampling.map_blocks(run, model, slots, seed, workers)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / slots
    var = np.maximum(s2 / slots - mean**2, 0.0) * slots / max(slots - 1, 1)
    return mean, np.sqrt(var / slots)


def partition_report(cells: Sequence[PartitionCell], **meta) -> dict:
    return {
        **meta,
        "total_probability": float(sum(c.probability for c in cells)),
        "cells": [c.to_dict() for c in cells],
    }
