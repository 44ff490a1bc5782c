"""Average-power stability regions via Lagrangian rate maps.

For a tangent direction (w, 1-w) and multipliers kappa, every gain state is
mapped to the single rate pair (and, for the MAC, decoding order) maximizing
``<w, r> - sum_i kappa_i * P_i``. The multipliers are tuned by root finding so
that the average powers meet the budgets, and sweeping ``w`` traces the
region boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from . import sampling
from .core import (ChannelModel, DecodeOrder, PowerAllocation, RateSet, RateVector,
                   as_rate_sets, rate_grid, snr_threshold)
from .geometry import ConvexPolygon, convex_hull

__all__ = [
    "KappaConvergenceError",
    "RateMap",
    "RatePowerEstimate",
    "SweepPoint",
    "SweepResult",
    "mac_choice",
    "bc_choice",
    "expected_rate_power",
    "solve_kappa",
    "boundary_sweep",
    "optimal_threshold_policy",
    "threshold_constants",
    "lemma1_threshold_oracle",
    "fig5_constants",
    "single_user_threshold",
]

log = logging.getLogger(__name__)


class KappaConvergenceError(RuntimeError):
    """Multiplier search failed; carries the last iterate and residuals."""

    def __init__(self, msg, kappa=None, residuals=None, w=None):
        super().__init__(msg)
        self.kappa = kappa
        self.residuals = residuals
        self.w = w


def threshold_constants(r0: float) -> tuple[float, float]:
    """(gamma0, gamma1) = (R0 / (2**R0 - 1), 2**R0 - 1)."""
    g1 = float(snr_threshold(r0))
    return r0 / g1, g1


def single_user_threshold(w: float, kappa: float, r0: float) -> float:
    """Gain above which a lone user-1 transmission beats silence.

    Transmit iff w*R0 - kappa*gamma1/chi > 0, i.e. chi > kappa*gamma1/(w*R0).
    """
    return kappa * float(snr_threshold(r0)) / (w * r0)


class RateMap:
    """Candidate table for one network, rate-set pair and weight ``w``.

    Candidates are ordered by the tie-break policy (larger <w, r>, then
    order pi1, then larger r1, then larger r2) so that ``argmax`` picking the
    first maximum realizes it. Power of candidate ``c`` at gains chi is
    ``c1[c] / chi1 + c2[c] / chi2`` per user (MAC) or per branch (BC).
    """

    def __init__(self, network: str, rsets, w: float):
        if not 0.0 <= w <= 1.0:
            raise ValueError("w must lie in [0, 1]")
        if network not in ("mac", "bc"):
            raise ValueError(f"unknown network {network!r}")
        self.network = network
        self.w = float(w)
        cands = []
        seen = set()
        for r in rate_grid(rsets):
            g1, g2 = float(snr_threshold(r.r1)), float(snr_threshold(r.r2))
            # (pi1 coefficients, pi2 coefficients)
            a = (g1 * (1 + g2), g2)
            b = (g1, g2 * (1 + g1))
            if network == "mac":
                for order, coef in ((DecodeOrder.PI1, a), (DecodeOrder.PI2, b)):
                    key = (r, coef)
                    if key in seen:
                        continue
                    seen.add(key)
                    cands.append((r, order, coef, coef))
            else:
                cands.append((r, None, a, b))
        value = lambda c: self.w * c[0].r1 + (1 - self.w) * c[0].r2
        cands.sort(key=lambda c: (-value(c), int(c[1] or 1), -c[0].r1, -c[0].r2))
        self.rates = [c[0] for c in cands]
        self.orders = [c[1] for c in cands]
        self.values = np.array([value(c) for c in cands])
        self.rate_array = np.array(self.rates, dtype=float).reshape(-1, 2)
        # branch/order 1 and 2 coefficient pairs, shape (C, 2) each
        self.coef1 = np.array([c[2] for c in cands], dtype=float)
        self.coef2 = np.array([c[3] for c in cands], dtype=float)

    def __len__(self) -> int:
        return len(self.rates)

    def costs(self, chi: np.ndarray):
        """Per-candidate powers at each gain state, arrays of shape (C, n).

        MAC: (P1, P2). BC: (total, split1, split2), where the split is the
        dual-MAC power pair with the stronger user decoded first.
        """
        chi = np.atleast_2d(np.asarray(chi, dtype=float))
        inv = _inv(chi)
        if self.network == "mac":
            return (_mul(self.coef1[:, 0], inv[:, 0]), _mul(self.coef1[:, 1], inv[:, 1]))
        strong1 = (chi[:, 0] >= chi[:, 1])[None, :]
        s1 = np.where(strong1, _mul(self.coef1[:, 0], inv[:, 0]), _mul(self.coef2[:, 0], inv[:, 0]))
        s2 = np.where(strong1, _mul(self.coef1[:, 1], inv[:, 1]), _mul(self.coef2[:, 1], inv[:, 1]))
        return (s1 + s2, s1, s2)

    def choose_from_costs(self, kappa, costs) -> np.ndarray:
        """Index of the best candidate per state; first maximum wins."""
        kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
        if np.any(kappa < 0):
            raise ValueError("multipliers must be nonnegative")
        terms = costs[:2] if self.network == "mac" else costs[:1]
        n = costs[0].shape[1]
        best = np.full(n, -np.inf)
        idx = np.zeros(n, dtype=np.intp)
        for c in range(len(self.values)):
            score = np.full(n, self.values[c])
            for k, p in zip(kappa, terms):
                score -= _weighted(k, p[c])
            idx = np.where(score > best, c, idx)
            best = np.maximum(best, score)
        return idx

    def choose(self, kappa, chi) -> np.ndarray:
        return self.choose_from_costs(kappa, self.costs(chi))


def _inv(chi):
    with np.errstate(divide="ignore"):
        return np.where(chi > 0, 1.0 / np.where(chi > 0, chi, 1.0), np.inf)


def _mul(coef, inv):
    """coef[c] * inv[n] with 0 * inf := 0, shape (C, n)."""
    with np.errstate(invalid="ignore"):
        out = coef[:, None] * inv[None, :]
    return np.where(coef[:, None] == 0, 0.0, out)


def _weighted(k, p):
    """k * p with an infeasible (inf) power always costing inf."""
    if k == 0:
        return np.where(np.isinf(p), np.inf, 0.0)
    return k * p


def mac_choice(w: float, kappa, chi, rsets):
    """Lagrangian-optimal (rate, decode order, powers) at one MAC state."""
    rm = RateMap("mac", rsets, w)
    costs = rm.costs(np.asarray(chi, dtype=float)[None, :])
    c = int(rm.choose_from_costs(kappa, costs)[0])
    return (rm.rates[c], rm.orders[c],
            PowerAllocation(float(costs[0][c, 0]), float(costs[1][c, 0])))


def bc_choice(w: float, kappa: float, chi, rsets):
    """Lagrangian-optimal (rate, total power) at one BC state."""
    rm = RateMap("bc", rsets, w)
    costs = rm.costs(np.asarray(chi, dtype=float)[None, :])
    c = int(rm.choose_from_costs(kappa, costs)[0])
    return rm.rates[c], float(costs[0][c, 0])


@dataclass
class RatePowerEstimate:
    """Monte Carlo means with standard errors.

    ``powers`` is (P1, P2) for the MAC and (P,) for the BC; ``split`` holds
    the BC's dual-MAC per-user powers.
    """

    rates: np.ndarray
    rate_se: np.ndarray
    powers: np.ndarray
    power_se: np.ndarray
    split: Optional[np.ndarray] = None
    split_se: Optional[np.ndarray] = None


def _gather(table: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.take_along_axis(table, idx[None, :], axis=0)[0]


class _Evaluator:
    """Rate/power averages over a fixed sample set (common random numbers)."""

    def __init__(self, network, rsets, w, chi):
        self.rm = RateMap(network, rsets, w)
        self.costs = self.rm.costs(chi)
        self.n = len(chi)

    def picks(self, kappa):
        return self.rm.choose_from_costs(kappa, self.costs)

    def mean_powers(self, kappa) -> np.ndarray:
        idx = self.picks(kappa)
        k = 2 if self.rm.network == "mac" else 1
        return np.array([_gather(self.costs[i], idx).mean() for i in range(k)])

    def estimate(self, kappa) -> RatePowerEstimate:
        idx = self.picks(kappa)
        rates = self.rm.rate_array[idx]
        r, rse = sampling.mean_and_se(rates)
        per = np.column_stack([_gather(c, idx) for c in self.costs])
        m, se = sampling.mean_and_se(per)
        if self.rm.network == "mac":
            return RatePowerEstimate(r, rse, m, se)
        return RatePowerEstimate(r, rse, m[:1], se[:1], m[1:], se[1:])


def expected_rate_power(w: float, kappa, network: str, rsets,
                        model: ChannelModel = ChannelModel(),
                        samples: int = 10**5, seed: int = 0) -> RatePowerEstimate:
    """Average rates and powers of the Lagrangian rate map under ``model``."""
    if samples < 10**4:
        raise ValueError("need at least 1e4 samples")
    chi = sampling.draw(model, samples, seed)
    return _Evaluator(network, rsets, w, chi).estimate(kappa)


def _solve_scalar(f, target: float, start: float, tol: float):
    """Find k >= 0 with f(k) within tol of target; f is nonincreasing.

    Returns (k, f(k), exact) where ``exact`` is False when the power jumps
    across the target and the feasible side of the jump is returned.
    """
    p0 = f(0.0)
    if p0 <= target * (1 + tol):
        return 0.0, p0, True
    k = start if start > 0 else 1.0
    pk = f(k)
    if abs(pk - target) <= tol * target:
        return k, pk, True
    if pk > target:
        lo, hi = k, 2 * k
        for _ in range(2000):
            ph = f(hi)
            if ph <= target:
                break
            lo, hi = hi, 2 * hi
        else:
            raise KappaConvergenceError("no multiplier meets the budget", kappa=hi)
    else:
        lo, hi, ph = k / 2, k, pk
        while lo > 1e-12:
            pl = f(lo)
            if pl > target:
                break
            hi, ph = lo, pl
            lo /= 2
        else:
            tiny = 1e-12
            pt = f(tiny)
            if pt <= target * (1 + tol):
                return tiny, pt, abs(pt - target) <= tol * target
            lo = tiny
        if abs(ph - target) <= tol * target:
            return hi, ph, True
    # Illinois false position on log(kappa); plain bisection as fallback
    pl = f(lo) if lo > 0 else math.inf
    gl, gh = pl - target, ph - target
    side = 0
    for it in range(200):
        a, b = math.log(lo), math.log(hi)
        if math.isfinite(gl) and gl > gh and it % 4 != 3:
            x = b - gh * (b - a) / (gh - gl)
            x = min(max(x, a + 0.01 * (b - a)), b - 0.01 * (b - a))
        else:
            x = 0.5 * (a + b)
        mid = math.exp(x)
        pm = f(mid)
        gm = pm - target
        if abs(gm) <= tol * target:
            return mid, pm, True
        if gm > 0:
            lo, gl = mid, gm
            if side == 1:
                gh *= 0.5
            side = 1
        else:
            hi, ph, gh = mid, pm, gm
            if side == -1:
                gl *= 0.5
            side = -1
        if hi - lo <= 1e-12 * hi:
            break
    return hi, ph, False


@dataclass
class SweepPoint:
    w: float
    kappa: tuple
    estimate: RatePowerEstimate
    iterations: int = 0

    def to_dict(self) -> dict:
        e = self.estimate
        out = {
            "w": self.w,
            "kappa": list(self.kappa),
            "rates": e.rates.tolist(),
            "rate_se": e.rate_se.tolist(),
            "powers": e.powers.tolist(),
            "power_se": e.power_se.tolist(),
        }
        if e.split is not None:
            out["split_powers"] = e.split.tolist()
            out["split_se"] = e.split_se.tolist()
        return out


def _solve_on(ev: _Evaluator, budgets, tol: float, max_outer: int, start=None):
    budgets = np.atleast_1d(np.asarray(budgets, dtype=float))
    if np.any(budgets < 0):
        raise ValueError("average budgets must be nonnegative")
    w = ev.rm.w
    if ev.rm.network == "bc":
        if len(budgets) != 1:
            raise ValueError("BC needs one budget")
        k0 = start[0] if start is not None else 1.0
        k, p, _ = _solve_scalar(lambda k: ev.mean_powers([k])[0], budgets[0], k0, tol)
        return (k,), 1
    if len(budgets) != 2:
        raise ValueError("MAC needs two budgets")
    kappa = list(start) if start is not None else [1.0, 1.0]
    damping = 1.0
    prev = None
    for it in range(1, max_outer + 1):
        flags = [True, True]
        for i in (0, 1):
            def f(k, i=i):
                kk = list(kappa)
                kk[i] = k
                return ev.mean_powers(kk)[i]
            k_new, _, flags[i] = _solve_scalar(f, budgets[i], kappa[i], tol)
            kappa[i] = k_new if damping == 1.0 else (
                (1 - damping) * kappa[i] + damping * k_new)
        p = ev.mean_powers(kappa)
        ok = []
        for i in (0, 1):
            within = p[i] <= budgets[i] * (1 + tol)
            tight = abs(p[i] - budgets[i]) <= tol * budgets[i]
            if not tight and within and kappa[i] > 0:
                # a jump across the budget: smaller multipliers overshoot
                kk = list(kappa)
                kk[i] = kappa[i] * (1 - 1e-9)
                tight = ev.mean_powers(kk)[i] > budgets[i] or not flags[i]
            ok.append(within and (tight or kappa[i] == 0))
        if all(ok):
            return tuple(kappa), it
        if it == 10:
            damping = 0.5
        prev = p
    raise KappaConvergenceError(
        f"multiplier search did not converge for w={w:g}",
        kappa=tuple(kappa), residuals=None if prev is None else (prev - budgets).tolist(),
        w=w)


def _effective_rsets(network: str, budgets, rsets):
    """A zero average budget forces silence, so only rate 0 stays available."""
    budgets = np.atleast_1d(np.asarray(budgets, dtype=float))
    R1, R2 = as_rate_sets(rsets)
    if network == "bc":
        if budgets[0] == 0:
            R1 = R2 = RateSet([0.0])
        return R1, R2
    if len(budgets) == 2:
        if budgets[0] == 0:
            R1 = RateSet([0.0])
        if budgets[1] == 0:
            R2 = RateSet([0.0])
    return R1, R2


def solve_kappa(w: float, network: str, budgets, rsets,
                model: ChannelModel = ChannelModel(), samples: int = 10**5,
                seed: int = 0, tol: float = 0.01, max_outer: int = 60,
                start=None) -> SweepPoint:
    """Multipliers whose rate map meets the average-power budgets.

    The MAC uses alternating per-user root finding (E[P_i] is nonincreasing in
    kappa_i); the BC a scalar one. Raises KappaConvergenceError after
    ``max_outer`` alternating passes.
    """
    chi = sampling.draw(model, samples, seed)
    ev = _Evaluator(network, _effective_rsets(network, budgets, rsets), w, chi)
    kappa, it = _solve_on(ev, budgets, tol, max_outer, start)
    return SweepPoint(float(w), kappa, ev.estimate(kappa), it)


@dataclass
class SweepResult:
    region: ConvexPolygon
    points: list = field(default_factory=list)
    network: str = "mac"
    budgets: tuple = ()

    def report(self) -> dict:
        return {
            "network": self.network,
            "budgets": list(self.budgets),
            "points": [p.to_dict() for p in self.points],
            "region": self.region.to_dict(),
        }


def default_w_grid(points: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def boundary_sweep(network: str, budgets, rsets, w_grid=None,
                   model: ChannelModel = ChannelModel(), samples: int = 10**5,
                   seed: int = 0, tol: float = 0.01, refine_tol: Optional[float] = None,
                   max_refine: int = 50) -> SweepResult:
    """Trace the region by solving the tangent problem along ``w_grid``.

    The region is the hull of the achieved average-rate points, their axis
    projections and the origin. With ``refine_tol`` set, midpoints in ``w``
    are inserted wherever consecutive points are further apart than
    ``refine_tol`` (absolute rate units).
    """
    w_grid = default_w_grid() if w_grid is None else np.asarray(w_grid, dtype=float)
    if len(w_grid) < 11:
        raise ValueError("w grid needs at least 11 points")
    if np.any((w_grid < 0) | (w_grid > 1)):
        raise ValueError("w grid must lie in [0, 1]")
    chi = sampling.draw(model, samples, seed)
    rsets = _effective_rsets(network, budgets, rsets)
    results: dict = {}

    def solve(w, start):
        ev = _Evaluator(network, rsets, w, chi)
        kappa, it = _solve_on(ev, budgets, tol, 60, start)
        results[float(w)] = SweepPoint(float(w), kappa, ev.estimate(kappa), it)
        return kappa

    start = None
    for w in sorted(set(float(x) for x in w_grid)):
        start = solve(w, start)
    if refine_tol is not None:
        for _ in range(max_refine):
            ws = sorted(results)
            gaps = [(a, b) for a, b in zip(ws, ws[1:])
                    if np.linalg.norm(results[a].estimate.rates - results[b].estimate.rates) > refine_tol
                    and b - a > 1e-6]
            if not gaps:
                break
            for a, b in gaps:
                solve(0.5 * (a + b), results[a].kappa)
    points = [results[w] for w in sorted(results)]
    pts = [(0.0, 0.0)]
    for p in points:
        x, y = p.estimate.rates
        pts += [(x, y), (x, 0.0), (0.0, y)]
    return SweepResult(convex_hull(pts), points, network,
                       tuple(np.atleast_1d(budgets).tolist()))


def optimal_threshold_policy(r0: float, budget: float,
                            model: ChannelModel = ChannelModel(), link: int = 0):
    """Optimal point-to-point policy: transmit iff chi >= t.

    ``t`` solves E[(2**R0 - 1)/chi ; chi >= t] = budget (adaptive quadrature
    plus a bracketing root-finder). Returns (t, R0 * Pr(chi >= t)).
    """
    if r0 <= 0:
        raise ValueError("R0 must be positive")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    g = float(snr_threshold(r0))
    if math.isinf(budget):
        return 0.0, r0
    if budget == 0:
        return math.inf, 0.0
    m = model.means[link]

    def power(t):
        # substitute x = e^u so the 1/x singularity at small t becomes smooth
        val, _ = integrate.quad(lambda u: g * float(model.pdf(math.exp(u), link)),
                                math.log(t), math.log(m) + 60.0, limit=200)
        return val

    lo = 1e-12 * m
    if power(lo) <= budget:
        return 0.0, r0
    hi = m
    while power(hi) > budget:
        hi *= 2
    t = optimize.brentq(lambda t: power(t) - budget, lo, hi, xtol=1e-14, rtol=1e-12)
    return t, r0 * float(model.sf(t, link))


# Alternate names kept for callers of the published interface.
lemma1_threshold_oracle = optimal_threshold_policy
fig5_constants = threshold_constants
