"""Fixed-codebook design for the N-user symmetric MAC under peak power.

Every served user contributes exactly R0, so the best per-state schedule
serves as many users as possible. The stable sum rate is
s(R0, N) = R0 * E[max simultaneous transmissions], and R0*(N) maximizes it.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import sampling
from .core import TIE_RTOL, ChannelModel, snr_threshold

__all__ = [
    "SymmetricMacSpec",
    "CodebookOptimum",
    "max_simultaneous",
    "sum_rate",
    "sum_rate_curve",
    "optimize_R0",
    "results_csv",
]


@dataclass(frozen=True)
class SymmetricMacSpec:
    """N users sharing rate R0, peak budget and i.i.d. exponential gains."""

    n_users: int
    r0: float
    budget: float = 1.0
    mean_gain: float = 1.0

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("need at least one user")
        if not self.r0 > 0:
            raise ValueError("R0 must be positive")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if not self.mean_gain > 0:
            raise ValueError("mean gain must be positive")

    @property
    def model(self) -> ChannelModel:
        return ChannelModel((self.mean_gain,) * self.n_users)


def _count_sorted(desc: np.ndarray, r0: float, budget: float) -> np.ndarray:
    """max_simultaneous on gains already sorted in descending order."""
    g = float(snr_threshold(r0))
    n_users = desc.shape[-1]
    rx = desc * budget * (1 + TIE_RTOL)
    count = np.zeros(desc.shape[:-1], dtype=np.int64)
    for k in range(1, n_users + 1):
        # user j (1-based) decoded j-th must reach g (1+g)**(k-j)
        need = g * (1 + g) ** np.arange(k - 1, -1, -1)
        ok = np.all(rx[..., :k] >= need, axis=-1)
        # feasibility of k implies feasibility of every smaller count
        count = np.where(ok, k, count)
    return count


def max_simultaneous(gains, r0: float, budget: float):
    """Largest number of users decodable at rate ``r0`` in one slot.

    Serve the k strongest users, decoding the strongest first; later-decoded
    users transmit at minimum power. ``gains`` may be one state (1-D) or a
    batch of states (last axis = users).
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains < 0):
        raise ValueError("gains must be nonnegative")
    if r0 <= 0 or budget < 0:
        raise ValueError("need R0 > 0 and budget >= 0")
    desc = -np.sort(-gains, axis=-1)
    out = _count_sorted(desc, r0, budget)
    return int(out) if out.ndim == 0 else out


def _sorted_draws(n_users: int, mean_gain: float, samples: int, seed: int) -> np.ndarray:
    if samples < 10**4:
        raise ValueError("need at least 1e4 samples")
    chi = sampling.draw(ChannelModel((mean_gain,) * n_users), samples, seed)
    return -np.sort(-chi, axis=1)


def sum_rate(spec: SymmetricMacSpec, samples: int = 10**5, seed: int = 0):
    """(s, standard error) for s = R0 * E[max_simultaneous].

    Draws depend only on (N, samples, seed), so two R0 values with the same
    seed are compared on identical channels.
    """
    desc = _sorted_draws(spec.n_users, spec.mean_gain, samples, seed)
    counts = _count_sorted(desc, spec.r0, spec.budget) * spec.r0
    m, se = sampling.mean_and_se(counts.astype(float))
    return float(m), float(se)


def sum_rate_curve(n_users: int, r0_grid, budget: float = 1.0, mean_gain: float = 1.0,
                   samples: int = 10**5, seed: int = 0):
    """Sum-rate estimates and standard errors along ``r0_grid`` (shared draws)."""
    desc = _sorted_draws(n_users, mean_gain, samples, seed)
    vals, ses = [], []
    for r0 in np.asarray(r0_grid, dtype=float):
        m, se = sampling.mean_and_se((_count_sorted(desc, r0, budget) * r0).astype(float))
        vals.append(float(m))
        ses.append(float(se))
    return np.array(vals), np.array(ses)


@dataclass
class CodebookOptimum:
    n_users: int
    r0: float
    sum_rate: float
    sum_rate_se: float
    budget: float = 1.0

    @property
    def per_user(self) -> float:
        return self.sum_rate / self.n_users

    def ci_half_width(self, z: float = 1.96) -> float:
        return z * self.sum_rate_se

    def to_dict(self) -> dict:
        return {
            "N": self.n_users,
            "R0_star": self.r0,
            "s_star": self.sum_rate,
            "s_star_se": self.sum_rate_se,
            "s_star_ci": self.ci_half_width(),
            "per_user": self.per_user,
            "per_user_ci": self.ci_half_width() / self.n_users,
        }


def optimize_R0(n_users: int, budget: float = 1.0, mean_gain: float = 1.0,
                samples: int = 10**5, seed: int = 0, r0_max: float = 3.0,
                grid_points: int = 150, xtol: float = 1e-4) -> CodebookOptimum:
    """Maximize the sample-average sum rate over R0.

    A uniform grid on (0, r0_max] locates the peak; a bounded scalar search
    (golden section with parabolic steps) refines it between the grid
    neighbours. All evaluations share one set of channel draws.
    """
    if n_users < 1:
        raise ValueError("need at least one user")
    desc = _sorted_draws(n_users, mean_gain, samples, seed)

    def s(r0):
        return float(np.mean(_count_sorted(desc, r0, budget))) * r0

    grid = np.linspace(r0_max / grid_points, r0_max, grid_points)
    vals = np.array([s(r) for r in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best_r, best_v = float(grid[i]), float(vals[i])
    if hi > lo:
        res = optimize.minimize_scalar(lambda r: -s(r), bounds=(lo, hi), method="bounded",
                                       options={"xatol": xtol})
        if -res.fun > best_v:
            best_r, best_v = float(res.x), float(-res.fun)
    counts = (_count_sorted(desc, best_r, budget) * best_r).astype(float)
    m, se = sampling.mean_and_se(counts)
    return CodebookOptimum(n_users, best_r, float(m), float(se), budget)


def results_csv(results) -> str:
    """CSV rows: N, R0*, s*, s*/N and 95% CI half-widths."""
    buf = io.StringIO()
    buf.write("N,R0_star,s_star,s_star_ci,per_user,per_user_ci\n")
    for r in results:
        d = r.to_dict()
        buf.write(",".join([str(d["N"])] + [_fmt(d[k]) for k in
                                            ("R0_star", "s_star", "s_star_ci",
                                             "per_user", "per_user_ci")]) + "\n")
    return buf.getvalue()


def _fmt(v: float) -> str:
    s = f"{v:.9g}"
    return "0" if s == "-0" else s
