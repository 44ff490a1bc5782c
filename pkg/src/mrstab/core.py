"""Domain types and per-state primitives for two-user multi-rate MAC/BC networks.

Noise power is normalized to one and rates are in bits per slot, so decoding a
codeword of rate ``r`` needs a received SNR of at least ``2**r - 1``.

Infeasible rate/power requests are reported as ``inf`` power rather than
raised, so that optimizers can compare candidates uniformly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "RateSet",
    "RateVector",
    "ChannelFadePower",
    "ChannelModel",
    "PowerConstraint",
    "ConstraintKind",
    "DecodeOrder",
    "PowerAllocation",
    "TIE_RTOL",
    "as_rate_sets",
    "rate_grid",
    "snr_threshold",
    "shannon_rate",
    "mac_min_powers",
    "bc_min_power",
    "within_budget",
    "decodable_at",
]

# Relative slack on power comparisons; boundary ties go to the larger
# supported set.
TIE_RTOL = 1e-12


class RateSet(tuple):
    """Strictly increasing finite set of codebook rates starting at 0."""

    def __new__(cls, rates: Iterable[float]):
        rates = tuple(float(r) for r in rates)
        if not rates or rates[0] != 0.0:
            raise ValueError("rate set must start with 0")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError("rates must be strictly increasing")
        if not all(math.isfinite(r) for r in rates):
            raise ValueError("rates must be finite")
        return super().__new__(cls, rates)

    @classmethod
    def fixed(cls, r0: float) -> "RateSet":
        """Fixed codebook {0, r0}."""
        return cls((0.0, r0))

    @property
    def nonzero(self) -> tuple:
        return self[1:]


class RateVector(NamedTuple):
    r1: float
    r2: float


class ChannelFadePower(NamedTuple):
    """Squared channel gains (h1**2, h2**2)."""

    chi1: float
    chi2: float

    def inverse(self) -> tuple[float, float]:
        return (_safe_inv(self.chi1), _safe_inv(self.chi2))


class DecodeOrder(enum.IntEnum):
    PI1 = 1  # user 1 decoded first
    PI2 = 2  # user 2 decoded first


class PowerAllocation(NamedTuple):
    p1: float
    p2: float


class ConstraintKind(str, enum.Enum):
    FIXED = "fixed"
    PEAK = "peak"
    AVERAGE = "average"


@dataclass(frozen=True)
class PowerConstraint:
    kind: ConstraintKind
    budgets: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        budgets = tuple(float(b) for b in np.atleast_1d(self.budgets))
        if any(b < 0 or math.isnan(b) for b in budgets):
            raise ValueError(f"budgets must be nonnegative, got {budgets}")
        object.__setattr__(self, "budgets", budgets)


@dataclass(frozen=True)
class ChannelModel:
    """Independent exponential power gains per link (Rayleigh amplitude fading).

    ``means`` are the per-link mean power gains; unit-variance Rayleigh fading
    gives the default ``(1.0, 1.0)``.
    """

    means: tuple = (1.0, 1.0)

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        if any(not (m > 0 and math.isfinite(m)) for m in means):
            raise ValueError(f"link means must be positive, got {means}")
        object.__setattr__(self, "means", means)

    @property
    def n_links(self) -> int:
        return len(self.means)

    def link(self, i: int) -> "ChannelModel":
        return ChannelModel((self.means[i],))

    def cdf(self, x, link: int = 0):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = -np.expm1(-np.maximum(x, 0.0) / self.means[link])
        return np.where(np.isposinf(x), 1.0, out)

    def sf(self, x, link: int = 0):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.maximum(x, 0.0) / self.means[link])

    def pdf(self, x, link: int = 0):
        x = np.asarray(x, dtype=float)
        m = self.means[link]
        return np.where(x >= 0, np.exp(-np.maximum(x, 0.0) / m) / m, 0.0)

    def ppf(self, u, link: int = 0):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.means[link] * np.log1p(-u)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` gain vectors, shape ``(n, n_links)``."""
        return rng.exponential(size=(n, self.n_links)) * np.asarray(self.means)


def as_rate_sets(rsets) -> tuple[RateSet, RateSet]:
    """Normalize a single rate list or a pair of rate lists to two RateSets."""
    if isinstance(rsets, RateSet):
        return rsets, rsets
    rsets = list(rsets)
    if rsets and np.isscalar(rsets[0]):
        rs = RateSet(rsets)
        return rs, rs
    if len(rsets) != 2:
        raise ValueError("expected one rate set or a pair of rate sets")
    return RateSet(rsets[0]), RateSet(rsets[1])


def rate_grid(rsets) -> list[RateVector]:
    """All rate pairs of R1 x R2, row-major in (r1, r2)."""
    R1, R2 = as_rate_sets(rsets)
    return [RateVector(a, b) for a in R1 for b in R2]


def snr_threshold(r):
    """Received SNR needed to decode rate ``r`` at unit noise: 2**r - 1."""
    return np.expm1(np.asarray(r, dtype=float) * math.log(2.0))


def _safe_inv(x):
    with np.errstate(divide="ignore"):
        return np.where(np.asarray(x) > 0, 1.0 / np.asarray(x, dtype=float), np.inf)


def _term(num, chi):
    """num / chi with 0/0 := 0 and num/0 := inf."""
    num = np.asarray(num, dtype=float)
    chi = np.asarray(chi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / chi
    return np.where(num == 0, 0.0, np.where(chi > 0, out, np.inf))


def shannon_rate(chi, p):
    """log2(1 + chi * p). Raises ValueError on negative inputs."""
    chi = np.asarray(chi, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(chi < 0) or np.any(p < 0):
        raise ValueError("gain and power must be nonnegative")
    out = np.log2(1.0 + chi * p)
    return float(out) if out.ndim == 0 else out


def mac_min_powers(r: Sequence[float], order, chi: Sequence[float]) -> PowerAllocation:
    """Minimum MAC transmit powers that decode ``r`` under ``order``.

    The first-decoded user sees the second at its minimum power as noise; the
    second is decoded interference-free. Works elementwise on arrays of gains.
    """
    order = DecodeOrder(order)
    g1, g2 = snr_threshold(r[0]), snr_threshold(r[1])
    if order is DecodeOrder.PI1:
        p1 = _term(g1 * (1.0 + g2), chi[0])
        p2 = _term(g2, chi[1])
    else:
        p1 = _term(g1, chi[0])
        p2 = _term(g2 * (1.0 + g1), chi[1])
    if p1.ndim == 0:
        return PowerAllocation(float(p1), float(p2))
    return PowerAllocation(p1, p2)


def bc_min_power(r: Sequence[float], chi: Sequence[float]):
    """Minimum total BC power for ``r``; the weaker user is decoded first.

    For chi1 >= chi2 this is (2**r2-1)/chi2 + (2**r1-1) 2**r2 / chi1, and the
    mirror image otherwise.
    """
    g1, g2 = snr_threshold(r[0]), snr_threshold(r[1])
    c1, c2 = np.asarray(chi[0], dtype=float), np.asarray(chi[1], dtype=float)
    strong1 = _term(g2, c2) + _term(g1 * (1.0 + g2), c1)
    strong2 = _term(g1, c1) + _term(g2 * (1.0 + g1), c2)
    out = np.where(c1 >= c2, strong1, strong2)
    return float(out) if out.ndim == 0 else out


def within_budget(power, budget):
    """power <= budget, with ties (up to TIE_RTOL) counted as feasible.

    Infinite power is never feasible, even against an infinite budget.
    """
    power = np.asarray(power, dtype=float)
    budget = np.asarray(budget, dtype=float)
    return np.isfinite(power) & (power <= budget * (1.0 + TIE_RTOL))


def decodable_at(r: Sequence[float], order, chi: Sequence[float], powers: Sequence[float]):
    """Whether successive decoding in ``order`` recovers ``r`` at fixed powers.

    Unlike the peak model, transmitters cannot lower their power, so the
    first-decoded user always sees the other's full received power as noise.
    """
    order = DecodeOrder(order)
    g1, g2 = snr_threshold(r[0]), snr_threshold(r[1])
    rx1 = np.asarray(chi[0], dtype=float) * np.asarray(powers[0], dtype=float)
    rx2 = np.asarray(chi[1], dtype=float) * np.asarray(powers[1], dtype=float)
    # a user with rate 0 stays silent
    rx1 = np.where(g1 == 0, 0.0, rx1)
    rx2 = np.where(g2 == 0, 0.0, rx2)
    slack = 1.0 + TIE_RTOL
    ok1_alone = (g1 == 0) | (rx1 * slack >= g1)
    ok2_alone = (g2 == 0) | (rx2 * slack >= g2)
    if order is DecodeOrder.PI1:
        ok = ((g1 == 0) | (rx1 * slack >= g1 * (1.0 + rx2))) & ok2_alone
    else:
        ok = ((g2 == 0) | (rx2 * slack >= g2 * (1.0 + rx1))) & ok1_alone
    return bool(ok) if np.ndim(ok) == 0 else ok
