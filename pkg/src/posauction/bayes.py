"""Incomplete-information analysis of the expressive first-price position
auction: equilibrium bids, allocation probabilities, expected payments, and
the numeric identity checks that certify them.

Position arguments in this module are 1-based (position 1 is the best slot),
matching the order-statistic formulas; value vectors stay 0-indexed arrays.
The allocation-probability recursion is evaluated as a formal polynomial in
F(x_1..x_s), so the finite-difference checks may step slightly outside the
monotone report cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .auction import SlotCurve
from .distributions import ValueDistribution, z_function
from .quadrature import QuadratureConfig, integrate

BidFunction = Callable[[int, float], float]  # (position, report) -> bid


@dataclass
class BayesSetting:
    """Symmetric incomplete-information environment: n agents, k ranked slots.

    Requires n >= k+1 so the order-statistic exponent n-s-1 stays non-negative
    for every slot; the formulas are undefined otherwise.
    """

    n: int
    curve: SlotCurve
    dist: ValueDistribution
    cfg: QuadratureConfig = field(default_factory=QuadratureConfig)
    _bstar_cache: dict = field(default_factory=dict, repr=False, compare=False)
    _z_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < self.curve.k + 1:
            raise ValueError("need n >= k+1 agents for the slot formulas to be defined")

    @property
    def k(self) -> int:
        return self.curve.k

    def bstar(self, j: int, v: float) -> float:
        """Memoized b*_j(v) via the integral form (the default evaluation path)."""
        key = (j, float(v))
        out = self._bstar_cache.get(key)
        if out is None:
            out = bstar_integral(j, v, self)
            self._bstar_cache[key] = out
        return out

    def zfun(self, m: int, v: float) -> float:
        key = (m, float(v))
        out = self._z_cache.get(key)
        if out is None:
            out = z_function(m, v, self.dist, self.cfg)
            self._z_cache[key] = out
        return out


def _check_position(j: int, k: int) -> None:
    if not 1 <= j <= k:
        raise ValueError(f"position {j} outside 1..{k}")


def _check_value(v: float, dist: ValueDistribution) -> float:
    v = float(v)
    if v < 0.0 or v > dist.v_bar * (1.0 + 1e-12):
        raise ValueError("v outside the support")
    return v


def bstar_integral(j: int, v: float, setting: BayesSetting) -> float:
    """Equilibrium bid on position j: the expected truthful VCG payment for
    that slot, conditioned on v being the j-highest of the n values.

    Integrates the order-statistic density of the lower values directly; this
    path is numerically benign for any n and is the default."""
    _check_position(j, setting.k)
    v = _check_value(v, setting.dist)
    if v == 0.0:
        return 0.0
    n, k = setting.n, setting.k
    Fv = float(setting.dist.cdf(v))
    if Fv <= 0.0:
        raise ValueError("support violation: F(v) = 0 for v > 0")
    bp = setting.curve.padded()
    coeffs = []
    exps_f = []
    exps_g = []
    for s in range(j, k + 1):
        w = bp[s - 1] - bp[s]
        coeffs.append(
            w * math.factorial(n - j)
            / (math.factorial(n - s - 1) * math.factorial(s - j))
        )
        exps_f.append(n - s - 1)
        exps_g.append(s - j)
    return kernels.bstar_quadrature(setting.dist, exps_f, exps_g, coeffs, v, Fv,
                                    setting.cfg)


def bstar_binomial(j: int, v: float, setting: BayesSetting) -> float:
    """b*_j(v) through the alternating binomial expansion in the Z functions.

    Kept as an independent cross-check of the integral form; the alternating
    sum cancels badly for large n, so it is not the default path."""
    _check_position(j, setting.k)
    v = _check_value(v, setting.dist)
    if v == 0.0:
        return 0.0
    n, k = setting.n, setting.k
    bp = setting.curve.padded()
    total = 0.0
    for s in range(j, k + 1):
        w = bp[s - 1] - bp[s]
        if w == 0.0:
            continue
        base = math.factorial(n - j) / (
            math.factorial(n - s - 1) * math.factorial(s - j)
        )
        for t in range(s - j + 1):
            m = n - s + t
            total += (
                w * (-1) ** t * math.comb(s - j, t) * base / m
                * (v - setting.zfun(m, v))
            )
    return total


def bstar_derivative(j: int, v: float, setting: BayesSetting) -> float:
    """Closed-form derivative of b*_j, via f(v)/F(v) times the Z functions."""
    _check_position(j, setting.k)
    v = _check_value(v, setting.dist)
    if v <= 0.0:
        raise ValueError("derivative undefined at v = 0 (F(v) vanishes)")
    n, k = setting.n, setting.k
    Fv = float(setting.dist.cdf(v))
    if Fv <= 0.0:
        raise ValueError("support violation: F(v) = 0 for v > 0")
    hazard = float(setting.dist.pdf(v)) / Fv
    bp = setting.curve.padded()
    total = 0.0
    for s in range(j, k + 1):
        w = bp[s - 1] - bp[s]
        if w == 0.0:
            continue
        base = math.factorial(n - j) / (
            math.factorial(n - s - 1) * math.factorial(s - j)
        )
        for t in range(s - j + 1):
            m = n - s + t
            total += w * (-1) ** t * math.comb(s - j, t) * base * hazard * setting.zfun(m, v)
    return total


@dataclass(frozen=True)
class AllocProbInput:
    """Report vector in value space: non-increasing, within the support."""

    x: np.ndarray
    v_bar: Optional[float] = None

    def __post_init__(self):
        arr = np.asarray(self.x, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("report vector must be non-empty and 1-D")
        if np.any(np.diff(arr) > 0.0):
            raise ValueError("report vector must be non-increasing")
        if np.any(arr < 0.0) or (self.v_bar is not None and np.any(arr > self.v_bar)):
            raise ValueError("report entries must lie in the support")
        object.__setattr__(self, "x", arr)


def alloc_prob(s_pos: int, m: int, x, dist: ValueDistribution) -> float:
    """P_{s,m}(x): probability of winning slot s against m i.i.d. opponents.

    P_{1,m} = F(x_1)^m and
    P_{s,m} = C(m, m-s+1) F(x_s)^{m-s+1} (1 - sum_{t<s} P_{t,s-1});
    never touches x_l for l > s."""
    if isinstance(x, AllocProbInput):
        x = x.x
    x = np.asarray(x, dtype=float)
    if s_pos < 1:
        raise ValueError("positions are 1-based")
    if m < 0:
        raise ValueError("opponent count must be non-negative")
    if s_pos > m + 1:
        raise ValueError(f"cannot win slot {s_pos} against only {m} opponents")
    if x.size < s_pos:
        raise ValueError("report vector too short for the requested slot")
    F = np.asarray(dist.cdf(x[:s_pos]), dtype=float)
    cache: dict = {}

    def P(s: int, mm: int) -> float:
        key = (s, mm)
        if key in cache:
            return cache[key]
        if s == 1:
            out = F[0] ** mm
        else:
            out = (
                math.comb(mm, mm - s + 1)
                * F[s - 1] ** (mm - s + 1)
                * (1.0 - sum(P(t, s - 1) for t in range(1, s)))
            )
        cache[key] = out
        return out

    return P(s_pos, m)


def truthful_win_probability(s_pos: int, v: float, setting: BayesSetting) -> float:
    """P_{s,n-1} at the truthful report (v,...,v): exactly s-1 opponents above v."""
    F = float(setting.dist.cdf(v))
    n = setting.n
    return math.comb(n - 1, s_pos - 1) * (1.0 - F) ** (s_pos - 1) * F ** (n - s_pos)


def expected_utility(x, v: float, setting: BayesSetting,
                     bid_fn: Optional[BidFunction] = None) -> float:
    """Expected utility of reporting x (bidding b*_j(x_j) per slot) with value v
    while the opponents bid truthfully.

    ``bid_fn`` overrides the equilibrium bid table; allocation probabilities
    stay in value space since every agent maps values through the same
    increasing function."""
    if isinstance(x, AllocProbInput):
        x = x.x
    x = np.asarray(x, dtype=float)
    if x.size != setting.k:
        raise ValueError("report vector must have one entry per slot")
    bid = bid_fn if bid_fn is not None else setting.bstar
    betas = setting.curve.betas
    total = 0.0
    for s in range(1, setting.k + 1):
        p = alloc_prob(s, setting.n - 1, x, setting.dist)
        total += p * (betas[s - 1] * v - bid(s, float(x[s - 1])))
    return total


def truthful_utility_onedim(v: float, setting: BayesSetting) -> float:
    """The one-dimensional form of the truthful expected utility:
    sum_s beta_s * integral over [0, v] of P_{s,n-1}(t,...,t)."""
    betas = setting.curve.betas

    def g(t: float) -> float:
        return sum(
            betas[s - 1] * truthful_win_probability(s, t, setting)
            for s in range(1, setting.k + 1)
        )

    return integrate(g, 0.0, float(v), setting.cfg)


def myerson_expected_payment(v: float, setting: BayesSetting) -> float:
    """Expected equilibrium payment pinned down by the efficient allocation:
    sum_s P_s(v) beta_s v - integral over [0, v] of sum_s P_s(z) beta_s."""
    v = _check_value(v, setting.dist)
    if v == 0.0:
        return 0.0
    betas = setting.curve.betas

    def weighted(t: float) -> float:
        return sum(
            betas[s - 1] * truthful_win_probability(s, t, setting)
            for s in range(1, setting.k + 1)
        )

    return weighted(v) * v - integrate(weighted, 0.0, v, setting.cfg)


def check_lemma1(j: int, v: float, setting: BayesSetting, h: float) -> float:
    """|d/dx_j of the expected utility at the truthful report|, central difference.

    The derivative vanishes in exact arithmetic; the residual is O(h^2) plus
    quadrature noise."""
    _check_position(j, setting.k)
    if h <= 0.0:
        raise ValueError("step h must be positive")
    if v - h <= 0.0 or v + h > setting.dist.v_bar:
        raise ValueError("v too close to the support boundary for the chosen h")

    def u(xj: float) -> float:
        x = np.full(setting.k, float(v))
        x[j - 1] = xj
        return expected_utility(x, v, setting)

    return abs((u(v + h) - u(v - h)) / (2.0 * h))


def check_lemma2(j: int, v_grid, x_grid, setting: BayesSetting, h: float,
                 lead: Optional[float] = None) -> float:
    """Minimal mixed difference (d/dv)(d/dx_j) of the expected utility over the
    grid; non-negative up to finite-difference error.

    Positions above j carry the fixed bid ``lead`` (default: the top of
    x_grid); positions below j follow the valuation, as in the single-crossing
    argument.  For j < k only pairs with x_j >= v are evaluated: below that the
    report leaves the monotone cone and the induced bid vector is infeasible,
    so the identity makes no claim there."""
    _check_position(j, setting.k)
    if h <= 0.0:
        raise ValueError("step h must be positive")
    v_grid = np.asarray(v_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    if v_grid.size == 0 or x_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if lead is None:
        lead = float(np.max(x_grid))

    def u(vv: float, xj: float) -> float:
        x = np.empty(setting.k)
        x[: j - 1] = lead
        x[j - 1] = xj
        x[j:] = vv
        return expected_utility(x, vv, setting)

    worst = np.inf
    for v in v_grid:
        if v - h <= 0.0 or v + h > setting.dist.v_bar:
            raise ValueError("v grid too close to the support boundary for h")
        for xj in x_grid:
            if j < setting.k and xj < v:
                continue
            cross = (
                u(v + h, xj + h) - u(v + h, xj - h)
                - u(v - h, xj + h) + u(v - h, xj - h)
            ) / (4.0 * h * h)
            worst = min(worst, cross)
    if not np.isfinite(worst):
        raise ValueError("no grid pair lies in the monotone report cone")
    return worst


def check_ode(j: int, v: float, setting: BayesSetting) -> float:
    """Residual of the equilibrium differential equation

        b*_j'(v) = (n-j) f(v)/F(v) [(beta_j v - b*_j(v)) - (beta_{j+1} v - b*_{j+1}(v))]

    with the convention that the slot-(k+1) term is zero."""
    _check_position(j, setting.k)
    v = _check_value(v, setting.dist)
    if v <= 0.0:
        raise ValueError("the equation is undefined at v = 0")
    n, k = setting.n, setting.k
    Fv = float(setting.dist.cdf(v))
    fv = float(setting.dist.pdf(v))
    bp = setting.curve.padded()
    lhs = bstar_derivative(j, v, setting)
    own = bp[j - 1] * v - setting.bstar(j, v)
    nxt = bp[j] * v - (setting.bstar(j + 1, v) if j < k else 0.0)
    rhs = (n - j) * (fv / Fv) * (own - nxt)
    return abs(lhs - rhs)


def check_auxiliary_lemmas(j: int, m: int, x, setting: BayesSetting, h: float,
                           ell: Optional[int] = None) -> float:
    """Finite-difference residual of the allocation-probability derivatives.

    With ``ell`` omitted: |d/dx_j (P_{j,m} + P_{j+1,m})| at the given x, which
    needs m >= j+1.  With ``ell`` given: |d/dx_j P_{ell,m}| for m >= ell >= j+2.
    The identities assume x is truthful from position j+1 down; callers may
    violate that on purpose as a negative control."""
    if isinstance(x, AllocProbInput):
        x = x.x
    x = np.asarray(x, dtype=float)
    if h <= 0.0:
        raise ValueError("step h must be positive")
    if j < 1:
        raise ValueError("positions are 1-based")
    if ell is None:
        if m < j + 1:
            raise ValueError("the paired identity needs m >= j+1")
        need = j + 1
    else:
        if not (m >= ell >= j + 2):
            raise ValueError("the single-slot identity needs m >= ell >= j+2")
        need = ell
    if x.size < need:
        raise ValueError("report vector too short")

    def g(xj: float) -> float:
        y = x.copy()
        y[j - 1] = xj
        if ell is None:
            return alloc_prob(j, m, y, setting.dist) + alloc_prob(j + 1, m, y, setting.dist)
        return alloc_prob(ell, m, y, setting.dist)

    xj = float(x[j - 1])
    return abs((g(xj + h) - g(xj - h)) / (2.0 * h))


def best_response_scan(v: float, setting: BayesSetting, grid,
                       bid_fn: Optional[BidFunction] = None) -> float:
    """Scan deviations of the form (b*(x_1),...,b*(x_k)) coordinate-wise, from
    the last slot upward, and return the best utility gain over truthful.

    Each coordinate pass fixes the slots below at their scanned optimum and
    keeps the report non-increasing; the truthful report is always among the
    candidates, so the result is >= 0 up to quadrature noise."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("scan grid must be non-empty")
    v = _check_value(v, setting.dist)
    k = setting.k
    candidates = np.unique(np.append(grid, v))
    x = np.full(k, v)
    base = expected_utility(x, v, setting, bid_fn)
    best = base
    for j in range(k, 0, -1):
        floor = x[j] if j < k else 0.0
        cands = candidates[candidates >= floor]
        best_here = -np.inf
        best_c = x[j - 1]
        for c in cands:
            x[j - 1] = c
            u = expected_utility(x, v, setting, bid_fn)
            if u > best_here:
                best_here = u
                best_c = c
        x[j - 1] = best_c
        best = max(best, best_here)
    return best - base
