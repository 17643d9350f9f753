"""Position-auction instances: greedy allocation and the three payment rules,
each in an expressive (per-slot bid vector) and a simplified (scalar bid times
a public scaling vector) variant.

Positions and agents are 0-indexed throughout; an assignment is a dict mapping
position -> agent.  All operations are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

PAYMENT_RULES = ("first-price", "second-price", "vcg")
BID_SPACES = ("expressive", "simplified")


def _validated_curve(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must be finite")
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} entries must be strictly positive")
    if np.any(np.diff(arr) > 0.0):
        raise ValueError(f"{name} must be non-increasing")
    return arr


@dataclass(frozen=True)
class SlotCurve:
    """Per-position value multipliers, positive and non-increasing.

    All payment formulas rely on the virtual multiplier beyond the last
    position being zero; :meth:`padded` appends it.
    """

    betas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "betas", _validated_curve(self.betas, "betas"))

    @property
    def k(self) -> int:
        return self.betas.size

    def padded(self) -> np.ndarray:
        return np.append(self.betas, 0.0)


@dataclass(frozen=True)
class ScalingVector:
    """Public per-position multipliers for scalar bids; same shape law as a SlotCurve."""

    alphas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alphas", _validated_curve(self.alphas, "alphas"))

    @property
    def k(self) -> int:
        return self.alphas.size


@dataclass(frozen=True)
class ValueProfile:
    """Per-agent per-conversion values, all non-negative."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("values must be finite and non-negative")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ExpressiveBidProfile:
    """n x k matrix of per-slot bids; rows non-increasing, entries >= 0.

    Zero bids are allowed (the complete-information equilibrium bids exactly
    zero on some slots) and remain eligible to win.
    """

    bids: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bids, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("bids must be a non-empty n x k matrix")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("bids must be finite and non-negative")
        if np.any(np.diff(arr, axis=1) > 0.0):
            raise ValueError("each bid row must be non-increasing across positions")
        object.__setattr__(self, "bids", arr)

    @property
    def n(self) -> int:
        return self.bids.shape[0]

    @property
    def k(self) -> int:
        return self.bids.shape[1]


@dataclass(frozen=True)
class SimplifiedBidProfile:
    """Scalar bid per agent, extended to slots by the public scaling vector."""

    bids: np.ndarray
    scaling: ScalingVector

    def __post_init__(self):
        arr = np.asarray(self.bids, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bids must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("bids must be finite and non-negative")
        object.__setattr__(self, "bids", arr)

    @property
    def n(self) -> int:
        return self.bids.size

    def expand(self) -> ExpressiveBidProfile:
        return ExpressiveBidProfile(np.outer(self.bids, self.scaling.alphas))


@dataclass(frozen=True)
class MechanismSpec:
    """Which payment rule to apply and which bid space the auction solicits."""

    payment_rule: str
    bid_space: str = "expressive"
    scaling: Optional[ScalingVector] = None

    def __post_init__(self):
        if self.payment_rule not in PAYMENT_RULES:
            raise ValueError(f"unknown payment rule {self.payment_rule!r}")
        if self.bid_space not in BID_SPACES:
            raise ValueError(f"unknown bid space {self.bid_space!r}")
        if self.bid_space == "simplified" and self.scaling is None:
            raise ValueError("simplified bid space requires a ScalingVector")


@dataclass(frozen=True)
class AuctionOutcome:
    """Greedy assignment (position -> agent) with per-agent payments and utilities."""

    assignment: dict
    payments: np.ndarray
    utilities: np.ndarray


def greedy_allocate(bids: ExpressiveBidProfile, k: int,
                    tie_hint: Optional[Mapping[int, int]] = None) -> dict:
    """Assign positions top-down, each to the highest remaining bid.

    An exact tie goes to ``tie_hint[j]`` when that agent is still unassigned
    and attains the maximum, otherwise to the lowest agent index.  A zero bid
    can win.  With fewer agents than positions the trailing positions stay
    unassigned.
    """
    b = bids.bids
    n = bids.n
    if k < 0 or k > bids.k:
        raise ValueError(f"k={k} incompatible with a bid matrix of {bids.k} columns")
    assignment: dict = {}
    taken = np.zeros(n, dtype=bool)
    for j in range(min(k, n)):
        col = b[:, j]
        best = -1
        best_bid = -np.inf
        for i in range(n):
            if not taken[i] and col[i] > best_bid:
                best = i
                best_bid = col[i]
        if tie_hint is not None and j in tie_hint:
            hinted = tie_hint[j]
            if 0 <= hinted < n and not taken[hinted] and col[hinted] == best_bid:
                best = hinted
        assignment[j] = best
        taken[best] = True
    return assignment


def _check_assignment(bids: ExpressiveBidProfile, assignment: Mapping[int, int]) -> None:
    seen = set()
    for j, i in assignment.items():
        if not (0 <= j < bids.k) or not (0 <= i < bids.n):
            raise ValueError(f"assignment entry {j}->{i} out of range")
        if i in seen:
            raise ValueError(f"agent {i} assigned more than one position")
        seen.add(i)


def first_price_payments(bids: ExpressiveBidProfile,
                         assignment: Mapping[int, int]) -> np.ndarray:
    """Each winner pays its own bid on the position it holds."""
    _check_assignment(bids, assignment)
    payments = np.zeros(bids.n)
    for j, i in assignment.items():
        payments[i] = bids.bids[i, j]
    return payments


def second_price_payments(bids: ExpressiveBidProfile,
                          assignment: Mapping[int, int]) -> np.ndarray:
    """Each winner pays the highest bid on its position among agents not
    assigned to that position or above; zero when no such agent exists."""
    _check_assignment(bids, assignment)
    payments = np.zeros(bids.n)
    for j, i in assignment.items():
        above = {assignment[t] for t in assignment if t <= j}
        rivals = [m for m in range(bids.n) if m not in above]
        payments[i] = max((bids.bids[m, j] for m in rivals), default=0.0)
    return payments


def _greedy_bid_welfare(bid_matrix: np.ndarray, k: int) -> float:
    """Total bid value of the greedy allocation on a raw bid matrix."""
    n = bid_matrix.shape[0]
    taken = np.zeros(n, dtype=bool)
    total = 0.0
    for j in range(min(k, n)):
        col = np.where(taken, -np.inf, bid_matrix[:, j])
        w = int(np.argmax(col))
        total += bid_matrix[w, j]
        taken[w] = True
    return total


def vcg_payments_from_bids(bids: ExpressiveBidProfile,
                           assignment: Mapping[int, int], k: int) -> np.ndarray:
    """Externality payments: re-run the greedy rule with each winner removed.

    payment(i) = value others obtain with i removed minus value others obtain
    in the actual assignment, by their bids; clipped at zero.  Well defined
    for arbitrary (non-proportional) expressive bids.
    """
    _check_assignment(bids, assignment)
    if k > bids.k:
        raise ValueError(f"k={k} incompatible with a bid matrix of {bids.k} columns")
    b = bids.bids
    payments = np.zeros(bids.n)
    for j, i in assignment.items():
        others_actual = sum(b[m, t] for t, m in assignment.items() if m != i)
        reduced = np.delete(b, i, axis=0)
        others_without = _greedy_bid_welfare(reduced, k)
        payments[i] = max(others_without - others_actual, 0.0)
    return payments


def run_auction(spec: MechanismSpec, bids, curve: SlotCurve, values: ValueProfile,
                tie_hint: Optional[Mapping[int, int]] = None) -> AuctionOutcome:
    """Expand simplified bids, allocate greedily, price, and score utilities."""
    if spec.bid_space == "simplified":
        if not isinstance(bids, SimplifiedBidProfile):
            raise ValueError("simplified mechanism requires a SimplifiedBidProfile")
        if bids.scaling.k != curve.k:
            raise ValueError("scaling vector length must match the slot curve")
        expressive = bids.expand()
    else:
        if not isinstance(bids, ExpressiveBidProfile):
            raise ValueError("expressive mechanism requires an ExpressiveBidProfile")
        expressive = bids
    if expressive.n != values.n:
        raise ValueError("bid rows and value entries must agree")
    k = curve.k
    assignment = greedy_allocate(expressive, k, tie_hint)
    if spec.payment_rule == "first-price":
        payments = first_price_payments(expressive, assignment)
    elif spec.payment_rule == "second-price":
        payments = second_price_payments(expressive, assignment)
    else:
        payments = vcg_payments_from_bids(expressive, assignment, k)
    utilities = 0.0 - payments  # keeps +0.0 for untouched agents
    for j, i in assignment.items():
        utilities[i] += curve.betas[j] * values.values[i]
    return AuctionOutcome(assignment=assignment, payments=payments, utilities=utilities)
