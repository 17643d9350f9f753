"""Complete-information analysis: closed-form truthful VCG outcomes, the
target-profit equilibrium of the expressive first-price auction, and a
deviation-search Nash verifier.

The verifier enumerates the structured deviations that drive the theory
(bid a flat price on a prefix of positions, zero below) plus a coarse
per-coordinate fallback, evaluating whole candidate batches at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from .auction import (
    ExpressiveBidProfile,
    MechanismSpec,
    SimplifiedBidProfile,
    SlotCurve,
    ValueProfile,
    _greedy_bid_welfare,
    run_auction,
)


@dataclass(frozen=True)
class VcgResult:
    """Truthful VCG outcome: value ordering, per-position prices, per-agent utilities."""

    ordering: np.ndarray   # agent indices in descending value order
    payments: np.ndarray   # p_1..p_k, indexed by position
    utilities: np.ndarray  # indexed by agent


@dataclass(frozen=True)
class NashReport:
    is_equilibrium: bool
    max_gain: float
    worst_violation: Optional[Tuple[int, str, float]]  # (agent, deviation, gain)
    efficiency_flag: bool
    payment_floor_ok: bool


@dataclass(frozen=True)
class DeviationGrid:
    """Price grid and epsilon ladder for the deviation search."""

    step: float
    epsilons: Tuple[float, ...] = (1e-3, 1e-6)
    coordinate_points: int = 9

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValueError("grid step must be positive")
        if not self.epsilons or any(e <= 0.0 for e in self.epsilons):
            raise ValueError("epsilon ladder must be non-empty and positive")
        if self.coordinate_points < 2:
            raise ValueError("coordinate fallback needs at least 2 points")

    @classmethod
    def scaled(cls, scale: float, step_frac: float = 1e-3,
               eps_fracs: Tuple[float, ...] = (1e-3, 1e-6)) -> "DeviationGrid":
        """Grid with step and ladder proportional to the instance's value scale."""
        if not scale > 0.0:
            raise ValueError("scale must be positive")
        return cls(step=step_frac * scale, epsilons=tuple(f * scale for f in eps_fracs))


def truthful_vcg(values: ValueProfile, curve: SlotCurve) -> VcgResult:
    """Closed-form truthful VCG prices p_j = sum_{s>=j} (beta_s - beta_{s+1}) v_(s+1).

    Computed by the bottom-up recursion; values beyond the agent count count
    as zero, so degenerate instances need no special casing.
    """
    v = values.values
    n = values.n
    k = curve.k
    betas = curve.padded()
    order = np.argsort(-v, kind="stable")
    ranked = np.zeros(max(k + 1, n))
    ranked[:n] = v[order]
    payments = np.zeros(k)
    nxt = 0.0
    for j in range(k - 1, -1, -1):
        payments[j] = (betas[j] - betas[j + 1]) * ranked[j + 1] + nxt
        nxt = payments[j]
    utilities = np.zeros(n)
    for r in range(min(k, n)):
        utilities[order[r]] = betas[r] * ranked[r] - payments[r]
    return VcgResult(ordering=order, payments=payments, utilities=utilities)


def construct_equilibrium_bids(values: ValueProfile, curve: SlotCurve):
    """Target-profit bids max(beta_j * v_i - u_i, 0) plus pointing tie hints.

    Rank r's row is evaluated as (beta_j - beta_r) * v_i + p_r, which is the
    same number but makes the bid of the next-ranked agent on position r equal
    p_r bit-for-bit; the greedy rule with the returned hints then reproduces
    the efficient assignment and the exact VCG prices.
    """
    res = truthful_vcg(values, curve)
    v = values.values
    n = values.n
    k = curve.k
    betas = curve.betas
    bids = np.zeros((n, k))
    for rank, agent in enumerate(res.ordering):
        if rank < k:
            row = (betas - betas[rank]) * v[agent] + res.payments[rank]
        else:
            row = betas * v[agent]
        bids[agent] = np.maximum(row, 0.0)
    tie_hint = {r: int(res.ordering[r]) for r in range(min(k, n))}
    return ExpressiveBidProfile(bids), tie_hint


def efficient_welfare(values: ValueProfile, curve: SlotCurve) -> float:
    ranked = np.sort(values.values)[::-1]
    take = min(curve.k, values.n)
    return float(np.dot(curve.betas[:take], ranked[:take]))


def outcome_welfare(assignment: Mapping[int, int], values: ValueProfile,
                    curve: SlotCurve) -> float:
    return float(sum(curve.betas[j] * values.values[i] for j, i in assignment.items()))


def is_efficient(assignment: Mapping[int, int], values: ValueProfile,
                 curve: SlotCurve, rtol: float = 1e-9) -> bool:
    best = efficient_welfare(values, curve)
    return outcome_welfare(assignment, values, curve) >= best - rtol * max(1.0, best)


def check_payment_floor(outcome, values: ValueProfile, curve: SlotCurve,
                        tol: float) -> bool:
    """True iff every assigned agent pays at least the truthful VCG price of its
    position, within tol.  Only defined for efficient outcomes."""
    if not is_efficient(outcome.assignment, values, curve):
        raise ValueError("payment floor is only defined for efficient outcomes")
    vcg = truthful_vcg(values, curve)
    return all(
        outcome.payments[i] >= vcg.payments[j] - tol
        for j, i in outcome.assignment.items()
    )


# ---------------------------------------------------------------------------
# batched deviation machinery


def _batched_greedy(bids3: np.ndarray, tie_hint: Optional[Mapping[int, int]]) -> np.ndarray:
    nb, n, k = bids3.shape
    assign = np.full((nb, k), -1, dtype=np.int64)
    taken = np.zeros((nb, n), dtype=bool)
    rows = np.arange(nb)
    for j in range(min(n, k)):
        col = np.where(taken, -np.inf, bids3[:, :, j])
        winner = np.argmax(col, axis=1)
        if tie_hint is not None and j in tie_hint:
            h = tie_hint[j]
            if 0 <= h < n:
                top = col[rows, winner]
                winner = np.where(col[:, h] == top, h, winner)
        assign[:, j] = winner
        taken[rows, winner] = True
    return assign


def _batched_agent_utility(agent: int, bids3: np.ndarray, assign: np.ndarray,
                           values: ValueProfile, curve: SlotCurve, rule: str,
                           welfare_without: float = 0.0) -> np.ndarray:
    nb, n, k = bids3.shape
    rows = np.arange(nb)
    mask = assign == agent
    has = mask.any(axis=1)
    pos = np.argmax(mask, axis=1)
    pay = np.zeros(nb)
    if rule == "first-price":
        pay[has] = bids3[rows[has], agent, pos[has]]
    elif rule == "second-price":
        # posof[m] = position of agent m, sentinel k+1 when unassigned
        posof = np.full((nb, n), k + 1, dtype=np.int64)
        bidx, jidx = np.nonzero(assign >= 0)
        posof[bidx, assign[bidx, jidx]] = jidx
        for m in range(k):
            sel = has & (pos == m)
            if not np.any(sel):
                continue
            rivals = posof[sel] > m
            col = bids3[sel, :, m]
            best = np.max(np.where(rivals, col, -np.inf), axis=1)
            pay[sel] = np.maximum(best, 0.0)
    elif rule == "vcg":
        valid = assign >= 0
        safe = np.where(valid, assign, 0)
        gathered = bids3[rows[:, None], safe, np.arange(k)[None, :]]
        total = np.where(valid, gathered, 0.0).sum(axis=1)
        own = np.zeros(nb)
        own[has] = bids3[rows[has], agent, pos[has]]
        others_realized = total - own
        pay = np.where(has, np.maximum(welfare_without - others_realized, 0.0), 0.0)
    else:  # pragma: no cover - MechanismSpec already validates
        raise ValueError(f"unknown payment rule {rule!r}")
    gained = np.where(has, curve.betas[pos] * values.values[agent], 0.0)
    return gained - pay


def _price_candidates(base: np.ndarray, grid: DeviationGrid) -> np.ndarray:
    top = float(base.max(initial=0.0))
    npts = int(np.floor(top / grid.step)) + 1
    return np.arange(npts) * grid.step


def _expressive_deviations(agent: int, base: np.ndarray, assignment: Mapping[int, int],
                           grid: DeviationGrid, k: int):
    """Candidate replacement rows for one agent plus printable labels."""
    prices = _price_candidates(base, grid)
    eps = np.asarray(grid.epsilons)
    rows = [base[agent].copy()]
    labels = [("stay", 0, 0.0)]
    for depth in range(1, k + 1):
        j = depth - 1
        winner = assignment.get(j, -1)
        winning = base[winner, j] if winner >= 0 else 0.0
        cand = np.concatenate([prices, [winning], winning + eps])
        flat = np.zeros((cand.size, k))
        flat[:, :depth] = cand[:, None]
        rows.append(flat)
        labels.extend(("flat", depth, float(p)) for p in cand)
    coarse = np.linspace(0.0, float(base.max(initial=0.0)), grid.coordinate_points)
    for j in range(k):
        for c in coarse:
            row = base[agent].copy()
            row[j] = c
            row[:j] = np.maximum(row[:j], c)
            row[j + 1:] = np.minimum(row[j + 1:], c)
            rows.append(row[None, :])
            labels.append(("coord", j + 1, float(c)))
    return np.vstack([r if r.ndim == 2 else r[None, :] for r in rows]), labels


def _simplified_deviations(agent: int, scalars: np.ndarray, grid: DeviationGrid):
    top = float(scalars.max(initial=0.0))
    npts = int(np.floor(top / grid.step)) + 1
    uniform = np.arange(npts) * grid.step
    eps = np.asarray(grid.epsilons)
    rivals = np.delete(scalars, agent)
    cand = np.concatenate([[scalars[agent]], uniform, rivals,
                           (rivals[:, None] + eps[None, :]).ravel()])
    labels = [("scalar", 0, float(c)) for c in cand]
    labels[0] = ("stay", 0, float(scalars[agent]))
    return cand, labels


def _format_deviation(label) -> str:
    kind, depth, price = label
    if kind == "stay":
        return "no deviation"
    if kind == "flat":
        return f"bid {price:.9g} on positions 1..{depth}, zero below"
    if kind == "coord":
        return f"move the bid on position {depth} to {price:.9g}"
    return f"scalar bid {price:.9g}"


def verify_nash(bids, tie_hint: Optional[Mapping[int, int]], values: ValueProfile,
                spec: MechanismSpec, curve: SlotCurve, grid: DeviationGrid,
                tol: float) -> NashReport:
    """Search the structured deviation space for a profitable unilateral move.

    For each agent and each target position j the search tries every candidate
    price (the position's winning bid plus the epsilon ladder, and a uniform
    grid over [0, max bid]) bid flat on positions 1..j and zero below, plus a
    coarse per-coordinate perturbation fallback.  The mechanism, including the
    tie hints, is held fixed while a single agent's bid is replaced.
    """
    base_outcome = run_auction(spec, bids, curve, values, tie_hint)
    k = curve.k
    n = values.n
    if spec.bid_space == "simplified":
        base_matrix = bids.expand().bids
        scalars = bids.bids
    else:
        base_matrix = bids.bids
        scalars = None
    alphas = spec.scaling.alphas if spec.bid_space == "simplified" else None

    max_gain = -np.inf
    worst = None
    for agent in range(n):
        if scalars is None:
            rows, labels = _expressive_deviations(agent, base_matrix,
                                                  base_outcome.assignment, grid, k)
        else:
            cand, labels = _simplified_deviations(agent, scalars, grid)
            rows = cand[:, None] * alphas[None, :]
        nb = rows.shape[0]
        tensor = np.broadcast_to(base_matrix, (nb,) + base_matrix.shape).copy()
        tensor[:, agent, :] = rows
        assign = _batched_greedy(tensor, tie_hint)
        welfare_without = (
            _greedy_bid_welfare(np.delete(base_matrix, agent, axis=0), k)
            if spec.payment_rule == "vcg"
            else 0.0
        )
        utils = _batched_agent_utility(agent, tensor, assign, values, curve,
                                       spec.payment_rule, welfare_without)
        gains = utils - base_outcome.utilities[agent]
        idx = int(np.argmax(gains))
        if gains[idx] > max_gain:
            max_gain = float(gains[idx])
            worst = (agent, _format_deviation(labels[idx]), float(gains[idx]))

    efficiency = is_efficient(base_outcome.assignment, values, curve)
    floor_ok = (
        check_payment_floor(base_outcome, values, curve, tol) if efficiency else False
    )
    ok = max_gain <= tol
    return NashReport(
        is_equilibrium=ok,
        max_gain=max_gain,
        worst_violation=None if ok else worst,
        efficiency_flag=efficiency,
        payment_floor_ok=floor_ok,
    )
