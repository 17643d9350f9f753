"""Pure numpy/Python implementations of the hot kernels.

These are the reference implementations; the optional compiled extension in
``_fast.pyx`` mirrors this API exactly and is preferred at import time when
available (see :mod:`posauction.kernels`).
"""

from __future__ import annotations

import numpy as np

from .quadrature import QuadratureConfig, integrate


def greedy_assign_batch(bids: np.ndarray) -> np.ndarray:
    """Greedy allocation of a batch of auctions.

    ``bids`` has shape (rounds, agents, positions).  Returns an int64 array of
    shape (rounds, positions) holding the winning agent per position, -1 where
    the agents ran out.  Exact ties go to the lowest agent index.
    """
    bids = np.asarray(bids, dtype=np.float64)
    nrounds, n, k = bids.shape
    assign = np.full((nrounds, k), -1, dtype=np.int64)
    taken = np.zeros((nrounds, n), dtype=bool)
    rows = np.arange(nrounds)
    for j in range(min(n, k)):
        col = np.where(taken, -np.inf, bids[:, :, j])
        winner = np.argmax(col, axis=1)
        assign[:, j] = winner
        taken[rows, winner] = True
    return assign


def vcg_truthful_revenue_batch(values: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Total truthful VCG revenue per round for a batch of value draws.

    Uses the closed form sum_j p_j = sum_s s (beta_s - beta_{s+1}) v_(s+1)
    with the virtual beta_{k+1} = 0 and v_(m) = 0 beyond the agent count.
    """
    values = np.asarray(values, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    nrounds, n = values.shape
    k = betas.size
    srt = -np.sort(-values, axis=1)
    ext = np.zeros((nrounds, k + 1))
    take = min(n, k + 1)
    ext[:, :take] = srt[:, :take]
    bnext = np.append(betas[1:], 0.0)
    weights = np.arange(1, k + 1) * (betas - bnext)
    return ext[:, 1 : k + 1] @ weights


def _piecewise(dist, g, v: float, cfg: QuadratureConfig) -> float:
    """Integrate g over [0, v], splitting at the distribution's kink points.

    Panel edges are nudged off the kinks so Simpson never samples a point
    where the density is double-valued; the skipped slivers are ~1e-13 wide.
    """
    pts = dist.breakpoints() if hasattr(dist, "breakpoints") else None
    if pts is None:
        return integrate(g, 0.0, v, cfg)
    cuts = [float(p) for p in np.asarray(pts) if 0.0 < p < v]
    if not cuts:
        return integrate(g, 0.0, v, cfg)
    nudge = 1e-13 * max(v, 1.0)
    edges = [0.0, *cuts, v]
    total = 0.0
    for idx, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        lo = a + nudge if idx > 0 else a
        hi = b - nudge if idx < len(edges) - 2 else b
        total += integrate(g, lo, hi, cfg)
    return total


def z_raw(dist, m: int, v: float, Fv: float, cfg: QuadratureConfig) -> float:
    """Integral of (F(u)/F(v))^m over [0, v]."""

    def g(u: float) -> float:
        return (float(dist.cdf(u)) / Fv) ** m

    return _piecewise(dist, g, v, cfg)


def bstar_raw(dist, exps_f, exps_g, coeffs, v: float, Fv: float, cfg: QuadratureConfig) -> float:
    """Expected-payment integrand for one position, integrated over [0, v].

    The integrand is sum_t coeffs[t] * w^exps_f[t] * (1-w)^exps_g[t] * f(u)/F(v) * u
    with w = F(u)/F(v).  Vanishes at u = 0 even when the density blows up there.
    """
    exps_f = [int(e) for e in exps_f]
    exps_g = [int(e) for e in exps_g]
    coeffs = [float(c) for c in coeffs]

    def g(u: float) -> float:
        if u <= 0.0:
            return 0.0
        w = float(dist.cdf(u)) / Fv
        acc = 0.0
        for c, ef, eg in zip(coeffs, exps_f, exps_g):
            acc += c * w**ef * (1.0 - w) ** eg
        return acc * (float(dist.pdf(u)) / Fv) * u

    return _piecewise(dist, g, v, cfg)
